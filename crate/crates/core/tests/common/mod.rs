#![allow(dead_code)]

use prtail_core::graph::{histogram_mean, Histogram};

/// Out-degree histogram with the moments of a small web crawl: 0.6%
/// dangling nodes, mean 8.2 and `sum_j p_j j^-0.1 = 0.8558`.
pub fn web_like_hist() -> Histogram {
    let p0 = 0.006;
    let raw: Vec<(u64, f64)> = (1..=5000u64)
        .map(|j| {
            (
                j,
                (j as f64).powf(-0.49903088) * (-(j as f64) / 12.79230688540986).exp(),
            )
        })
        .collect();
    let total: f64 = raw.iter().map(|(_, w)| w).sum();
    let mut hist: Histogram = raw
        .into_iter()
        .map(|(j, w)| (j, (1.0 - p0) * w / total))
        .filter(|&(_, p)| p > 0.0)
        .collect();
    hist.insert(0, p0);
    let b = prtail_core::theory::b_coefficient(&hist, 1.1);
    assert!(
        (histogram_mean(&hist) - 8.2).abs() < 1e-3,
        "mean {}",
        histogram_mean(&hist)
    );
    assert!((b - 0.8558).abs() < 1e-3, "b {b}");
    hist
}
