use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Mean of `R` over the samples sharing in-degree `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalMean {
    pub n: u64,
    pub count: usize,
    pub mean: f64,
}

/// Groups `rs` by the matching in-degree in `ns` and averages each group.
/// Groups with fewer than `min_count` members are dropped.
pub fn binned_conditional_means(ns: &[u64], rs: &[f64], min_count: usize) -> Vec<ConditionalMean> {
    assert_eq!(ns.len(), rs.len(), "in-degrees and scores differ in length");
    let mut bins: BTreeMap<u64, (usize, f64)> = BTreeMap::new();
    for (&n, &r) in ns.iter().zip(rs) {
        let e = bins.entry(n).or_default();
        e.0 += 1;
        e.1 += r;
    }
    bins.into_iter()
        .filter(|&(_, (count, _))| count >= min_count.max(1))
        .map(|(n, (count, sum))| ConditionalMean {
            n,
            count,
            mean: sum / count as f64,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination.
    pub r2: f64,
}

/// Ordinary least squares `y = slope * x + intercept`.
///
/// Returns `None` with fewer than two distinct `x` values.
pub fn fit_affine(points: &[(f64, f64)]) -> Option<AffineFit> {
    let m = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = points
        .iter()
        .map(|&(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Some(AffineFit {
        slope,
        intercept,
        r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins_average_by_indegree() {
        let ns = [0, 1, 1, 2, 2, 2];
        let rs = [1.0, 2.0, 4.0, 3.0, 3.0, 6.0];
        let bins = binned_conditional_means(&ns, &rs, 2);
        assert_eq!(bins.len(), 2);
        assert_eq!((bins[0].n, bins[0].count, bins[0].mean), (1, 2, 3.0));
        assert_eq!((bins[1].n, bins[1].count, bins[1].mean), (2, 3, 4.0));
    }

    #[test]
    fn exact_line_is_recovered() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 0.25 * i as f64 + 0.6)).collect();
        let fit = fit_affine(&pts).unwrap();
        assert!((fit.slope - 0.25).abs() < 1e-12);
        assert!((fit.intercept - 0.6).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_affine(&[(1.0, 2.0)]).is_none());
        assert!(fit_affine(&[(1.0, 2.0), (1.0, 3.0)]).is_none());
    }
}
