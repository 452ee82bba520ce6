//! Empirical tails and power-law fits.
//!
//! All fits work in log10 space. The exponent reported as `alpha` is the
//! cumulative one: `P(X > x) ≈ 10^intercept * x^-alpha` for `x >= x_min`,
//! so a density exponent of 2.1 shows up here as 1.1.

use std::io::{BufWriter, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Minimum number of samples at or above `x_min` for an exponent fit.
pub const MIN_TAIL_SAMPLES: usize = 10;

/// Sample count below which [`choose_xmin`] falls back to the median.
pub const MIN_XMIN_SAMPLES: usize = 100;

/// Band of exceedance fractions accepted by [`choose_xmin`].
pub const XMIN_EXCEEDANCE_BAND: (f64, f64) = (0.01, 0.10);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CcdfPoint {
    pub x: f64,
    /// Fraction of all samples strictly greater than `x`.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcdfSeries {
    /// Ascending in `x`, strictly decreasing in `fraction`.
    pub points: Vec<CcdfPoint>,
    pub source_count: usize,
}

fn check_values(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Degenerate("no values".into()));
    }
    if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::invalid(format!(
            "values must be finite and non-negative, found {bad}"
        )));
    }
    Ok(())
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// Empirical complementary CDF with the strict `P(X > x)` convention.
///
/// Zeros count toward the denominator but get no point of their own, and the
/// point at the maximum (fraction 0) is omitted.
pub fn ccdf(values: &[f64]) -> Result<CcdfSeries> {
    check_values(values)?;
    let v = sorted(values);
    if *v.last().unwrap() == 0.0 {
        return Err(Error::Degenerate("all values are zero".into()));
    }
    let n = v.len();
    let mut points = Vec::new();
    let mut i = 0;
    while i < n {
        let x = v[i];
        let mut j = i + 1;
        while j < n && v[j] == x {
            j += 1;
        }
        if x > 0.0 && j < n {
            points.push(CcdfPoint {
                x,
                fraction: (n - j) as f64 / n as f64,
            });
        }
        i = j;
    }
    if points.is_empty() {
        log::warn!("CCDF is empty: every positive value equals the maximum");
    }
    Ok(CcdfSeries {
        points,
        source_count: n,
    })
}

impl CcdfSeries {
    /// Empirical `P(X > x)` at an arbitrary `x`.
    pub fn fraction_above(&self, x: f64) -> f64 {
        // Last point with point.x <= x carries P(X > point.x) = P(X > x)
        // because no sample lies strictly between consecutive points.
        match self.points.partition_point(|p| p.x <= x) {
            0 => f64::NAN,
            k => self.points[k - 1].fraction,
        }
    }

    /// Least-squares intercept of `log10 P(X > x) = -alpha * log10 x + beta`
    /// over the points with `x >= x_min`, slope held fixed.
    pub fn pinned_intercept(&self, x_min: f64, alpha: f64) -> Option<f64> {
        let (sum, count) = self
            .points
            .iter()
            .filter(|p| p.x >= x_min)
            .fold((0.0, 0usize), |(s, c), p| {
                (s + p.fraction.log10() + alpha * p.x.log10(), c + 1)
            });
        (count > 0).then(|| sum / count as f64)
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = BufWriter::new(sink);
        writeln!(w, "x,ccdf")?;
        for p in &self.points {
            writeln!(w, "{},{}", p.x, p.fraction)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    #[serde(rename = "alpha")]
    pub alpha_hat: f64,
    pub x_min: f64,
    /// log10 intercept of the fitted line at slope `-alpha_hat`.
    pub intercept: f64,
    pub tail_count: usize,
}

impl TailFit {
    /// Large-sample standard error of `alpha_hat`.
    pub fn std_error(&self) -> f64 {
        self.alpha_hat / (self.tail_count as f64).sqrt()
    }
}

/// Continuous maximum-likelihood power-law fit above `x_min`.
///
/// With `n` samples `x_i >= x_min`, the density exponent is
/// `1 + n / sum ln(x_i / x_min)`; the cumulative exponent is one less.
pub fn fit_exponent_mle(values: &[f64], x_min: f64) -> Result<TailFit> {
    let series = ccdf(values)?;
    fit_with_series(values, &series, x_min)
}

/// As [`fit_exponent_mle`], reusing an already computed CCDF of `values`.
pub fn fit_with_series(values: &[f64], series: &CcdfSeries, x_min: f64) -> Result<TailFit> {
    if !(x_min > 0.0 && x_min.is_finite()) {
        return Err(Error::invalid(format!(
            "x_min must be positive, got {x_min}"
        )));
    }
    let (log_sum, tail_count) = values
        .iter()
        .filter(|&&x| x >= x_min)
        .fold((0.0, 0usize), |(s, c), &x| (s + (x / x_min).ln(), c + 1));
    if tail_count < MIN_TAIL_SAMPLES {
        return Err(Error::InsufficientTail {
            count: tail_count,
            required: MIN_TAIL_SAMPLES,
        });
    }
    if !(log_sum > 0.0) {
        return Err(Error::Degenerate(format!(
            "all {tail_count} tail samples equal x_min = {x_min}"
        )));
    }
    let alpha_hat = tail_count as f64 / log_sum;
    let intercept = series
        .pinned_intercept(x_min, alpha_hat)
        .ok_or_else(|| Error::Degenerate("no CCDF points above x_min".into()))?;
    Ok(TailFit {
        alpha_hat,
        x_min,
        intercept,
        tail_count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XminChoice {
    pub x_min: f64,
    /// Set when the heuristic fell back to the median.
    pub degenerate: bool,
}

/// Tail threshold heuristic: the smallest distinct value `x` with at most 10%
/// of the samples above it, provided at least 1% still are. Otherwise (or with
/// fewer than 100 samples) the median, flagged as degenerate.
pub fn choose_xmin(values: &[f64]) -> XminChoice {
    let v = sorted(values);
    let n = v.len();
    let median = if n == 0 { f64::NAN } else { v[n / 2] };
    let fallback = XminChoice {
        x_min: median,
        degenerate: true,
    };
    if n < MIN_XMIN_SAMPLES {
        return fallback;
    }
    let (lo, hi) = XMIN_EXCEEDANCE_BAND;
    // Walk distinct values; `above` = samples strictly greater than v[i].
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && v[j] == v[i] {
            j += 1;
        }
        let above = (n - j) as f64 / n as f64;
        if v[i] > 0.0 && above <= hi {
            return if above >= lo {
                XminChoice {
                    x_min: v[i],
                    degenerate: false,
                }
            } else {
                fallback
            };
        }
        i = j;
    }
    fallback
}
