//! Closed-form tail coefficients.
//!
//! If in-degrees are regularly varying with cumulative index `alpha`, the
//! PageRank after `k` power iterations satisfies
//! `P(R_k > x) ~ C_k P(N > x)` with
//!
//! ```text
//! C_k = (c (1 - p0) / d)^alpha * sum_{j < k} (c^alpha b)^j,
//! b   = sum_{j >= 1} p_j j^(1 - alpha),
//! C   = lim C_k = (c (1 - p0) / d)^alpha / (1 - c^alpha b).
//! ```
//!
//! On log-log axes the PageRank tail is therefore the in-degree line shifted
//! down by `log10 C`.

use serde::{Deserialize, Serialize};

use crate::graph::{histogram_mass, DegreeProfile, Histogram};
use crate::tail::TailFit;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryParams {
    /// Damping factor.
    pub c: f64,
    /// Cumulative in-degree tail exponent.
    pub alpha: f64,
    /// Mean degree.
    pub d: f64,
    /// Dangling fraction.
    pub p0: f64,
    /// `sum_j p_j j^(1 - alpha)`.
    pub b: f64,
}

impl TheoryParams {
    /// Validates the parameters; the geometric ratio `c^alpha b` must be < 1.
    pub fn new(c: f64, alpha: f64, d: f64, p0: f64, b: f64) -> Result<Self> {
        let mut problems = Vec::new();
        if !(c > 0.0 && c < 1.0) {
            problems.push(format!("c must lie in (0, 1), got {c}"));
        }
        if !(alpha >= 1.0 && alpha.is_finite()) {
            problems.push(format!("alpha must be >= 1, got {alpha}"));
        }
        if !(d > 0.0 && d.is_finite()) {
            problems.push(format!("d must be positive, got {d}"));
        }
        if !(0.0..1.0).contains(&p0) {
            problems.push(format!("p0 must lie in [0, 1), got {p0}"));
        }
        if !(b >= 0.0 && b.is_finite()) {
            problems.push(format!("b must be non-negative, got {b}"));
        }
        if !problems.is_empty() {
            return Err(Error::Validation(problems));
        }
        let params = Self { c, alpha, d, p0, b };
        let ratio = params.ratio();
        if ratio >= 1.0 {
            return Err(Error::SeriesDiverges { ratio });
        }
        Ok(params)
    }

    /// Derives `p0` and `b` from an out-degree histogram.
    pub fn from_histogram(c: f64, alpha: f64, d: f64, p_hist: &Histogram) -> Result<Self> {
        let mass = histogram_mass(p_hist);
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(vec![format!(
                "out-degree histogram sums to {mass}, expected 1"
            )]));
        }
        let p0 = p_hist.get(&0).copied().unwrap_or(0.0);
        Self::new(c, alpha, d, p0, b_coefficient(p_hist, alpha))
    }

    pub fn from_profile(c: f64, alpha: f64, profile: &DegreeProfile) -> Result<Self> {
        Self::from_histogram(c, alpha, profile.d, &profile.p_hist)
    }

    /// `C_1 = (c (1 - p0) / d)^alpha`, evaluated in the log domain.
    pub fn leading_coefficient(&self) -> f64 {
        (self.alpha * (self.c.ln() + (1.0 - self.p0).ln() - self.d.ln())).exp()
    }

    /// Geometric ratio `c^alpha b` between consecutive terms of `C_k`.
    pub fn ratio(&self) -> f64 {
        (self.alpha * self.c.ln()).exp() * self.b
    }
}

/// `b = sum_{j >= 1} p_j j^(1 - alpha)`.
pub fn b_coefficient(p_hist: &Histogram, alpha: f64) -> f64 {
    p_hist
        .iter()
        .filter(|(&j, _)| j > 0)
        .map(|(&j, &p)| p * (j as f64).powf(1.0 - alpha))
        .sum()
}

/// `C_k` for `k >= 1` (the finite geometric sum, term by term).
pub fn coefficient_ck(params: &TheoryParams, k: usize) -> f64 {
    let ratio = params.ratio();
    let mut term = 1.0;
    let mut sum = 0.0;
    for _ in 0..k {
        sum += term;
        term *= ratio;
    }
    params.leading_coefficient() * sum
}

/// The limit `C = lim_k C_k`.
pub fn coefficient_c(params: &TheoryParams) -> Result<f64> {
    let ratio = params.ratio();
    if ratio >= 1.0 {
        return Err(Error::SeriesDiverges { ratio });
    }
    Ok(params.leading_coefficient() / (1.0 - ratio))
}

/// `C` evaluated with every non-dangling node at out-degree `d`, which by
/// Jensen's inequality bounds `C` from below.
pub fn coefficient_lower_bound(params: &TheoryParams) -> Result<f64> {
    let TheoryParams {
        c, alpha, d, p0, ..
    } = *params;
    let b_min = jensen_b_min(alpha, d, p0);
    let denom = 1.0 - (alpha * c.ln()).exp() * b_min;
    if !(denom > 0.0) {
        return Err(Error::Degenerate(format!(
            "lower-bound denominator {denom} is not positive"
        )));
    }
    Ok(params.leading_coefficient() / denom)
}

/// Smallest `b` compatible with `d` and `p0`: `(1 - p0)^alpha d^(1 - alpha)`.
pub fn jensen_b_min(alpha: f64, d: f64, p0: f64) -> f64 {
    (alpha * (1.0 - p0).ln() + (1.0 - alpha) * d.ln()).exp()
}

/// Conditional mean PageRank of a node with in-degree `in_degree`:
/// `c (1 - p0) / d * N + 1 - c (1 - p0)`.
pub fn mean_field(in_degree: f64, params: &TheoryParams) -> f64 {
    let TheoryParams { c, d, p0, .. } = *params;
    c * (1.0 - p0) / d * in_degree + 1.0 - c * (1.0 - p0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
}

/// PageRank line predicted from an in-degree fit: same slope, intercept
/// shifted by `log10 C`.
pub fn predict_line(indegree_fit: &TailFit, c_value: f64) -> Result<Line> {
    if !(c_value > 0.0) {
        return Err(Error::invalid(format!(
            "coefficient must be positive, got {c_value}"
        )));
    }
    Ok(Line {
        slope: -indegree_fit.alpha_hat,
        intercept: indegree_fit.intercept + c_value.log10(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub params: TheoryParams,
    pub b: f64,
    /// `c_k[k - 1]` is `C_k`.
    pub c_k: Vec<f64>,
    pub c_limit: f64,
    pub c_lower_bound: f64,
    pub log10_c_k: Vec<f64>,
    pub log10_c_limit: f64,
}

impl CoefficientTable {
    pub fn new(params: &TheoryParams, k_max: usize) -> Result<Self> {
        let c_k: Vec<f64> = (1..=k_max).map(|k| coefficient_ck(params, k)).collect();
        let c_limit = coefficient_c(params)?;
        Ok(Self {
            params: *params,
            b: params.b,
            log10_c_k: c_k.iter().map(|c| c.log10()).collect(),
            c_k,
            c_limit,
            c_lower_bound: coefficient_lower_bound(params)?,
            log10_c_limit: c_limit.log10(),
        })
    }

    /// `C_k`, or `None` beyond the tabulated range.
    pub fn get(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.c_k.get(i)).copied()
    }
}
