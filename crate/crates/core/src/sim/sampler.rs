use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Pareto, Poisson};

use crate::graph::Histogram;
use crate::{Error, Result};

/// Above this rate a Poisson draw is replaced by its (rounded) mean; the
/// relative spread is below 1e-7 there.
const POISSON_DETERMINISTIC_RATE: f64 = 1e14;

/// Mixed-Poisson in-degree law `N(T)`: `T` is Pareto with index `alpha` and
/// scale `t_min = mean (alpha - 1) / alpha`, so that `E(N) = E(T) = mean`.
#[derive(Debug, Clone)]
pub struct InDegreeLaw {
    alpha: f64,
    t_min: f64,
    rate: Pareto<f64>,
}

impl InDegreeLaw {
    pub fn new(alpha: f64, mean: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!(
                "in-degree tail index must exceed 1 for a finite mean, got {alpha}"
            )));
        }
        if !(mean > 0.0 && mean.is_finite()) {
            return Err(Error::invalid(format!(
                "mean in-degree must be positive, got {mean}"
            )));
        }
        let t_min = mean * (alpha - 1.0) / alpha;
        let rate = Pareto::new(t_min, alpha).map_err(|e| Error::invalid(e.to_string()))?;
        Ok(Self { alpha, t_min, rate })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn t_min(&self) -> f64 {
        self.t_min
    }

    /// Draws the Poisson rate `T`.
    pub fn sample_rate<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.rate.sample(rng)
    }

    /// Draws `N ~ Poisson(T)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let t = self.sample_rate(rng);
        poisson(t, rng)
    }

    /// Exact tail of the rate, `P(T > x) = (x / t_min)^-alpha` for `x >= t_min`.
    pub fn rate_tail(&self, x: f64) -> f64 {
        if x <= self.t_min {
            1.0
        } else {
            (-self.alpha * (x / self.t_min).ln()).exp()
        }
    }
}

pub(crate) fn poisson<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> u64 {
    if rate >= POISSON_DETERMINISTIC_RATE {
        return rate.round() as u64;
    }
    // `rate` is finite and positive here, well below the sampler's limit.
    Poisson::new(rate)
        .expect("rate within Poisson range")
        .sample(rng) as u64
}

/// Alias-table sampler over a finite discrete support.
#[derive(Debug, Clone)]
pub struct DiscreteSampler {
    support: Vec<u64>,
    alias: WeightedAliasIndex<f64>,
}

impl DiscreteSampler {
    /// `weights` need not be normalized; zero weights are dropped.
    pub fn new(weights: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        let (support, w): (Vec<u64>, Vec<f64>) =
            weights.into_iter().filter(|&(_, w)| w > 0.0).unzip();
        if support.is_empty() {
            return Err(Error::Degenerate("no positive weights".into()));
        }
        let alias = WeightedAliasIndex::new(w).map_err(|e| Error::invalid(e.to_string()))?;
        Ok(Self { support, alias })
    }

    /// Effective out-degree law `q_j ∝ j p_j`, `j >= 1`.
    pub fn effective_outdegree(p_hist: &Histogram) -> Result<Self> {
        Self::new(
            p_hist
                .iter()
                .filter(|(&j, _)| j > 0)
                .map(|(&j, &p)| (j, j as f64 * p)),
        )
        .map_err(|_| Error::Degenerate("all out-degree mass sits at j = 0".into()))
    }

    /// Plain out-degree law `p_j`, including `j = 0`.
    pub fn outdegree(p_hist: &Histogram) -> Result<Self> {
        Self::new(p_hist.iter().map(|(&j, &p)| (j, p)))
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.support[self.alias.sample(rng)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    #[test]
    fn scale_gives_requested_mean() {
        let law = InDegreeLaw::new(1.1, 8.2).unwrap();
        assert!((law.t_min() - 8.2 * 0.1 / 1.1).abs() < 1e-15);
        // E(T) = alpha t_min / (alpha - 1).
        assert!((law.alpha() * law.t_min() / (law.alpha() - 1.0) - 8.2).abs() < 1e-12);
        assert!(InDegreeLaw::new(1.0, 2.0).is_err());
        assert!(InDegreeLaw::new(2.0, 0.0).is_err());
    }

    #[test]
    fn indegree_mean_with_finite_variance() {
        // alpha = 3: Var(N) = Var(T) + E(T) is finite.
        let law = InDegreeLaw::new(3.0, 4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws: Vec<f64> = (0..1_000_000)
            .map(|_| law.sample(&mut rng) as f64)
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / draws.len() as f64;
        let se = (var / draws.len() as f64).sqrt();
        assert!((mean - 4.0).abs() < 5.0 * se, "{mean} ± {se}");
    }

    #[test]
    fn zero_count_matches_laplace_transform() {
        // alpha = 2, d = 2 gives t_min = 1: P(N = 0) = E(exp(-T)).
        let law = InDegreeLaw::new(2.0, 2.0).unwrap();
        assert!((law.t_min() - 1.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 10_000_000;
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n {
            let e = (-law.sample_rate(&mut rng)).exp();
            sum += e;
            sum_sq += e * e;
        }
        let oracle = sum / n as f64;
        let oracle_var = sum_sq / n as f64 - oracle * oracle;
        let m = 1_000_000;
        let zeros = (0..m).filter(|_| law.sample(&mut rng) == 0).count() as f64 / m as f64;
        let se = (zeros * (1.0 - zeros) / m as f64 + oracle_var / n as f64).sqrt();
        assert!(
            (zeros - oracle).abs() < 3.0 * se,
            "{zeros} vs {oracle} (se {se})"
        );
    }

    #[test]
    fn indegree_tail_follows_rate_tail() {
        let law = InDegreeLaw::new(1.1, 8.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws: Vec<f64> = (0..1_000_000)
            .map(|_| law.sample(&mut rng) as f64)
            .collect();
        let fit = crate::tail::fit_exponent_mle(&draws, 100.0).unwrap();
        assert!((fit.alpha_hat - 1.1).abs() < 0.05, "{}", fit.alpha_hat);
        for x in [100.0, 300.0, 1000.0] {
            let emp = draws.iter().filter(|&&v| v > x).count() as f64 / draws.len() as f64;
            let ratio = emp / law.rate_tail(x);
            assert!((0.85..1.15).contains(&ratio), "x={x}: {ratio}");
        }
    }

    #[test]
    fn effective_outdegree_constant() {
        let s = DiscreteSampler::effective_outdegree(&BTreeMap::from([(1, 1.0)])).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!((0..1000).all(|_| s.sample(&mut rng) == 1));
    }

    #[test]
    fn effective_outdegree_frequencies() {
        let hist = BTreeMap::from([(1, 0.5), (3, 0.5)]);
        let s = DiscreteSampler::effective_outdegree(&hist).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 1_000_000;
        let ones = (0..n).filter(|_| s.sample(&mut rng) == 1).count() as f64 / n as f64;
        let sigma = (0.25f64 * 0.75 / n as f64).sqrt();
        assert!((ones - 0.25).abs() < 3.0 * sigma, "{ones}");
    }

    #[test]
    fn effective_outdegree_inverse_mean() {
        let hist = BTreeMap::from([(0, 0.2), (1, 0.3), (2, 0.1), (7, 0.4)]);
        let d = crate::graph::histogram_mean(&hist);
        let s = DiscreteSampler::effective_outdegree(&hist).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 1_000_000;
        let inv: Vec<f64> = (0..n).map(|_| 1.0 / s.sample(&mut rng) as f64).collect();
        let mean = inv.iter().sum::<f64>() / n as f64;
        let var = inv.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let sigma = (var / n as f64).sqrt();
        assert!(
            (mean - 0.8 / d).abs() < 3.0 * sigma,
            "{mean} vs {}",
            0.8 / d
        );
    }

    #[test]
    fn all_dangling_histogram_is_rejected() {
        assert!(DiscreteSampler::effective_outdegree(&BTreeMap::from([(0, 1.0)])).is_err());
    }
}
