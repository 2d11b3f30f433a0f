use serde::{Deserialize, Serialize};

use crate::error::{QdsError, Result};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.96;

/// A Monte Carlo event rate with its 95% Wilson score interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub successes: u64,
    pub trials: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Estimate {
    pub fn new(successes: u64, trials: u64) -> Result<Self> {
        let (ci_low, ci_high) = wilson_interval(successes, trials)?;
        Ok(Estimate {
            successes,
            trials,
            rate: successes as f64 / trials as f64,
            ci_low,
            ci_high,
        })
    }

    /// Binomial standard error of the rate if the true probability is `p`.
    pub fn sigma_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// `|rate − p| ≤ k·σ(p)`.
    pub fn agrees_with(&self, p: f64, k: f64) -> bool {
        (self.rate - p).abs() <= k * self.sigma_at(p)
    }

    /// One-sided check `rate ≤ bound + k·σ(bound)`.
    pub fn respects_bound(&self, bound: f64, k: f64) -> bool {
        let b = bound.min(1.0);
        self.rate <= b + k * self.sigma_at(b)
    }
}

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(QdsError::param("trials", "must be at least 1"));
    }
    if successes > trials {
        return Err(QdsError::param(
            "successes",
            format!("{successes} exceeds the {trials} trials"),
        ));
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // clamp against rounding at the edges so the interval always holds the point estimate
    let low = if successes == 0 { 0.0 } else { (centre - half).clamp(0.0, p) };
    let high = if successes == trials { 1.0 } else { (centre + half).clamp(p, 1.0) };
    Ok((low, high))
}

/// One-sided Hoeffding bound `exp(−2t²L)` on a mean of `L` variables in `[0, 1]`
/// exceeding its expectation by `t`.
pub fn hoeffding_bound(t: f64, length: usize) -> f64 {
    (-2.0 * t * t * length as f64).exp()
}

/// Two-sided variant `min(1, 2·exp(−2t²L))`.
pub fn hoeffding_two_sided(t: f64, length: usize) -> f64 {
    (2.0 * hoeffding_bound(t, length)).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_interval(0, 100).unwrap();
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);

        let (lo, hi) = wilson_interval(50, 100).unwrap();
        assert!(((lo + hi) / 2.0 - 0.5).abs() < 1e-12);
        assert!(hi - lo < 0.2);

        let (lo, hi) = wilson_interval(10, 1000).unwrap();
        assert!((lo - 0.005_440_695_309_270_556).abs() < 1e-12);
        assert!((hi - 0.018_309_665_305_392_155).abs() < 1e-12);

        let (lo, hi) = wilson_interval(1, 1).unwrap();
        assert!(lo > 0.0 && hi == 1.0);
        assert!(wilson_interval(0, 0).is_err());
        assert!(wilson_interval(3, 2).is_err());
    }

    #[test]
    fn hoeffding_examples() {
        assert_eq!(hoeffding_bound(0.0, 100), 1.0);
        assert!((hoeffding_bound(0.1, 100) - 0.135_335_283_236_612_7).abs() < 1e-15);
        assert_eq!(hoeffding_two_sided(0.0, 10), 1.0);
        assert!((hoeffding_two_sided(0.1, 100) - 0.270_670_566_473_225_4).abs() < 1e-15);
    }

    #[test]
    fn estimate_helpers() {
        let e = Estimate::new(30, 100).unwrap();
        assert_eq!(e.rate, 0.3);
        assert!(e.ci_low <= e.rate && e.rate <= e.ci_high);
        assert!(e.agrees_with(0.3, 1.0));
        assert!(!e.agrees_with(0.6, 4.0));
        assert!(e.respects_bound(0.3, 0.0));
        assert!(!e.respects_bound(0.1, 4.0));
    }
}
