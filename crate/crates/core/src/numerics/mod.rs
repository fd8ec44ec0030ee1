//! Special functions, distributions and search helpers. Probabilities that can
//! underflow are carried as natural logarithms.

pub mod binomial;
pub mod ncx2;
pub mod optim;
pub mod quad;
pub mod rng;
pub mod special;

pub use ncx2::{ncx2_cdf, ncx2_quantile, Tail};
pub use rng::Seed;
pub use special::{gamma_cdf, log_q, q_func, q_inv};

use serde::{Deserialize, Serialize};

/// Natural log of a probability.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct LogProb(pub f64);

impl LogProb {
    pub const ONE: LogProb = LogProb(0.0);
    pub const ZERO: LogProb = LogProb(f64::NEG_INFINITY);

    pub fn from_prob(p: f64) -> LogProb {
        LogProb(p.ln())
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn prob(self) -> f64 {
        self.0.exp()
    }

    /// Whether the value is a valid log-probability up to `1e-12` slack.
    pub fn is_valid(self) -> bool {
        !self.0.is_nan() && self.0 <= 1e-12
    }
}

/// Berry–Esseen band for `P[S_n > threshold]`, `S_n` a sum of `n` i.i.d.
/// variables with the given mean, variance and third absolute central moment.
/// Returns `(lower, upper)` clamped to `[0, 1]`.
pub fn berry_esseen_normal_tail(n: u64, mean: f64, var: f64, third_abs_moment: f64, threshold: f64) -> (f64, f64) {
    assert!(var > 0.0 && n >= 1);
    let nf = n as f64;
    let sd = var.sqrt();
    let z = (threshold - nf * mean) / (sd * nf.sqrt());
    let c = 0.56 * third_abs_moment / (sd * sd * sd);
    let q = q_func(z);
    let w = c / nf.sqrt();
    ((q - w).max(0.0), (q + w).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn berry_esseen_contains_exact_binomial() {
        let n = 100u64;
        for t in 30..70 {
            let thr = t as f64 + 0.5;
            // P[S > thr] = P[S ≥ t+1]
            let exact = binomial::log_sf(t + 1, n, 0.5).exp();
            let (lo, hi) = berry_esseen_normal_tail(n, 0.5, 0.25, 0.125, thr);
            assert!(lo <= exact && exact <= hi, "{t}");
            let exact_at = binomial::log_sf(t, n, 0.5).exp() - binomial::log_pmf(t, n, 0.5).exp();
            let (lo, hi) = berry_esseen_normal_tail(n, 0.5, 0.25, 0.125, t as f64);
            assert!(lo <= exact_at && exact_at <= hi);
        }
    }

    #[test]
    fn berry_esseen_band_width() {
        let (lo, hi) = berry_esseen_normal_tail(25, 0.0, 1.0, 2.0, 0.0);
        assert!(((hi - lo) - 2.0 * 0.56 * 2.0 / 5.0).abs() < 1e-15);
        let (lo, hi) = berry_esseen_normal_tail(100_000_000, 0.0, 1.0, 1.0, 0.0);
        assert!(hi - lo < 2e-4 && lo < 0.5 && hi > 0.5);
    }
}
