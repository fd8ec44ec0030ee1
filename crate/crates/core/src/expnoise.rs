//! Additive exponential-noise channel `Y = X + Z`, `Z ~ Exp(1)`, with inputs
//! `x_i ≥ 0` and `Σ x_i ≤ nσ`. The auxiliary output law is the
//! capacity-achieving `Exp(1+σ)^n`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::bound::{BoundKind, BoundResult};
use crate::error::{Error, Result};
use crate::numerics::binomial;
use crate::numerics::optim::{grid_then_golden, log_grid};
use crate::numerics::special::{gamma_quantile_log, log_gamma_pq, log_interval_mass, log_sum_exp, q_inv};

/// Default number of τ grid points.
pub const EXP_GRID: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpSpec {
    pub n: usize,
    /// Mean-input constraint.
    pub sigma: f64,
    pub eps: f64,
}

impl ExpSpec {
    pub fn new(n: usize, sigma: f64, eps: f64) -> Result<ExpSpec> {
        if n == 0 {
            return Err(Error::Invalid("blocklength must be positive".into()));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Invalid(format!("σ = {sigma} must be positive")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Invalid(format!("ε = {eps} outside (0,1)")));
        }
        Ok(ExpSpec { n, sigma, eps })
    }

    /// Range `[max(nσ - ln n, 0), nσ]` of codeword sums used by the input law.
    pub fn shell(&self) -> (f64, f64) {
        let nf = self.n as f64;
        ((nf * self.sigma - nf.ln()).max(0.0), nf * self.sigma)
    }
}

/// `(C, V)` in nats and nats²: `ln(1+σ)` and `σ²/(1+σ)²`.
pub fn capacity_dispersion(sigma: f64) -> (f64, f64) {
    let r = sigma / (1.0 + sigma);
    (sigma.ln_1p(), r * r)
}

/// `C - √(V/n)·Q⁻¹(ε)`, nats per channel use.
pub fn normal_approx_rate(spec: &ExpSpec) -> f64 {
    let (c, v) = capacity_dispersion(spec.sigma);
    c - (v / spec.n as f64).sqrt() * q_inv(spec.eps).unwrap_or(f64::NAN)
}

/// `ln P[lo ≤ Σ X_i ≤ hi]` for `X_i` i.i.d. capacity-achieving inputs: zero
/// with probability `1/(1+σ)`, otherwise `Exp` with mean `1+σ`.
pub fn log_shell_probability(n: usize, sigma: f64, lo: f64, hi: f64) -> f64 {
    let p = sigma / (1.0 + sigma);
    let scale = 1.0 + sigma;
    let nn = n as u64;
    let terms: Vec<f64> = (0..=nn)
        .filter_map(|k| {
            let w = binomial::log_pmf(k, nn, p);
            if w < -745.0 {
                return None;
            }
            let inside = if k == 0 {
                if lo <= 0.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            } else {
                let at = |x: f64| {
                    if x <= 0.0 {
                        (f64::NEG_INFINITY, 0.0)
                    } else {
                        log_gamma_pq(k as f64, x / scale)
                    }
                };
                log_interval_mass(at(lo), at(hi)).0
            };
            Some(w + inside)
        })
        .collect();
    log_sum_exp(&terms)
}

/// `ln β_α(P_{Y|X=x}, Q_Y)` for a codeword with `Σ x_i = x_sum`, given the
/// miss probability `1 - α`. The region lies in `{y ≥ x}`, which has
/// `Q_Y`-mass `e^{-x_sum/(1+σ)}`, and thresholds `Σ (y_i - x_i)`.
fn log_beta_given_sum(n: usize, sigma: f64, x_sum: f64, miss: f64) -> f64 {
    let nf = n as f64;
    if miss >= 1.0 {
        return f64::NEG_INFINITY;
    }
    let z = if miss <= 0.0 { f64::INFINITY } else { gamma_quantile_log(nf, miss.ln(), true) };
    let g = if z == f64::INFINITY { 0.0 } else { log_gamma_pq(nf, z / (1.0 + sigma)).0 };
    -x_sum / (1.0 + sigma) + g
}

/// `ln β_α(P_{Y|X=x}, Exp(1+σ)^n)` for any codeword with `Σ x_i = x_sum`.
pub fn log_beta_joint(n: usize, sigma: f64, x_sum: f64, alpha: f64) -> f64 {
    log_beta_given_sum(n, sigma, x_sum, 1.0 - alpha)
}

/// ββ achievability for the input law `(P*_X)^n` conditioned on the sum
/// shell, maximized over τ.
///
/// The numerator is bounded below by `τ·P[shell]` (data processing onto the
/// input, where the likelihood ratio is binary). The denominator is the
/// conditional β at `x_sum`, which defaults to the lower shell end where it
/// is largest; any `x_sum` in the shell may be supplied instead.
pub fn exact_bb_achievability(spec: &ExpSpec, tau_grid: Option<&[f64]>, x_sum: Option<f64>) -> Result<BoundResult> {
    let ExpSpec { n, sigma, eps } = *spec;
    let (lo, hi) = spec.shell();
    let s = x_sum.unwrap_or(lo);
    if !(s >= lo && s <= hi) {
        return Err(Error::Invalid(format!("codeword sum {s} outside the shell [{lo}, {hi}]")));
    }
    let log_shell = log_shell_probability(n, sigma, lo, hi);
    if log_shell == f64::NEG_INFINITY {
        return Err(Error::Infeasible("input shell has zero probability".into()));
    }
    let value = |tau: f64| LN_2 + tau.ln() + log_shell - log_beta_given_sum(n, sigma, s, eps - tau);
    let (tau, log_m) = match tau_grid {
        Some(grid) => {
            if grid.is_empty() || grid.iter().any(|&t| !(t > 0.0 && t < eps)) {
                return Err(Error::Invalid("τ grid must be non-empty and inside (0, ε)".into()));
            }
            grid.iter()
                .map(|&t| (t, value(t)))
                .fold((f64::NAN, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b })
        }
        None => {
            let lg: Vec<f64> = log_grid(eps * 1e-4, eps * (1.0 - 1e-9), EXP_GRID).iter().map(|t| t.ln()).collect();
            let (u, v) = grid_then_golden(|u| value(u.exp()), &lg, 1e-6)
                .ok_or_else(|| Error::Numerical("achievability objective not finite".into()))?;
            (u.exp(), v)
        }
    };
    Ok(BoundResult::new(BoundKind::BbAchievability, log_m, n, tau)
        .with("log_shell_probability", log_shell)
        .with("log_beta_joint", log_beta_given_sum(n, sigma, s, eps - tau))
        .with("x_sum", s))
}

/// Meta-converse `nσ/(1+σ) - ln P[Gamma(n, 1+σ) ≤ z]` with `P[Gamma(n,1) ≤ z] = 1-ε`,
/// valid for every code meeting the cost constraint.
pub fn meta_converse(spec: &ExpSpec) -> Result<BoundResult> {
    let ExpSpec { n, sigma, eps } = *spec;
    let log_beta = log_beta_given_sum(n, sigma, n as f64 * sigma, eps);
    Ok(BoundResult::new(BoundKind::BbConverse, -log_beta, n, 0.0).with("log_beta_joint", log_beta))
}

/// One line of the exponential-channel table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpRow {
    pub n: usize,
    pub rate_ach: f64,
    pub rate_converse: f64,
    pub rate_normal_approx: f64,
    pub capacity: f64,
}

/// Achievability, converse, normal approximation and capacity for each `n`.
pub fn exp_table(sigma: f64, eps: f64, ns: &[usize]) -> Result<Vec<ExpRow>> {
    ns.iter()
        .map(|&n| {
            let spec = ExpSpec::new(n, sigma, eps)?;
            Ok(ExpRow {
                n,
                rate_ach: exact_bb_achievability(&spec, None, None)?.rate,
                rate_converse: meta_converse(&spec)?.rate,
                rate_normal_approx: normal_approx_rate(&spec),
                capacity: capacity_dispersion(sigma).0,
            })
        })
        .collect()
}
