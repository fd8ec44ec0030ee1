//! The ββ achievability bound, the ββ converse, the dependence-testing form and
//! the relaxed κβ bound on finite alphabets, plus a random-coding oracle.

mod code;
mod spectrum;

pub use code::{
    codebook_size, decoder_error, random_code_errors, verify_code_existence, CodebookTrial, CODE_EVAL_CAP,
    CODE_TRIAL_CAP,
};
pub use spectrum::{memoryless_curve, LATTICE};

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::np::{BetaCurve, DiscreteChannel, DiscreteDist};
use crate::numerics::optim::{grid_then_golden, log_grid};

/// Default number of grid points for the τ and δ searches.
pub const DEFAULT_GRID: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    BbAchievability,
    BbConverse,
    Dt,
    KappaBetaRelaxed,
}

/// A bound on `ln M` in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub kind: BoundKind,
    pub log_m: f64,
    /// Blocklength used for `rate`.
    pub n: usize,
    /// `log_m / n`, nats per channel use.
    pub rate: f64,
    /// Optimizing τ for achievability bounds, δ for the converse.
    pub tau: f64,
    /// Named log-domain intermediates.
    pub components: BTreeMap<String, f64>,
}

impl BoundResult {
    pub fn new(kind: BoundKind, log_m: f64, n: usize, tau: f64) -> BoundResult {
        BoundResult { kind, log_m, n, rate: log_m / n.max(1) as f64, tau, components: BTreeMap::new() }
    }

    pub fn with(mut self, name: &str, value: f64) -> BoundResult {
        self.components.insert(name.to_string(), value);
        self
    }
}

/// 64-style log-spaced τ grid in `(0, ε)`.
pub fn tau_grid(eps: f64, points: usize) -> Vec<f64> {
    log_grid(eps * 1e-6, eps * (1.0 - 1e-9), points.max(2))
}

/// Uniform δ grid on `[0, 1-ε)`.
pub fn delta_grid(eps: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    (0..points).map(|i| (1.0 - eps) * i as f64 / points as f64).collect()
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Invalid(format!("ε = {eps} outside (0,1)")));
    }
    Ok(())
}

fn ln(x: f64) -> f64 {
    if x > 0.0 {
        x.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Best value of `f` over a grid (with golden refinement) and a list of extra
/// candidates. Returns `(argmax, max)`.
fn maximize(f: &impl Fn(f64) -> f64, grid: &[f64], extra: &[f64]) -> Option<(f64, f64)> {
    let mut best = grid_then_golden(f, grid, 1e-12);
    for &x in extra {
        let v = f(x);
        if !v.is_nan() && best.map_or(true, |(_, b)| v > b) {
            best = Some((x, v));
        }
    }
    best
}

/// The two β curves entering the bounds: `β(P_Y, Q_Y)` and `β(P_XY, P_X Q_Y)`.
#[derive(Debug, Clone)]
pub struct BetaPair {
    pub output: BetaCurve,
    pub joint: BetaCurve,
    pub n: usize,
}

impl BetaPair {
    pub fn new(channel: &DiscreteChannel, p_x: &DiscreteDist, q_y: &DiscreteDist) -> Result<BetaPair> {
        BetaPair::memoryless(channel, p_x, q_y, 1)
    }

    /// The pair for `n` memoryless uses with i.i.d. `P_X` and `Q_Y`.
    pub fn memoryless(channel: &DiscreteChannel, p_x: &DiscreteDist, q_y: &DiscreteDist, n: usize) -> Result<BetaPair> {
        if n == 0 {
            return Err(Error::Invalid("blocklength must be positive".into()));
        }
        let p_y = channel.output(p_x)?;
        let output = memoryless_curve(&p_y, q_y, n)?;
        let joint = memoryless_curve(&channel.joint(p_x)?, &channel.input_times(p_x, q_y)?, n)?;
        Ok(BetaPair { output, joint, n })
    }

    /// `ln 2 + ln β_τ(P_Y,Q_Y) - ln β_{1-ε+τ}(P_XY,P_X Q_Y)` maximized over τ.
    /// The curves are piecewise linear, so their breakpoints are added to the
    /// grid and the maximum over `(0, ε)` is attained exactly.
    pub fn achievability(&self, eps: f64, grid: &[f64]) -> Result<BoundResult> {
        check_eps(eps)?;
        if grid.is_empty() {
            return Err(Error::Invalid("empty τ grid".into()));
        }
        if grid.iter().any(|t| !(*t > 0.0 && *t < eps)) {
            return Err(Error::Invalid("τ grid must lie in (0, ε)".into()));
        }
        let top = eps * (1.0 - 1e-12);
        let f = |t: f64| {
            let t = t.clamp(f64::MIN_POSITIVE, top);
            ln(self.output.beta(t)) - ln(self.joint.beta(1.0 - eps + t))
        };
        let mut extra: Vec<f64> = self.output.breakpoints().to_vec();
        extra.extend(self.joint.breakpoints().iter().map(|b| b - (1.0 - eps)));
        extra.retain(|t| *t > 0.0);
        extra.iter_mut().for_each(|t| *t = t.min(top));
        extra.push(top);
        let (tau, v) = maximize(&f, grid, &extra).ok_or_else(|| Error::Numerical("τ search failed".into()))?;
        let tau = tau.clamp(f64::MIN_POSITIVE, top);
        Ok(BoundResult::new(BoundKind::BbAchievability, LN_2 + v, self.n, tau)
            .with("log_beta_num", ln(self.output.beta(tau)))
            .with("log_beta_den", ln(self.joint.beta(1.0 - eps + tau))))
    }

    /// `ln β_{1-δ}(P_Y,Q_Y) - ln β_{1-ε-δ}(P_XY,P_X Q_Y)` minimized over δ.
    pub fn converse(&self, eps: f64, grid: &[f64]) -> Result<BoundResult> {
        check_eps(eps)?;
        if grid.is_empty() {
            return Err(Error::Invalid("empty δ grid".into()));
        }
        if grid.iter().any(|d| !(*d >= 0.0 && *d < 1.0 - eps)) {
            return Err(Error::Invalid("δ grid must lie in [0, 1-ε)".into()));
        }
        let g = |d: f64| {
            let d = d.clamp(0.0, 1.0 - eps);
            -(ln(self.output.beta(1.0 - d)) - ln(self.joint.beta(1.0 - eps - d)))
        };
        let mut extra: Vec<f64> = self.output.breakpoints().iter().map(|b| 1.0 - b).collect();
        extra.extend(self.joint.breakpoints().iter().map(|b| 1.0 - eps - b));
        extra.retain(|d| *d >= 0.0 && *d < 1.0 - eps);
        extra.push(0.0);
        let (delta, v) = maximize(&g, grid, &extra).ok_or_else(|| Error::Numerical("δ search failed".into()))?;
        let delta = delta.clamp(0.0, 1.0 - eps);
        Ok(BoundResult::new(BoundKind::BbConverse, -v, self.n, delta)
            .with("log_beta_num", ln(self.output.beta(1.0 - delta)))
            .with("log_beta_den", ln(self.joint.beta(1.0 - eps - delta))))
    }
}

/// Single-use ββ achievability bound.
pub fn bb_achievability(
    channel: &DiscreteChannel,
    p_x: &DiscreteDist,
    q_y: &DiscreteDist,
    eps: f64,
    tau_grid: &[f64],
) -> Result<BoundResult> {
    BetaPair::new(channel, p_x, q_y)?.achievability(eps, tau_grid)
}

/// Single-use ββ converse.
pub fn bb_converse(
    channel: &DiscreteChannel,
    p_x: &DiscreteDist,
    q_y: &DiscreteDist,
    eps: f64,
    delta_grid: &[f64],
) -> Result<BoundResult> {
    BetaPair::new(channel, p_x, q_y)?.converse(eps, delta_grid)
}

/// Relaxed κβ bound `ln β_τ(P_Y,Q_Y) - ln max_x β_{1-ε+τ}(P_{Y|X=x},Q_Y)`, the
/// maximum running over the support of `P_X`.
pub fn kappa_beta_relaxed(
    channel: &DiscreteChannel,
    p_x: &DiscreteDist,
    q_y: &DiscreteDist,
    eps: f64,
    tau_grid: &[f64],
) -> Result<BoundResult> {
    check_eps(eps)?;
    if tau_grid.is_empty() || tau_grid.iter().any(|t| !(*t > 0.0 && *t < eps)) {
        return Err(Error::Invalid("τ grid must be nonempty and lie in (0, ε)".into()));
    }
    let output = BetaCurve::new(channel.output(p_x)?.probs(), q_y.probs())?;
    let rows: Vec<BetaCurve> = (0..channel.n_inputs())
        .filter(|&x| p_x.probs()[x] > 0.0)
        .map(|x| BetaCurve::new(channel.row(x), q_y.probs()))
        .collect::<Result<_>>()?;
    let top = eps * (1.0 - 1e-12);
    let worst = |a: f64| rows.iter().map(|r| r.beta(a)).fold(0.0, f64::max);
    let f = |t: f64| {
        let t = t.clamp(f64::MIN_POSITIVE, top);
        ln(output.beta(t)) - ln(worst(1.0 - eps + t))
    };
    let mut extra: Vec<f64> = output.breakpoints().to_vec();
    for r in &rows {
        extra.extend(r.breakpoints().iter().map(|b| b - (1.0 - eps)));
    }
    extra.retain(|t| *t > 0.0);
    extra.iter_mut().for_each(|t| *t = t.min(top));
    let (tau, v) = maximize(&f, tau_grid, &extra).ok_or_else(|| Error::Numerical("τ search failed".into()))?;
    let tau = tau.clamp(f64::MIN_POSITIVE, top);
    Ok(BoundResult::new(BoundKind::KappaBetaRelaxed, v, 1, tau)
        .with("log_beta_num", ln(output.beta(tau)))
        .with("log_beta_den", ln(worst(1.0 - eps + tau))))
}

/// Dependence-testing form: the largest `M` with
/// `P[i(X;Y) ≤ ln(M/2)] + (M/2) P_X P_Y[i(X;Y) > ln(M/2)] ≤ ε`,
/// computed directly from the information-density spectrum.
pub fn dt_bound(channel: &DiscreteChannel, p_x: &DiscreteDist, eps: f64) -> Result<BoundResult> {
    check_eps(eps)?;
    let p_y = channel.output(p_x)?;
    // (information density, P_XY mass, P_X P_Y mass)
    let mut atoms: Vec<(f64, f64, f64)> = Vec::new();
    for (x, &px) in p_x.probs().iter().enumerate() {
        for (y, &w) in channel.row(x).iter().enumerate() {
            if px * w > 0.0 {
                atoms.push((w.ln() - p_y.probs()[y].ln(), px * w, px * p_y.probs()[y]));
            }
        }
    }
    atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let total_q: f64 = atoms.iter().map(|a| a.2).sum();
    // Walk distinct values u_k upward: below u_1 the error is e^t · total_q;
    // on [u_k, u_{k+1}) it is A_k + e^t B_k.
    let mut a_k = 0.0;
    let mut b_k = total_q;
    let mut lower = f64::NEG_INFINITY;
    let mut i = 0;
    let t = loop {
        let u = if i < atoms.len() { atoms[i].0 } else { f64::INFINITY };
        let t_seg = if b_k > 0.0 { ((eps - a_k) / b_k).ln() } else { f64::INFINITY };
        if t_seg < u {
            break t_seg.max(lower);
        }
        if i == atoms.len() {
            break f64::INFINITY;
        }
        while i < atoms.len() && atoms[i].0 == u {
            a_k += atoms[i].1;
            b_k -= atoms[i].2;
            i += 1;
        }
        b_k = b_k.max(0.0);
        lower = u;
        if a_k > eps {
            break u;
        }
    };
    Ok(BoundResult::new(BoundKind::Dt, LN_2 + t, 1, f64::NAN).with("log_half_m", t))
}
