//! Complex AWGN channel `Y = X + W`, `W ~ CN(0, I_n)`, with codewords on the
//! equal-power shell `‖x‖² = nP`. All β values are carried as natural logs.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::bound::{BoundKind, BoundResult};
use crate::error::{Error, Result};
use crate::numerics::ncx2::{self, ncx2_quantile_fast, Tail};
use crate::numerics::optim::{golden_max, grid_then_golden, illinois, log_grid};
use crate::numerics::special::{
    debye_log_corr, gamma_log_pdf, log_gamma_pq, log_interval_mass, log_q, q_inv, BESSEL_DEBYE_MIN_ORDER,
};

/// Default number of τ (or δ) grid points before golden refinement.
pub const AWGN_GRID: usize = 16;
/// Smallest log-likelihood-ratio variation over one standard deviation for
/// which the capacity-achieving law is evaluated.
pub const RADIAL_MIN_SPREAD: f64 = 1e-7;
/// Bracket for the SNR search in [`eb_curves`].
pub const EB_SNR_BRACKET: (f64, f64) = (1e-6, 10.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AwgnSpec {
    /// Complex channel uses.
    pub n: usize,
    /// SNR per symbol, linear.
    pub snr: f64,
    pub eps: f64,
}

impl AwgnSpec {
    pub fn new(n: usize, snr: f64, eps: f64) -> Result<AwgnSpec> {
        if n == 0 {
            return Err(Error::Invalid("blocklength must be positive".into()));
        }
        if !(snr > 0.0 && snr.is_finite()) {
            return Err(Error::Invalid(format!("SNR {snr} must be positive")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Invalid(format!("ε = {eps} outside (0,1)")));
        }
        Ok(AwgnSpec { n, snr, eps })
    }

    /// `ln(1+P)`, nats per channel use.
    pub fn capacity(&self) -> f64 {
        self.snr.ln_1p()
    }

    /// `P(2+P)/(1+P)²`, nats² per channel use.
    pub fn dispersion(&self) -> f64 {
        let s = 1.0 + self.snr;
        self.snr * (2.0 + self.snr) / (s * s)
    }

    /// `C - √(V/n)·Q⁻¹(ε)`, nats per channel use.
    pub fn normal_approx_rate(&self) -> f64 {
        self.capacity() - (self.dispersion() / self.n as f64).sqrt() * q_inv(self.eps).unwrap_or(f64::NAN)
    }
}

/// Auxiliary output law `Q_Y = CN(0, s² I_n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputLaw {
    /// `s² = 1`, the noise-only law.
    Unit,
    /// `s² = 1 + P`, the capacity-achieving output law.
    CapacityAchieving,
}

impl OutputLaw {
    pub fn variance(self, snr: f64) -> f64 {
        match self {
            OutputLaw::Unit => 1.0,
            OutputLaw::CapacityAchieving => 1.0 + snr,
        }
    }
}

/// How τ (achievability) and δ (converse) are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauChoice {
    /// Grid of the given size plus golden refinement.
    Free { grid: usize },
    /// `τ_n = max{(1+3√2)/√n, e^{-nP²/2}}`, and `α_n = 1 - τ_n` for the converse.
    Schedule,
    /// Given τ for achievability, δ = `1 - α_n` for the converse.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AwgnOptions {
    /// Achievability takes the best law, the converse the tightest.
    pub laws: Vec<OutputLaw>,
    pub tau: TauChoice,
}

impl Default for AwgnOptions {
    fn default() -> Self {
        AwgnOptions { laws: vec![OutputLaw::Unit, OutputLaw::CapacityAchieving], tau: TauChoice::Free { grid: AWGN_GRID } }
    }
}

impl AwgnOptions {
    pub fn schedule() -> AwgnOptions {
        AwgnOptions { tau: TauChoice::Schedule, ..AwgnOptions::default() }
    }

    pub fn with_laws(mut self, laws: &[OutputLaw]) -> AwgnOptions {
        self.laws = laws.to_vec();
        self
    }
}

/// `τ_n = max{(1+3√2)/√n, e^{-nP²/2}}`.
pub fn tau_schedule(n: usize, snr: f64) -> f64 {
    let nf = n as f64;
    ((1.0 + 3.0 * 2f64.sqrt()) / nf.sqrt()).max((-0.5 * nf * snr * snr).exp())
}

/// `ln β_α(P_XY, P_X Q_Y)` with `Q_Y = CN(0, I)`: `ln Q(√(2nP) + Q⁻¹(α))`.
/// `n = 0` gives `ln α`.
pub fn log_beta_xy(n: usize, snr: f64, alpha: f64) -> f64 {
    if alpha <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if alpha >= 1.0 {
        return 0.0;
    }
    let z = q_inv(alpha).expect("α in (0,1)");
    log_q((2.0 * n as f64 * snr).sqrt() + z)
}

pub fn beta_xy(n: usize, snr: f64, alpha: f64) -> f64 {
    log_beta_xy(n, snr, alpha).exp()
}

/// `ln β_α(P_XY, P_X Q_Y)` for `Q_Y = CN(0, s² I)`. The NP statistic is
/// `2‖y - c x‖²` with `c = s²/(s²-1)`, noncentral χ² under both laws.
pub fn log_beta_xy_law(n: usize, snr: f64, alpha: f64, law: OutputLaw) -> Result<f64> {
    let s2 = law.variance(snr);
    if s2 == 1.0 || n == 0 {
        return Ok(log_beta_xy(n, snr, alpha));
    }
    if alpha <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if alpha >= 1.0 {
        return Ok(0.0);
    }
    let nf = n as f64;
    let k = 2.0 * nf;
    let c = s2 / (s2 - 1.0);
    let lam_p = 2.0 * (c - 1.0) * (c - 1.0) * nf * snr;
    let lam_q = 2.0 * c * c * nf * snr / s2;
    let t = ncx2_quantile_fast(k, lam_p, alpha, Tail::Lower)?;
    Ok(ncx2::log_cdf(k, lam_q, t / s2))
}

/// Result of an NP test with its achieved power.
#[derive(Debug, Clone, Copy, PartialEq)]
struct NpPoint {
    power: f64,
    log_beta: f64,
}

fn unit_output_point(n: usize, snr: f64, a: f64) -> Result<NpPoint> {
    let nf = n as f64;
    let (k, lam) = (2.0 * nf, 2.0 * nf * snr);
    let gamma = ncx2_quantile_fast(k, lam, a, Tail::Upper)?;
    let (lc, ls) = ncx2::log_tails(k, lam, gamma);
    let power = if ls < -LN_2 { ls.exp() } else { -lc.exp_m1() };
    Ok(NpPoint { power, log_beta: log_gamma_pq(nf, 0.5 * gamma).1 })
}

/// `ln ℙ[L_n ≥ γ]` with `ℙ[S_n ≥ γ] = a`, `S_n ~ χ²_{2n}(2nP)`, `L_n ~ χ²_{2n}`:
/// an upper bound on `ln β_a(P_Y, CN(0,I))`, with equality for input uniform
/// on the shell.
pub fn log_beta_y(n: usize, snr: f64, a: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Invalid(format!("power {a} outside (0,1)")));
    }
    if n == 0 {
        return Err(Error::Invalid("blocklength must be positive".into()));
    }
    Ok(unit_output_point(n, snr, a)?.log_beta)
}

pub fn beta_y(n: usize, snr: f64, a: f64) -> Result<f64> {
    Ok(log_beta_y(n, snr, a)?.exp())
}

/// Same as [`log_beta_y`] for either output law.
pub fn log_beta_y_law(n: usize, snr: f64, a: f64, law: OutputLaw) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Invalid(format!("power {a} outside (0,1)")));
    }
    output_point(n, snr, a, law).map(|p| p.log_beta)
}

fn output_point(n: usize, snr: f64, a: f64, law: OutputLaw) -> Result<NpPoint> {
    match law {
        OutputLaw::Unit => unit_output_point(n, snr, a),
        OutputLaw::CapacityAchieving => RadialTest::new(n, snr, law.variance(snr))?.at_power(a),
    }
}

/// NP test between `r = 2‖y‖²` laws `χ²_{2n}(2nP)` and `s²·χ²_{2n}`, `s² > 1`.
/// The log-likelihood ratio is unimodal in `r`, so every NP region is an
/// interval `[r1, r2]` around the mode.
struct RadialTest {
    n: f64,
    k: f64,
    lam: f64,
    s2: f64,
    mode: f64,
    llr_max: f64,
    sd: f64,
    llr_zero: f64,
}

impl RadialTest {
    fn new(n: usize, snr: f64, s2: f64) -> Result<RadialTest> {
        if !(s2 > 1.0) {
            return Err(Error::Invalid("radial test needs s² > 1".into()));
        }
        let nf = n as f64;
        let k = 2.0 * nf;
        let lam = k * snr;
        let sd = (2.0 * (k + 2.0 * lam)).sqrt();
        let mut t = RadialTest { n: nf, k, lam, s2, mode: 0.0, llr_max: 0.0, sd, llr_zero: 0.0 };
        t.llr_zero = t.llr(0.0);
        let hi = k + lam + 40.0 * sd;
        let (mode, llr_max) = golden_max(|r| t.llr(r), 0.0, hi, 1e-12 * hi, 300);
        t.mode = mode;
        t.llr_max = llr_max;
        let spread = llr_max - t.llr(mode + sd).max(t.llr((mode - sd).max(0.0)));
        if !(spread >= RADIAL_MIN_SPREAD) {
            return Err(Error::Numerical(format!("likelihood ratio spread {spread:.2e} too flat to resolve")));
        }
        Ok(t)
    }

    /// Log-likelihood ratio up to an additive constant. For large `n` it is
    /// the Debye form taken relative to `r0 = k + λ`, every term written as a
    /// difference so the level sets stay resolved where the ratio is flat.
    fn llr(&self, r: f64) -> f64 {
        let v = self.n - 1.0;
        if v >= BESSEL_DEBYE_MIN_ORDER {
            let r0 = self.k + self.lam;
            let s0 = (v * v + self.lam * r0).sqrt();
            let s = (v * v + self.lam * r.max(0.0)).sqrt();
            let ds = self.lam * (r.max(0.0) - r0) / (s + s0);
            return -0.5 * (r - r0) * (1.0 - 1.0 / self.s2) + ds
                - v * (ds / (v + s0)).ln_1p()
                - 0.5 * (ds / s0).ln_1p()
                + debye_log_corr(v, v / s)
                - debye_log_corr(v, v / s0);
        }
        if r <= 0.0 {
            return -0.5 * self.lam + self.n * self.s2.ln();
        }
        let lq = gamma_log_pdf(self.n, r / (2.0 * self.s2)) - (2.0 * self.s2).ln();
        ncx2::log_pdf(self.k, self.lam, r) - lq
    }

    /// Endpoints of the level set `{llr ≥ llr(mode) - e^u}`.
    fn region(&self, u: f64) -> (f64, f64) {
        let level = self.llr_max - u.exp();
        let f = |r: f64| self.llr(r) - level;
        let mut hi = self.mode + self.sd;
        while f(hi) > 0.0 {
            hi = self.mode + 2.0 * (hi - self.mode);
        }
        let r2 = illinois(f, self.mode, hi, 1e-15 * hi, 300).unwrap_or(hi);
        let r1 = if level <= self.llr_zero {
            0.0
        } else {
            illinois(f, 0.0, self.mode, 1e-15 * self.mode, 300).unwrap_or(0.0)
        };
        (r1, r2)
    }

    /// `(ln in, ln out)` masses of `[r1, r2]` under both laws: `((P_in, P_out), (Q_in, Q_out))`.
    fn masses(&self, r1: f64, r2: f64) -> ((f64, f64), (f64, f64)) {
        let p1 = ncx2::log_tails(self.k, self.lam, r1);
        let p2 = ncx2::log_tails(self.k, self.lam, r2);
        let q1 = log_gamma_pq(self.n, r1 / (2.0 * self.s2));
        let q2 = log_gamma_pq(self.n, r2 / (2.0 * self.s2));
        let q1 = if r1 <= 0.0 { (f64::NEG_INFINITY, 0.0) } else { q1 };
        (log_interval_mass(p1, p2), log_interval_mass(q1, q2))
    }

    /// The level-set test whose power is closest to `a`; the achieved power
    /// is returned with it.
    fn at_power(&self, a: f64) -> Result<NpPoint> {
        let small = a <= 0.5;
        let target = if small { a.ln() } else { (-a).ln_1p() };
        let g = |u: f64| {
            let (r1, r2) = self.region(u);
            let ((p_in, p_out), _) = self.masses(r1, r2);
            if small {
                p_in - target
            } else {
                target - p_out
            }
        };
        let gap = |r: f64| (self.llr_max - self.llr(r)).max(1e-300);
        let mut lo = gap(self.mode + 1e-7 * self.sd).min(gap(self.mode - 1e-7 * self.sd)).ln();
        let mut hi = gap(self.mode + 40.0 * self.sd).max(gap((self.mode - 40.0 * self.sd).max(0.0))).ln();
        while !g(lo).is_finite() && lo < hi {
            lo += 2.0;
        }
        let mut guard = 0;
        while g(hi) < 0.0 {
            hi += 1.0;
            guard += 1;
            if guard > 200 {
                return Err(Error::Numerical("radial test bracket failed".into()));
            }
        }
        let u = if g(lo) >= 0.0 {
            lo
        } else {
            illinois(g, lo, hi, 1e-12, 300).ok_or_else(|| Error::Numerical("radial test root failed".into()))?
        };
        let (r1, r2) = self.region(u);
        let ((p_in, p_out), (q_in, _)) = self.masses(r1, r2);
        let power = if p_in < -LN_2 { p_in.exp() } else { -p_out.exp_m1() };
        Ok(NpPoint { power, log_beta: q_in })
    }
}

fn law_achievability(spec: &AwgnSpec, law: OutputLaw, tau: TauChoice) -> Result<BoundResult> {
    let AwgnSpec { n, snr, eps } = *spec;
    let out_test = match law {
        OutputLaw::Unit => None,
        OutputLaw::CapacityAchieving => Some(RadialTest::new(n, snr, law.variance(snr))?),
    };
    let point = |t: f64| -> Result<NpPoint> {
        match &out_test {
            None => unit_output_point(n, snr, t),
            Some(rt) => rt.at_power(t),
        }
    };
    let value = |t: f64| -> Result<(f64, NpPoint, f64)> {
        let num = point(t)?;
        let den = log_beta_xy_law(n, snr, 1.0 - eps + num.power, law)?;
        Ok((LN_2 + num.log_beta - den, num, den))
    };
    let tau_star = match tau {
        TauChoice::Schedule => {
            let t = tau_schedule(n, snr);
            if t >= eps {
                return Err(Error::Infeasible(format!("τ_n = {t:.4} ≥ ε = {eps}")));
            }
            t
        }
        TauChoice::Fixed(t) => {
            if !(t > 0.0 && t < eps) {
                return Err(Error::Infeasible(format!("τ = {t} outside (0, ε)")));
            }
            t
        }
        TauChoice::Free { grid } => {
            let lg: Vec<f64> = log_grid(eps * 1e-5, eps * (1.0 - 1e-6), grid.max(2)).iter().map(|t| t.ln()).collect();
            let f = |u: f64| value(u.exp()).map(|v| v.0).unwrap_or(f64::NEG_INFINITY);
            let (u, _) = grid_then_golden(f, &lg, 1e-4)
                .ok_or_else(|| Error::Numerical("achievability objective not finite".into()))?;
            u.exp()
        }
    };
    let (log_m, num, den) = value(tau_star)?;
    Ok(BoundResult::new(BoundKind::BbAchievability, log_m, n, num.power)
        .with("log_beta_output", num.log_beta)
        .with("log_beta_joint", den)
        .with("output_variance", law.variance(snr)))
}

fn law_converse(spec: &AwgnSpec, law: OutputLaw, tau: TauChoice) -> Result<BoundResult> {
    let AwgnSpec { n, snr, eps } = *spec;
    let out_test = match law {
        OutputLaw::Unit => None,
        OutputLaw::CapacityAchieving => Some(RadialTest::new(n, snr, law.variance(snr))?),
    };
    // δ = 0 is the full-power test with β = 1.
    let value = |delta: f64| -> Result<(f64, f64, f64, f64)> {
        let num = if delta <= 0.0 {
            NpPoint { power: 1.0, log_beta: 0.0 }
        } else {
            match &out_test {
                None => unit_output_point(n, snr, 1.0 - delta)?,
                Some(rt) => rt.at_power(1.0 - delta)?,
            }
        };
        let den = log_beta_xy_law(n, snr, num.power - eps, law)?;
        Ok((num.log_beta - den, 1.0 - num.power, num.log_beta, den))
    };
    let delta = match tau {
        TauChoice::Schedule => {
            let d = tau_schedule(n, snr);
            if 1.0 - d <= eps {
                return Err(Error::Infeasible(format!("α_n = {:.4} ≤ ε = {eps}", 1.0 - d)));
            }
            d
        }
        TauChoice::Fixed(d) => {
            if !(d >= 0.0 && d < 1.0 - eps) {
                return Err(Error::Infeasible(format!("δ = {d} outside [0, 1-ε)")));
            }
            d
        }
        TauChoice::Free { grid } => {
            let top = (1.0 - eps) * 0.999;
            let lg: Vec<f64> = log_grid(1e-12_f64.min(top * 1e-3), top, grid.max(2)).iter().map(|d| d.ln()).collect();
            let f = |u: f64| value(u.exp()).map(|v| -v.0).unwrap_or(f64::NEG_INFINITY);
            let (u, best) = grid_then_golden(f, &lg, 1e-4)
                .ok_or_else(|| Error::Numerical("converse objective not finite".into()))?;
            let at_zero = value(0.0).map(|v| -v.0).unwrap_or(f64::NEG_INFINITY);
            if at_zero >= best {
                0.0
            } else {
                u.exp()
            }
        }
    };
    let (log_m, d, num, den) = value(delta)?;
    Ok(BoundResult::new(BoundKind::BbConverse, log_m, n, d)
        .with("log_beta_output", num)
        .with("log_beta_joint", den)
        .with("output_variance", law.variance(snr)))
}

fn check_laws(opts: &AwgnOptions) -> Result<()> {
    if opts.laws.is_empty() {
        return Err(Error::Invalid("no output law selected".into()));
    }
    Ok(())
}

/// ββ achievability `ln 2 + ln β_τ(P_Y,Q_Y) - ln β_{1-ε+τ}(P_XY,P_X Q_Y)` for
/// input uniform on the shell, maximized over the selected output laws.
pub fn bb_rate_achievability(spec: &AwgnSpec, opts: &AwgnOptions) -> Result<BoundResult> {
    check_laws(opts)?;
    let mut best: Option<BoundResult> = None;
    let mut last_err = None;
    for &law in &opts.laws {
        match law_achievability(spec, law, opts.tau) {
            Ok(r) => {
                if best.as_ref().map_or(true, |b| r.log_m > b.log_m) {
                    best = Some(r);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap())
}

/// Converse `ln β_{1-δ}(P_Y,Q_Y) - ln β_{1-ε-δ}(P_XY,P_X Q_Y)` valid for every
/// equal-power code, minimized over the selected output laws.
pub fn bb_rate_converse(spec: &AwgnSpec, opts: &AwgnOptions) -> Result<BoundResult> {
    check_laws(opts)?;
    let mut best: Option<BoundResult> = None;
    let mut last_err = None;
    for &law in &opts.laws {
        match law_converse(spec, law, opts.tau) {
            Ok(r) => {
                if best.as_ref().map_or(true, |b| r.log_m < b.log_m) {
                    best = Some(r);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EbKind {
    Achievability,
    Converse,
    Approximation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EbResult {
    /// Bits per channel use actually used (`k/n`).
    pub rate_bits: f64,
    /// `10·log10(P / rate_bits)`.
    pub eb_db: f64,
    pub kind: EbKind,
}

impl EbResult {
    pub fn from_snr(snr: f64, rate_bits: f64, kind: EbKind) -> EbResult {
        EbResult { rate_bits, eb_db: 10.0 * (snr / rate_bits).log10(), kind }
    }
}

/// One row of the energy-per-bit curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EbPoint {
    /// Requested rate, bits per channel use.
    pub rate_bits: f64,
    pub n: usize,
    pub achievability: std::result::Result<EbResult, String>,
    pub converse: std::result::Result<EbResult, String>,
    pub approximation: EbResult,
}

/// `10·log10(ln 2 + √(2 ln 2 / k)·Q⁻¹(ε) + (ln² 2 / 2)·R)` in dB.
pub fn eb_approximation_db(k: u64, eps: f64, rate_bits: f64) -> f64 {
    let z = q_inv(eps).unwrap_or(f64::NAN);
    10.0 * (LN_2 + (2.0 * LN_2 / k as f64).sqrt() * z + 0.5 * LN_2 * LN_2 * rate_bits).log10()
}

/// Smallest SNR at which `bound(snr) ≥ k ln 2`, searched on `ln P`.
fn solve_snr(k: u64, bound: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let target = k as f64 * LN_2;
    let f = |u: f64| match bound(u.exp()) {
        Ok(v) if v.is_finite() => v - target,
        _ => f64::NAN,
    };
    let (lo, hi) = (EB_SNR_BRACKET.0.ln(), EB_SNR_BRACKET.1.ln());
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo < 0.0 && fhi > 0.0) {
        return Err(Error::Numerical(format!(
            "SNR bracket [{:e}, {}] does not straddle the target (f = {flo:.3e}, {fhi:.3e})",
            EB_SNR_BRACKET.0, EB_SNR_BRACKET.1
        )));
    }
    let u = illinois(|u| {
        let v = f(u);
        if v.is_nan() { -1.0 } else { v }
    }, lo, hi, 1e-7, 200)
    .ok_or_else(|| Error::Numerical("SNR search failed".into()))?;
    Ok(u.exp())
}

/// Minimum energy per bit to send `k` bits with error `ε` at each rate of the
/// grid: `n = round(k/R)` and the SNR solving `bound = k ln 2`.
pub fn eb_curves(k: u64, eps: f64, rates_bits: &[f64], opts: &AwgnOptions) -> Result<Vec<EbPoint>> {
    if k == 0 {
        return Err(Error::Invalid("k must be positive".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Invalid(format!("ε = {eps} outside (0,1)")));
    }
    check_laws(opts)?;
    let mut rows = Vec::with_capacity(rates_bits.len());
    for &r in rates_bits {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Invalid(format!("rate {r} must be positive")));
        }
        let n = ((k as f64 / r).round() as usize).max(1);
        let actual = k as f64 / n as f64;
        let ach = solve_snr(k, |p| bb_rate_achievability(&AwgnSpec { n, snr: p, eps }, opts).map(|b| b.log_m))
            .map(|p| EbResult::from_snr(p, actual, EbKind::Achievability))
            .map_err(|e| e.to_string());
        let conv = solve_snr(k, |p| bb_rate_converse(&AwgnSpec { n, snr: p, eps }, opts).map(|b| b.log_m))
            .map(|p| EbResult::from_snr(p, actual, EbKind::Converse))
            .map_err(|e| e.to_string());
        rows.push(EbPoint {
            rate_bits: r,
            n,
            achievability: ach,
            converse: conv,
            approximation: EbResult { rate_bits: r, eb_db: eb_approximation_db(k, eps, r), kind: EbKind::Approximation },
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_xy_trivial_cases() {
        assert!((log_beta_xy(10, 2.0, 0.5) - log_q(40f64.sqrt())).abs() < 1e-14);
        assert!((beta_xy(0, 1.0, 0.3) - 0.3).abs() < 1e-15);
        assert!(log_beta_xy(100_000, 10.0, 0.999).is_finite());
    }

    #[test]
    fn capacity_law_reduces_to_unit_law_in_the_limit() {
        // s² close to 1 makes the shifted statistic approach the unit-law one.
        let n = 50;
        let a = log_beta_xy_law(n, 1e-4, 0.9, OutputLaw::CapacityAchieving).unwrap();
        let b = log_beta_xy(n, 1e-4, 0.9);
        assert!((a - b).abs() < 1e-2, "{a} {b}");
    }

    #[test]
    fn radial_test_interval_is_a_level_set() {
        let rt = RadialTest::new(40, 0.5, 1.5).unwrap();
        for a in [1e-4, 1e-3, 0.2, 0.7, 0.999999] {
            let p = rt.at_power(a).unwrap();
            assert!((p.power - a).abs() <= 1e-5 * a.min(1.0 - a), "{a} {}", p.power);
            assert!(p.log_beta < 0.0);
        }
    }
}
