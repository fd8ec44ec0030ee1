//! Monte-Carlo ββ achievability for the `m_t × m_r` Rayleigh block-fading
//! channel `Y_k = X_k H_k + W_k` with perfect CSIR, codewords uniform on the
//! Frobenius shell `‖X‖²_F = nρ` and the capacity-achieving output law.

use std::f64::consts::{FRAC_1_SQRT_2, LN_2, SQRT_2};

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bound::{BoundKind, BoundResult};
use crate::error::{Error, Result};
use crate::numerics::binomial::{clopper_pearson_lower, clopper_pearson_upper, largest_k_cdf_below};
use crate::numerics::optim::log_grid;
use crate::numerics::special::q_inv;
use crate::numerics::Seed;

/// Samples per substream chunk.
pub const MIMO_CHUNK: usize = 1 << 14;
/// Default samples per measure.
pub const DEFAULT_SAMPLES: usize = 1_000_000;
/// Default confidence of the certified bound.
pub const DEFAULT_CONFIDENCE: f64 = 0.999;
/// Default τ grid size.
pub const DEFAULT_TAU_POINTS: usize = 16;
/// Minimum samples per measure accepted by [`mc_beta`].
pub const MIN_SAMPLES: usize = 10_000;
/// Q-samples beyond the certified threshold below which an estimate is flagged.
pub const FEW_TAIL_SAMPLES: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MimoSpec {
    pub m_t: usize,
    pub m_r: usize,
    /// Coherence length.
    pub n_c: usize,
    /// Coherence blocks per codeword.
    pub l: usize,
    /// SNR, linear.
    pub snr: f64,
    pub eps: f64,
    /// Samples per measure.
    pub samples: usize,
    pub seed: Seed,
    pub confidence: f64,
}

impl MimoSpec {
    pub fn new(m_t: usize, m_r: usize, n_c: usize, l: usize, snr: f64, eps: f64) -> Result<MimoSpec> {
        if m_t == 0 || m_r == 0 || n_c == 0 || l == 0 {
            return Err(Error::Invalid("antenna counts, coherence length and l must be positive".into()));
        }
        if !(snr > 0.0 && snr.is_finite()) {
            return Err(Error::Invalid(format!("SNR {snr} must be positive")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Invalid(format!("ε = {eps} outside (0,1)")));
        }
        Ok(MimoSpec { m_t, m_r, n_c, l, snr, eps, samples: DEFAULT_SAMPLES, seed: Seed(0), confidence: DEFAULT_CONFIDENCE })
    }

    pub fn with_samples(mut self, samples: usize) -> MimoSpec {
        self.samples = samples;
        self
    }

    pub fn with_seed(mut self, seed: Seed) -> MimoSpec {
        self.seed = seed;
        self
    }

    pub fn with_confidence(mut self, confidence: f64) -> MimoSpec {
        self.confidence = confidence;
        self
    }

    pub fn with_l(mut self, l: usize) -> MimoSpec {
        self.l = l;
        self
    }

    /// Blocklength `l·n_c`.
    pub fn n(&self) -> usize {
        self.l * self.n_c
    }
}

/// Which law the LLR samples are drawn under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Measure {
    P,
    Q,
}

fn cn(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)) * FRAC_1_SQRT_2
}

/// Scratch space for one coherence block.
struct Block {
    mt: usize,
    mr: usize,
    h: Vec<C64>,
    g: Vec<C64>,
    chol: Vec<C64>,
    row: Vec<C64>,
    u: Vec<C64>,
    v: Vec<C64>,
    w: Vec<C64>,
    y: Vec<C64>,
    xq: Vec<C64>,
}

impl Block {
    fn new(spec: &MimoSpec) -> Block {
        let (mt, mr, nc) = (spec.m_t, spec.m_r, spec.n_c);
        Block {
            mt,
            mr,
            h: vec![C64::default(); mt * mr],
            g: vec![C64::default(); nc * mt],
            chol: vec![C64::default(); mr * mr],
            row: vec![C64::default(); mr],
            u: vec![C64::default(); mr],
            v: vec![C64::default(); mr],
            w: vec![C64::default(); mr],
            y: vec![C64::default(); mr],
            xq: vec![C64::default(); mt],
        }
    }

    fn draw_h(&mut self, rng: &mut ChaCha8Rng) {
        for x in self.h.iter_mut() {
            *x = cn(rng);
        }
    }

    /// Draws `G` and returns `‖G‖²_F`.
    fn draw_g(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        let mut s = 0.0;
        for x in self.g.iter_mut() {
            *x = cn(rng);
            s += x.norm_sqr();
        }
        s
    }

    /// Cholesky factor of `I + a HᴴH`; returns `ln det`.
    fn factor(&mut self, a: f64) -> f64 {
        let (mt, mr) = (self.mt, self.mr);
        let mut ldet = 0.0;
        for j in 0..mr {
            for i in j..mr {
                let mut s = C64::new(if i == j { 1.0 } else { 0.0 }, 0.0);
                for t in 0..mt {
                    s += self.h[t * mr + i].conj() * self.h[t * mr + j] * a;
                }
                for k in 0..j {
                    s -= self.chol[i * mr + k] * self.chol[j * mr + k].conj();
                }
                if i == j {
                    let d = s.re.sqrt();
                    self.chol[j * mr + j] = C64::new(d, 0.0);
                    ldet += 2.0 * d.ln();
                } else {
                    self.chol[i * mr + j] = s / self.chol[j * mr + j].re;
                }
            }
        }
        ldet
    }

    /// `out = L⁻¹ conj(b)`.
    fn solve(chol: &[C64], mr: usize, b: &[C64], out: &mut [C64]) {
        for i in 0..mr {
            let mut s = b[i].conj();
            for k in 0..i {
                s -= chol[i * mr + k] * out[k];
            }
            out[i] = s / chol[i * mr + i].re;
        }
    }

    /// Row `r` of `G H` into `self.row`.
    fn gh_row(&mut self, r: usize) {
        let (mt, mr) = (self.mt, self.mr);
        for j in 0..mr {
            let mut s = C64::default();
            for t in 0..mt {
                s += self.g[r * mt + t] * self.h[t * mr + j];
            }
            self.row[j] = s;
        }
    }
}

fn dot_re(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.conj() * y).re).sum()
}

fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// One sample of `ln dP_{XHY}/d(P_X Q_{HY})`.
fn denominator_llr(spec: &MimoSpec, measure: Measure, blk: &mut Block, rng: &mut ChaCha8Rng) -> f64 {
    let a = spec.snr / spec.m_t as f64;
    let sa = a.sqrt();
    let (mr, nc) = (spec.m_r, spec.n_c);
    let (mut gg, mut ldet) = (0.0, 0.0);
    // P: ‖c L⁻¹m + L⁻¹w‖² - ‖w‖², as quadratic in c.
    // Q: ‖L⁻¹y‖² - ‖y - c m‖², as quadratic in c.
    let (mut k0, mut k1, mut k2) = (0.0, 0.0, 0.0);
    for _ in 0..spec.l {
        blk.draw_h(rng);
        gg += blk.draw_g(rng);
        ldet += nc as f64 * blk.factor(a);
        for r in 0..nc {
            blk.gh_row(r);
            match measure {
                Measure::P => {
                    for w in blk.w.iter_mut() {
                        *w = cn(rng);
                    }
                    Block::solve(&blk.chol, mr, &blk.row, &mut blk.u);
                    Block::solve(&blk.chol, mr, &blk.w, &mut blk.v);
                    k0 += norm_sqr(&blk.v) - norm_sqr(&blk.w);
                    k1 += 2.0 * dot_re(&blk.u, &blk.v);
                    k2 += norm_sqr(&blk.u);
                }
                Measure::Q => {
                    for x in blk.xq.iter_mut() {
                        *x = cn(rng) * sa;
                    }
                    for j in 0..mr {
                        let mut s = cn(rng);
                        for (t, x) in blk.xq.iter().enumerate() {
                            s += x * blk.h[t * mr + j];
                        }
                        blk.y[j] = s;
                    }
                    Block::solve(&blk.chol, mr, &blk.y, &mut blk.v);
                    k0 += norm_sqr(&blk.v) - norm_sqr(&blk.y);
                    k1 += 2.0 * dot_re(&blk.row, &blk.y);
                    k2 -= norm_sqr(&blk.row);
                }
            }
        }
    }
    let c = (spec.n() as f64 * spec.snr / gg).sqrt();
    ldet + k0 + c * k1 + c * c * k2
}

/// One sample of `ln d(P_X̃ P^(s))/d(P_X̃ P)`, the rescaled-input channel
/// against the original one given `X̃` and `H`.
fn numerator_llr(spec: &MimoSpec, measure: Measure, blk: &mut Block, rng: &mut ChaCha8Rng) -> f64 {
    let a = spec.snr / spec.m_t as f64;
    let (mut gg, mut mm) = (0.0, 0.0);
    for _ in 0..spec.l {
        blk.draw_h(rng);
        gg += blk.draw_g(rng);
        for r in 0..spec.n_c {
            blk.gh_row(r);
            mm += norm_sqr(&blk.row);
        }
    }
    let (gg, mm) = (a * gg, a * mm);
    let s = (spec.n() as f64 * spec.snr / gg).sqrt();
    let d = (s - 1.0).powi(2) * mm;
    let z: f64 = rng.sample(StandardNormal);
    let shift = SQRT_2 * (s - 1.0).abs() * mm.sqrt() * z;
    match measure {
        Measure::P => d + shift,
        Measure::Q => -d + shift,
    }
}

fn sample_stream(
    spec: &MimoSpec,
    count: usize,
    seed: Seed,
    tag: u64,
    draw: fn(&MimoSpec, Measure, &mut Block, &mut ChaCha8Rng) -> f64,
    measure: Measure,
) -> Vec<f64> {
    let chunks = count.div_ceil(MIMO_CHUNK);
    let threads = std::thread::available_parallelism().map(|t| t.get()).unwrap_or(1).clamp(1, chunks.max(1));
    let mut parts: Vec<(usize, Vec<f64>)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                s.spawn(move || {
                    let mut blk = Block::new(spec);
                    (t..chunks)
                        .step_by(threads)
                        .map(|k| {
                            let mut rng = seed.substream((tag << 40) | k as u64);
                            let len = MIMO_CHUNK.min(count - k * MIMO_CHUNK);
                            (k, (0..len).map(|_| draw(spec, measure, &mut blk, &mut rng)).collect())
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("sampling worker panicked")).collect()
    });
    parts.sort_by_key(|(k, _)| *k);
    parts.into_iter().flat_map(|(_, v)| v).collect()
}

fn measure_tag(measure: Measure) -> u64 {
    match measure {
        Measure::P => 0,
        Measure::Q => 1,
    }
}

/// `count` draws of the denominator LLR under `P_{XHY}` or `P_X Q_{HY}`.
pub fn sample_denominator_llr(spec: &MimoSpec, measure: Measure, count: usize, seed: Seed) -> Vec<f64> {
    sample_stream(spec, count, seed, 2 + measure_tag(measure), denominator_llr, measure)
}

/// `count` draws of the numerator LLR under the rescaled or original channel.
pub fn sample_numerator_llr(spec: &MimoSpec, measure: Measure, count: usize, seed: Seed) -> Vec<f64> {
    sample_stream(spec, count, seed, 4 + measure_tag(measure), numerator_llr, measure)
}

/// Monte-Carlo `β_α` with certified bounds. The `ln_*` fields carry the same
/// quantities in the log domain and stay finite when the linear values underflow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    pub alpha: f64,
    /// Randomized empirical Neyman–Pearson test at level α.
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub ln_point: f64,
    pub ln_lower: f64,
    pub ln_upper: f64,
    /// Q-samples beyond the thresholds used for `lower` and `upper`.
    pub q_count_lower: u64,
    pub q_count_upper: u64,
    /// Fewer than [`FEW_TAIL_SAMPLES`] Q-samples support a bound.
    pub few_tail_samples: bool,
    /// `point` was computed from P-samples weighted by `e^{-LLR}` because too
    /// few Q-samples passed the threshold.
    pub importance_weighted: bool,
}

/// Window widths (nats) above the lower-bound threshold tried with auxiliary P-samples.
const AUX_WINDOWS: [f64; 4] = [0.5, 1.0, 2.0, 4.0];

fn count_ge(sorted: &[f64], t: f64) -> usize {
    sorted.len() - sorted.partition_point(|&x| x < t)
}

fn count_gt(sorted: &[f64], t: f64) -> usize {
    sorted.len() - sorted.partition_point(|&x| x <= t)
}

fn empirical_beta(p: &[f64], q: &[f64], alpha: f64) -> f64 {
    if alpha <= 0.0 {
        return 0.0;
    }
    if alpha >= 1.0 {
        return 1.0;
    }
    let target = alpha * p.len() as f64;
    let idx = p.len() - (target.ceil() as usize).clamp(1, p.len());
    let g = p[idx];
    let (gt, ge) = (count_gt(p, g) as f64, count_ge(p, g) as f64);
    let lam = if ge > gt { ((target - gt) / (ge - gt)).clamp(0.0, 1.0) } else { 0.0 };
    let (qgt, qge) = (count_gt(q, g) as f64, count_ge(q, g) as f64);
    (qgt + lam * (qge - qgt)) / q.len() as f64
}

/// `ln(Q[L > g] + λ Q[L = g])` as the P-expectation of `e^{-L}`, for LLR samples.
fn ln_weighted_tail(p: &[f64], g: f64, lam: f64) -> f64 {
    let start = p.partition_point(|&x| x < g);
    let mut s = 0.0;
    for &x in &p[start..] {
        let w = (g - x).exp();
        s += if x > g { w } else { lam * w };
    }
    -g + (s / p.len() as f64).ln()
}

/// `β_α` from sorted LLR samples. Each of the four random events (two
/// thresholds, two Q-tail bounds) fails with probability at most `delta`.
/// `aux`, sorted P-samples independent of `p`, offers extra lower bounds
/// `e^{-D-c} P[D < L ≤ D+c]` that share the lower Q-tail budget.
fn beta_sorted(p: &[f64], q: &[f64], aux: Option<&[f64]>, alpha: f64, delta: f64) -> BetaEstimate {
    let (np, nq) = (p.len() as u64, q.len() as u64);
    // {L ≥ L_(j)} keeps P-mass ≥ α when P[L < L_(j)] ≤ 1 - α; its Q-mass is
    // also at most e^{-L_(j)}.
    let (ln_upper, q_count_upper) = match largest_k_cdf_below(np, 1.0 - alpha, delta) {
        Some(j) if j <= np => {
            let g = p[j as usize - 1];
            let k = count_ge(q, g) as u64;
            (clopper_pearson_upper(k, nq, delta).ln().min(-g), k)
        }
        _ => (0.0, nq),
    };
    // {L > D_(j)} has P-mass ≤ α when P[L > D_(j)] ≤ α, so its Q-mass is below β_α.
    let (ln_lower, q_count_lower) = match largest_k_cdf_below(np, alpha, delta) {
        Some(j) if j <= np => {
            let d = p[(np - j) as usize];
            let k = count_gt(q, d) as u64;
            let lower = match aux {
                None => clopper_pearson_lower(k, nq, delta).ln(),
                Some(aux) => {
                    let share = delta / (1 + AUX_WINDOWS.len()) as f64;
                    let na = aux.len() as u64;
                    AUX_WINDOWS.iter().fold(clopper_pearson_lower(k, nq, share).ln(), |best, &c| {
                        let inside = (count_gt(aux, d) - count_gt(aux, d + c)) as u64;
                        best.max(-d - c + clopper_pearson_lower(inside, na, share).ln())
                    })
                }
            };
            (lower, k)
        }
        _ => (f64::NEG_INFINITY, 0),
    };
    let mut ln_point = empirical_beta(p, q, alpha).ln();
    let mut importance_weighted = false;
    if alpha > 0.0 && alpha < 1.0 {
        let target = alpha * np as f64;
        let g = p[p.len() - (target.ceil() as usize).clamp(1, p.len())];
        if (count_ge(q, g) as u64) < FEW_TAIL_SAMPLES {
            let (gt, ge) = (count_gt(p, g) as f64, count_ge(p, g) as f64);
            let lam = if ge > gt { ((target - gt) / (ge - gt)).clamp(0.0, 1.0) } else { 0.0 };
            ln_point = ln_weighted_tail(p, g, lam);
            importance_weighted = true;
        }
    }
    BetaEstimate {
        alpha,
        point: ln_point.exp(),
        lower: ln_lower.exp(),
        upper: ln_upper.exp(),
        ln_point,
        ln_lower,
        ln_upper,
        q_count_lower,
        q_count_upper,
        few_tail_samples: q_count_lower < FEW_TAIL_SAMPLES || q_count_upper < FEW_TAIL_SAMPLES,
        importance_weighted,
    }
}

fn sorted(xs: &[f64]) -> Result<Vec<f64>> {
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite LLR sample".into()));
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// `β_α(P, Q)` from LLR samples under each law, with `[lower, upper]`
/// holding jointly with the given confidence.
pub fn mc_beta(p_llr: &[f64], q_llr: &[f64], alpha: f64, confidence: f64) -> Result<BetaEstimate> {
    if p_llr.len() < MIN_SAMPLES || q_llr.len() < MIN_SAMPLES {
        return Err(Error::Invalid(format!("need at least {MIN_SAMPLES} samples per measure")));
    }
    if !(alpha > 0.0 && alpha < 1.0) || !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::Invalid("α and confidence must lie in (0,1)".into()));
    }
    let (p, q) = (sorted(p_llr)?, sorted(q_llr)?);
    Ok(beta_sorted(&p, &q, None, alpha, (1.0 - confidence) / 4.0))
}

/// Default τ grid: log-spaced in `(ε/100, 0.9ε)`.
pub fn default_tau_grid(eps: f64) -> Vec<f64> {
    log_grid(eps / 100.0, 0.9 * eps, DEFAULT_TAU_POINTS)
}

/// Certified Monte-Carlo lower bound on `ln M*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MimoBound {
    /// `log_m` and `rate` hold at the stated confidence.
    pub bound: BoundResult,
    pub log_m_point: f64,
    pub rate_point: f64,
    /// `rate_point - bound.rate`, nats per channel use.
    pub ci_radius: f64,
    pub numerator: BetaEstimate,
    pub denominator: BetaEstimate,
    pub confidence: f64,
}

/// Maximum over `τ` of `ln β_τ(numerator) - ln β_{1-ε+τ}(denominator)`, with
/// the numerator bounded below and the denominator above. All `4·|grid|`
/// random events share the failure budget `1 - confidence`.
pub fn rate_lower_bound(spec: &MimoSpec, tau_grid: Option<&[f64]>) -> Result<MimoBound> {
    if spec.samples < MIN_SAMPLES {
        return Err(Error::Invalid(format!("need at least {MIN_SAMPLES} samples per measure")));
    }
    if !(spec.confidence > 0.0 && spec.confidence < 1.0) {
        return Err(Error::Invalid("confidence must lie in (0,1)".into()));
    }
    let grid = match tau_grid {
        Some(g) => g.to_vec(),
        None => default_tau_grid(spec.eps),
    };
    if grid.is_empty() || grid.iter().any(|&t| !(t > 0.0 && t < spec.eps)) {
        return Err(Error::Invalid("τ grid must be non-empty and inside (0, ε)".into()));
    }
    let (n, seed) = (spec.samples, spec.seed);
    let den_p = sorted(&sample_denominator_llr(spec, Measure::P, n, seed))?;
    let den_q = sorted(&sample_denominator_llr(spec, Measure::Q, n, seed))?;
    let num_p = sorted(&sample_numerator_llr(spec, Measure::P, n, seed))?;
    let num_q = sorted(&sample_numerator_llr(spec, Measure::Q, n, seed))?;
    let num_aux = sorted(&sample_stream(spec, n, seed, 6, numerator_llr, Measure::P))?;
    let delta = (1.0 - spec.confidence) / (4 * grid.len()) as f64;
    let mut best: Option<(f64, f64, f64, BetaEstimate, BetaEstimate)> = None;
    for &tau in &grid {
        let num = beta_sorted(&num_p, &num_q, Some(&num_aux), tau, delta);
        let den = beta_sorted(&den_p, &den_q, None, 1.0 - spec.eps + tau, delta);
        let certified = num.ln_lower - den.ln_upper;
        let point = num.ln_point - den.ln_point;
        let better = match &best {
            None => true,
            Some((c, p, ..)) => certified > *c || (certified == *c && point > *p),
        };
        if better {
            best = Some((certified, point, tau, num, den));
        }
    }
    let (log_m, log_m_point, tau, numerator, denominator) = best.expect("grid is non-empty");
    let blocklength = spec.n();
    let bound = BoundResult::new(BoundKind::BbAchievability, log_m, blocklength, tau)
        .with("log_beta_numerator_lower", numerator.ln_lower)
        .with("log_beta_denominator_upper", denominator.ln_upper);
    let rate_point = log_m_point / blocklength as f64;
    Ok(MimoBound {
        ci_radius: rate_point - bound.rate,
        bound,
        log_m_point,
        rate_point,
        numerator,
        denominator,
        confidence: spec.confidence,
    })
}

/// Capacity and dispersion of the CSIR block-fading channel with isotropic
/// Gaussian inputs, estimated by sampling `H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsirNormalApprox {
    /// `E[ln det(I + (ρ/m_t) HᴴH)]`, nats per coherence block.
    pub log_det_mean: f64,
    pub log_det_var: f64,
    /// Nats per channel use.
    pub capacity: f64,
    /// `n_c Var[ln det] + m_r - E[tr(I + (ρ/m_t) HᴴH)⁻²]`, per channel use
    /// with the log-det variance divided by `n_c`.
    pub dispersion: f64,
}

impl CsirNormalApprox {
    /// `C - √(V/n)·Q⁻¹(ε)`, nats per channel use.
    pub fn rate(&self, n: usize, eps: f64) -> f64 {
        self.capacity - (self.dispersion / n as f64).sqrt() * q_inv(eps).unwrap_or(f64::NAN)
    }
}

/// Reference normal approximation for the block-fading channel.
pub fn csir_normal_approx(m_t: usize, m_r: usize, n_c: usize, snr: f64, samples: usize, seed: Seed) -> Result<CsirNormalApprox> {
    let spec = MimoSpec::new(m_t, m_r, n_c, 1, snr, 0.5)?;
    if samples < 2 {
        return Err(Error::Invalid("need at least two channel samples".into()));
    }
    let a = snr / m_t as f64;
    let mut blk = Block::new(&spec);
    let mut rng = seed.substream(1 << 41);
    let (mut s1, mut s2, mut tr) = (0.0, 0.0, 0.0);
    let mut e = vec![C64::default(); m_r];
    let mut col = vec![C64::default(); m_r];
    let mut inv = vec![C64::default(); m_r * m_r];
    for _ in 0..samples {
        blk.draw_h(&mut rng);
        let ld = blk.factor(a);
        s1 += ld;
        s2 += ld * ld;
        // Columns of L⁻¹, then tr Σ⁻² = ‖L⁻ᴴL⁻¹‖²_F.
        for j in 0..m_r {
            e.iter_mut().enumerate().for_each(|(i, x)| *x = C64::new(if i == j { 1.0 } else { 0.0 }, 0.0));
            Block::solve(&blk.chol, m_r, &e, &mut col);
            for i in 0..m_r {
                inv[i * m_r + j] = col[i];
            }
        }
        let mut fro = 0.0;
        for i in 0..m_r {
            for j in 0..m_r {
                let s: C64 = (0..m_r).map(|k| inv[k * m_r + i].conj() * inv[k * m_r + j]).sum();
                fro += s.norm_sqr();
            }
        }
        tr += fro;
    }
    let ns = samples as f64;
    let mean = s1 / ns;
    let var = (s2 / ns - mean * mean) * ns / (ns - 1.0);
    let ncf = n_c as f64;
    Ok(CsirNormalApprox {
        log_det_mean: mean,
        log_det_var: var,
        capacity: mean,
        dispersion: ncf * var + m_r as f64 - tr / ns,
    })
}

/// One point of the rate-versus-blocklength curve, in bits per channel use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MimoCurvePoint {
    pub n: usize,
    pub rate_bits_lower: f64,
    pub rate_bits_point: f64,
    pub ci_radius_bits: f64,
    pub normal_approx_bits: f64,
    pub tau: f64,
}

/// Certified bound and reference normal approximation at each `n` in `ns`
/// (multiples of `n_c`).
pub fn rate_curve(base: &MimoSpec, ns: &[usize], reference_samples: usize) -> Result<Vec<MimoCurvePoint>> {
    let na = csir_normal_approx(base.m_t, base.m_r, base.n_c, base.snr, reference_samples, base.seed)?;
    ns.iter()
        .map(|&n| {
            if n == 0 || n % base.n_c != 0 {
                return Err(Error::Invalid(format!("n = {n} is not a positive multiple of n_c = {}", base.n_c)));
            }
            let b = rate_lower_bound(&base.with_l(n / base.n_c), None)?;
            Ok(MimoCurvePoint {
                n,
                rate_bits_lower: b.bound.rate / LN_2,
                rate_bits_point: b.rate_point / LN_2,
                ci_radius_bits: b.ci_radius / LN_2,
                normal_approx_bits: na.rate(n, base.eps) / LN_2,
                tau: b.bound.tau,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_log_det_of_rank_one() {
        // 1×2 H: HᴴH has eigenvalues {‖h‖², 0}.
        let spec = MimoSpec::new(1, 2, 1, 1, 1.0, 0.1).unwrap();
        let mut blk = Block::new(&spec);
        blk.h = vec![C64::new(1.0, 1.0), C64::new(0.0, 2.0)];
        let ld = blk.factor(0.5);
        assert!((ld - (1.0f64 + 0.5 * 6.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn empirical_beta_with_ties() {
        let p = [0.0, 1.0, 1.0, 2.0];
        let q = [0.0, 0.0, 1.0, 2.0];
        // α = 1/2: take all of {2}, half of {1}.
        assert!((empirical_beta(&p, &q, 0.5) - (0.25 + 0.5 * 0.25)).abs() < 1e-15);
        assert_eq!(empirical_beta(&p, &q, 1.0), 1.0);
    }
}
