//! Checks of the structural properties of `β_α`: data processing, mixtures,
//! products, the two-sided comparison against `P_X P_Y`, and the Rényi bound.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::Serialize;

use super::{beta, BetaCurve, DiscreteChannel, DiscreteDist};
use crate::error::{Error, Result};
use crate::numerics::Seed;

/// Inequality checks pass when the slack is at least `-SLACK_TOL`.
pub const SLACK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Check {
    pub holds: bool,
    pub slack: f64,
}

impl Check {
    pub fn from_slack(slack: f64) -> Check {
        Check { holds: slack >= -SLACK_TOL, slack }
    }
}

/// Data processing: `β_α(P_X, Q_X) ≤ β_α(W∘P_X, W∘Q_X)`; slack is RHS − LHS.
pub fn check_dpi(p_x: &DiscreteDist, q_x: &DiscreteDist, kernel: &DiscreteChannel, alpha: f64) -> Result<Check> {
    let lhs = beta(alpha, p_x, q_x)?.0;
    let rhs = beta(alpha, &kernel.output(p_x)?, &kernel.output(q_x)?)?.0;
    Ok(Check::from_slack(rhs - lhs))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixtureCheck {
    /// Worst component of `β_α(P_XY, P_X Q_Y) ≥ λ_j β_{1-(1-α)/λ_j}(P_{X_j Y}, P_{X_j} Q_Y)`.
    pub bound: Check,
    pub per_component: Vec<f64>,
    /// For pairwise disjoint supports: `|β_α − inf Σ_j λ_j β_{α_j}|`.
    pub disjoint_gap: Option<f64>,
}

/// `inf Σ_j λ_j β_{α_j}(P_j, Q_j)` over `Σ_j λ_j α_j = α`, `α_j ∈ [0, 1]`.
/// Each curve is convex and piecewise linear, so the infimum fills blocks from
/// all components in order of increasing slope.
pub fn mixture_infimum(weights: &[f64], curves: &[BetaCurve], alpha: f64) -> f64 {
    let mut blocks: Vec<(f64, f64, f64)> = Vec::new();
    for (w, c) in weights.iter().zip(curves) {
        for (l, p, q) in c.block_iter() {
            blocks.push((l, w * p, w * q));
        }
    }
    blocks.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut need = alpha;
    let mut cost = 0.0;
    for (_, p, q) in blocks {
        if need <= 0.0 {
            break;
        }
        let take = need.min(p);
        cost += q * take / p;
        need -= take;
    }
    cost
}

fn mixture_input(weights: &[f64], components: &[DiscreteDist]) -> Result<DiscreteDist> {
    if weights.len() != components.len() || weights.is_empty() {
        return Err(Error::Invalid("one weight per component required".into()));
    }
    let s: f64 = weights.iter().sum();
    if (s - 1.0).abs() > 1e-12 || weights.iter().any(|w| *w <= 0.0) {
        return Err(Error::Invalid("mixture weights must be positive and sum to 1".into()));
    }
    let n = components[0].len();
    let mut v = vec![0.0; n];
    for (w, c) in weights.iter().zip(components) {
        if c.len() != n {
            return Err(Error::AlphabetMismatch(c.len(), n));
        }
        for (vi, ci) in v.iter_mut().zip(c.probs()) {
            *vi += w * ci;
        }
    }
    DiscreteDist::from_weights(v)
}

fn disjoint(components: &[DiscreteDist]) -> bool {
    let n = components[0].len();
    (0..n).all(|x| components.iter().filter(|c| c.probs()[x] > 0.0).count() <= 1)
}

pub fn check_mixture_bound(
    weights: &[f64],
    components: &[DiscreteDist],
    channel: &DiscreteChannel,
    q_y: &DiscreteDist,
    alpha: f64,
) -> Result<MixtureCheck> {
    let p_x = mixture_input(weights, components)?;
    let lhs = beta(alpha, &channel.joint(&p_x)?, &channel.input_times(&p_x, q_y)?)?.0;
    let mut per = Vec::with_capacity(components.len());
    let mut curves = Vec::with_capacity(components.len());
    for (w, c) in weights.iter().zip(components) {
        let curve = BetaCurve::new(channel.joint(c)?.probs(), channel.input_times(c, q_y)?.probs())?;
        let a = (1.0 - (1.0 - alpha) / w).clamp(0.0, 1.0);
        per.push(lhs - w * curve.beta(a));
        curves.push(curve);
    }
    let worst = per.iter().cloned().fold(f64::INFINITY, f64::min);
    let disjoint_gap = if disjoint(components) {
        Some((lhs - mixture_infimum(weights, &curves, alpha)).abs())
    } else {
        None
    };
    Ok(MixtureCheck { bound: Check::from_slack(worst), per_component: per, disjoint_gap })
}

/// Products: `β_α(P1P2, Q1Q2) ≥ β_{β_α(P1,Q1)}(P2, Q2)`.
pub fn check_product(alpha: f64, p1: &DiscreteDist, q1: &DiscreteDist, p2: &DiscreteDist, q2: &DiscreteDist) -> Result<Check> {
    let joint = beta(alpha, &p1.product(p2)?, &q1.product(q2)?)?.0;
    let inner = beta(alpha, p1, q1)?.0;
    let rhs = beta(inner.min(1.0), p2, q2)?.0;
    Ok(Check::from_slack(joint - rhs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichCheck {
    /// `β_{α+δ1}(P_XY, P_X Q_Y) / β_{δ1}(P_Y, Q_Y) ≥ β_α(P_XY, P_X P_Y)`.
    pub upper: Check,
    /// `β_α(P_XY, P_X P_Y) ≥ γ · β_{α-δ2}(P_XY, P_X Q_Y)`.
    pub lower: Check,
    /// Largest γ with `P_Y[dP_Y/dQ_Y ≥ γ] ≥ 1 - δ2`.
    pub gamma: f64,
}

/// Largest γ with `P[dP/dQ ≥ γ] ≥ mass`.
pub fn ratio_quantile(p: &DiscreteDist, q: &DiscreteDist, mass: f64) -> f64 {
    let mut atoms: Vec<(f64, f64)> = p
        .probs()
        .iter()
        .zip(q.probs())
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(&pi, &qi)| (if qi > 0.0 { pi / qi } else { f64::INFINITY }, pi))
        .collect();
    atoms.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut acc = 0.0;
    for (r, pi) in &atoms {
        acc += pi;
        if acc >= mass - 1e-15 {
            return *r;
        }
    }
    atoms.last().map(|a| a.0).unwrap_or(0.0)
}

pub fn check_sandwich(
    p_x: &DiscreteDist,
    channel: &DiscreteChannel,
    q_y: &DiscreteDist,
    alpha: f64,
    delta1: f64,
    delta2: f64,
) -> Result<SandwichCheck> {
    if !(delta1 > 0.0 && delta1 < 1.0 - alpha) {
        return Err(Error::Invalid(format!("δ1 = {delta1} outside (0, 1-α)")));
    }
    if !(delta2 > 0.0 && delta2 < alpha) {
        return Err(Error::Invalid(format!("δ2 = {delta2} outside (0, α)")));
    }
    let p_y = channel.output(p_x)?;
    let pxy = channel.joint(p_x)?;
    let against_q = BetaCurve::new(pxy.probs(), channel.input_times(p_x, q_y)?.probs())?;
    let mid = beta(alpha, &pxy, &channel.input_times(p_x, &p_y)?)?.0;

    let denom = beta(delta1, &p_y, q_y)?.0;
    let up = against_q.beta(alpha + delta1);
    let upper = if denom > 0.0 { up / denom - mid } else { f64::INFINITY };

    let gamma = ratio_quantile(&p_y, q_y, 1.0 - delta2);
    let b = against_q.beta(alpha - delta2);
    let low = if b == 0.0 { 0.0 } else { gamma * b };
    Ok(SandwichCheck { upper: Check::from_slack(upper), lower: Check::from_slack(mid - low), gamma })
}

/// Rényi divergence of order `λ > 1` in nats; `+inf` unless `P ≪ Q`.
pub fn renyi_divergence(p: &DiscreteDist, q: &DiscreteDist, lambda: f64) -> f64 {
    let mut terms = Vec::new();
    for (&pi, &qi) in p.probs().iter().zip(q.probs()) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return f64::INFINITY;
        }
        terms.push(lambda * pi.ln() + (1.0 - lambda) * qi.ln());
    }
    crate::numerics::special::log_sum_exp(&terms) / (lambda - 1.0)
}

/// `α^{λ/(λ-1)} (e^{(λ-1) D_λ(P‖Q)} - (1-α)^λ)^{-1/(λ-1)}`, or 0 for infinite divergence.
pub fn renyi_lower_bound(p: &DiscreteDist, q: &DiscreteDist, alpha: f64, lambda: f64) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::AlphabetMismatch(p.len(), q.len()));
    }
    if !(lambda > 1.0) {
        return Err(Error::Invalid(format!("Rényi order {lambda} must exceed 1")));
    }
    let d = renyi_divergence(p, q, lambda);
    if !d.is_finite() || alpha <= 0.0 {
        return Ok(0.0);
    }
    let e = ((lambda - 1.0) * d).exp();
    let inner = e - (1.0 - alpha).powf(lambda);
    if inner <= 0.0 {
        return Ok(0.0);
    }
    Ok((lambda / (lambda - 1.0) * alpha.ln() - inner.ln() / (lambda - 1.0)).exp())
}

pub fn check_renyi(p: &DiscreteDist, q: &DiscreteDist, alpha: f64, lambda: f64) -> Result<Check> {
    let b = beta(alpha, p, q)?.0;
    Ok(Check::from_slack(b - renyi_lower_bound(p, q, alpha, lambda)?))
}

/// Outcome of one property over many random instances.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub name: String,
    pub trials: usize,
    pub violations: usize,
    pub min_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub properties: Vec<PropertyReport>,
}

impl SuiteReport {
    pub fn all_hold(&self) -> bool {
        self.properties.iter().all(|p| p.violations == 0)
    }
}

pub(crate) fn random_dist<R: Rng>(rng: &mut R, n: usize, zero_prob: f64) -> DiscreteDist {
    loop {
        let w: Vec<f64> = (0..n)
            .map(|_| if rng.gen::<f64>() < zero_prob { 0.0 } else { Exp1.sample(rng) })
            .collect();
        if w.iter().any(|x| *x > 0.0) {
            return DiscreteDist::from_weights(w).expect("positive weights");
        }
    }
}

pub(crate) fn random_channel<R: Rng>(rng: &mut R, n_in: usize, n_out: usize, zero_prob: f64) -> DiscreteChannel {
    let rows: Vec<DiscreteDist> = (0..n_in).map(|_| random_dist(rng, n_out, zero_prob)).collect();
    DiscreteChannel::from_rows(&rows).expect("valid rows")
}

fn random_alpha<R: Rng>(rng: &mut R) -> f64 {
    match rng.gen_range(0..20) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.gen(),
    }
}

struct Tally {
    name: &'static str,
    trials: usize,
    violations: usize,
    min_slack: f64,
}

impl Tally {
    fn new(name: &'static str) -> Tally {
        Tally { name, trials: 0, violations: 0, min_slack: f64::INFINITY }
    }
    fn add(&mut self, ok: bool, slack: f64) {
        self.trials += 1;
        if !ok {
            self.violations += 1;
        }
        self.min_slack = self.min_slack.min(slack);
    }
    fn report(self) -> PropertyReport {
        PropertyReport { name: self.name.into(), trials: self.trials, violations: self.violations, min_slack: self.min_slack }
    }
}

/// Run each property on `trials` random instances over alphabets of at most six atoms.
pub fn run_suite(trials: usize, seed: Seed) -> Result<SuiteReport> {
    let mut dpi = Tally::new("data-processing");
    let mut mix = Tally::new("mixture");
    let mut prod = Tally::new("product");
    let mut sand = Tally::new("sandwich");
    let mut ren = Tally::new("renyi");

    let mut rng = seed.substream(1);
    for _ in 0..trials {
        let nx = rng.gen_range(2..=6);
        let ny = rng.gen_range(2..=6);
        let p = random_dist(&mut rng, nx, 0.15);
        let q = random_dist(&mut rng, nx, 0.15);
        let k = random_channel(&mut rng, nx, ny, 0.15);
        let c = check_dpi(&p, &q, &k, random_alpha(&mut rng))?;
        dpi.add(c.holds, c.slack);
    }

    let mut rng = seed.substream(2);
    for t in 0..trials {
        let nx = rng.gen_range(2..=6);
        let ny = rng.gen_range(2..=6);
        let ch = random_channel(&mut rng, nx, ny, 0.15);
        let q_y = random_dist(&mut rng, ny, 0.0);
        let j = rng.gen_range(2..=nx.min(3));
        let comps: Vec<DiscreteDist> = if t % 2 == 0 {
            // Pairwise disjoint supports: split the input alphabet.
            let cut: Vec<usize> = (0..nx).map(|x| x % j).collect();
            (0..j)
                .map(|c| {
                    let w: Vec<f64> =
                        (0..nx).map(|x| if cut[x] == c { Exp1.sample(&mut rng) } else { 0.0 }).collect();
                    DiscreteDist::from_weights(w).expect("nonempty part")
                })
                .collect()
        } else {
            (0..j).map(|_| random_dist(&mut rng, nx, 0.2)).collect()
        };
        let w = random_dist(&mut rng, j, 0.0);
        let w: Vec<f64> = w.probs().iter().map(|x| x.max(1e-3)).collect();
        let s: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|x| x / s).collect();
        let m = check_mixture_bound(&w, &comps, &ch, &q_y, random_alpha(&mut rng))?;
        let eq_ok = m.disjoint_gap.map(|g| g <= 1e-12).unwrap_or(true);
        mix.add(m.bound.holds && eq_ok, m.bound.slack.min(-m.disjoint_gap.unwrap_or(0.0)));
    }

    let mut rng = seed.substream(3);
    for _ in 0..trials {
        let n1 = rng.gen_range(2..=6);
        let n2 = rng.gen_range(2..=6);
        let p1 = random_dist(&mut rng, n1, 0.15);
        let q1 = random_dist(&mut rng, n1, 0.15);
        let p2 = random_dist(&mut rng, n2, 0.15);
        let q2 = random_dist(&mut rng, n2, 0.15);
        let c = check_product(random_alpha(&mut rng), &p1, &q1, &p2, &q2)?;
        prod.add(c.holds, c.slack);
    }

    let mut rng = seed.substream(4);
    for _ in 0..trials {
        let p_x = random_dist(&mut rng, 5, 0.1);
        let ch = random_channel(&mut rng, 5, 5, 0.1);
        let q_y = random_dist(&mut rng, 5, 0.0);
        let alpha = rng.gen_range(0.05..0.95);
        let d1 = rng.gen_range(0.0..1.0) * (1.0 - alpha);
        let d2 = rng.gen_range(0.0..1.0) * alpha;
        if d1 <= 0.0 || d2 <= 0.0 {
            continue;
        }
        let s = check_sandwich(&p_x, &ch, &q_y, alpha, d1, d2)?;
        sand.add(s.upper.holds && s.lower.holds, s.upper.slack.min(s.lower.slack));
    }

    let mut rng = seed.substream(5);
    for t in 0..trials {
        let n = rng.gen_range(2..=6);
        let p = random_dist(&mut rng, n, 0.15);
        let q = random_dist(&mut rng, n, if t % 4 == 0 { 0.3 } else { 0.0 });
        let lambda = [1.5, 2.0, 4.0][t % 3];
        let c = check_renyi(&p, &q, random_alpha(&mut rng), lambda)?;
        ren.add(c.holds, c.slack);
    }

    Ok(SuiteReport {
        seed: seed.0,
        properties: vec![dpi.report(), mix.report(), prod.report(), sand.report(), ren.report()],
    })
}
