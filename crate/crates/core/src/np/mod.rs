//! Exact Neyman–Pearson β functions on finite alphabets.
//!
//! `β_α(P, Q)` is the smallest `Q`-probability of acceptance among randomized
//! tests whose `P`-probability of acceptance is at least `α`. The optimal test
//! accepts atoms in decreasing order of `ln P/Q`, randomizing on the boundary.

mod dist;
pub mod io;
pub mod lemma;

pub use dist::{DiscreteChannel, DiscreteDist, PRODUCT_CAP};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Atoms whose log-likelihood ratios differ by less than this (relative to
/// `max(1, |llr|)`) are treated as one boundary block.
pub const TIE_TOL: f64 = 1e-12;

/// The optimal randomized test returned by [`beta`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NpTest {
    /// Boundary value of `ln dP/dQ`.
    pub llr_threshold: f64,
    /// Probability of accepting an atom on the boundary block.
    pub randomization: f64,
    pub achieved_power: f64,
    pub achieved_size: f64,
}

/// `ln p - ln q`, with `+inf` for `q = 0 < p` and `-inf` for `p = 0`.
pub fn llr(p: f64, q: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else if q <= 0.0 {
        f64::INFINITY
    } else {
        p.ln() - q.ln()
    }
}

fn same_block(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= TIE_TOL * a.abs().max(1.0)
}

impl NpTest {
    /// Probability with which the test accepts an atom of the given LLR.
    pub fn acceptance(&self, l: f64) -> f64 {
        if same_block(l, self.llr_threshold) {
            self.randomization
        } else if l > self.llr_threshold {
            1.0
        } else {
            0.0
        }
    }

    /// `(P[accept], Q[accept])` by direct summation over the atoms.
    pub fn apply(&self, p: &DiscreteDist, q: &DiscreteDist) -> Result<(f64, f64)> {
        check_same(p, q)?;
        let mut pa = 0.0;
        let mut qa = 0.0;
        for (&pi, &qi) in p.probs().iter().zip(q.probs()) {
            if pi == 0.0 {
                continue;
            }
            let a = self.acceptance(llr(pi, qi));
            pa += a * pi;
            qa += a * qi;
        }
        Ok((pa, qa))
    }
}

fn check_same(p: &DiscreteDist, q: &DiscreteDist) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::AlphabetMismatch(p.len(), q.len()));
    }
    Ok(())
}

/// The whole curve `α ↦ β_α(P, Q)`: tie-merged blocks sorted by decreasing LLR
/// with cumulative masses. The curve is piecewise linear with breakpoints at
/// the cumulative `P`-masses.
#[derive(Debug, Clone)]
pub struct BetaCurve {
    llr: Vec<f64>,
    pmass: Vec<f64>,
    qmass: Vec<f64>,
    cum_p: Vec<f64>,
    cum_q: Vec<f64>,
}

impl BetaCurve {
    pub fn new(p: &[f64], q: &[f64]) -> Result<BetaCurve> {
        if p.len() != q.len() {
            return Err(Error::AlphabetMismatch(p.len(), q.len()));
        }
        let mut atoms: Vec<(f64, f64, f64)> = p
            .iter()
            .zip(q)
            .filter(|(&pi, _)| pi > 0.0)
            .map(|(&pi, &qi)| (llr(pi, qi), pi, qi))
            .collect();
        atoms.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        Ok(Self::from_sorted_atoms(atoms.into_iter()))
    }

    /// Build from atoms `(llr, p, q)` already sorted by decreasing LLR.
    pub fn from_sorted_atoms(atoms: impl Iterator<Item = (f64, f64, f64)>) -> BetaCurve {
        let mut llr_v = Vec::new();
        let mut pm = Vec::new();
        let mut qm = Vec::new();
        for (l, pi, qi) in atoms {
            if let Some(&last) = llr_v.last() {
                if same_block(last, l) {
                    *pm.last_mut().unwrap() += pi;
                    *qm.last_mut().unwrap() += qi;
                    continue;
                }
            }
            llr_v.push(l);
            pm.push(pi);
            qm.push(qi);
        }
        let mut cum_p = Vec::with_capacity(pm.len() + 1);
        let mut cum_q = Vec::with_capacity(pm.len() + 1);
        let (mut sp, mut sq) = (0.0, 0.0);
        cum_p.push(0.0);
        cum_q.push(0.0);
        for (a, b) in pm.iter().zip(&qm) {
            sp += a;
            sq += b;
            cum_p.push(sp);
            cum_q.push(sq);
        }
        BetaCurve { llr: llr_v, pmass: pm, qmass: qm, cum_p, cum_q }
    }

    pub fn total_p(&self) -> f64 {
        *self.cum_p.last().unwrap()
    }

    /// Breakpoints of the curve in `α`, including 0.
    pub fn breakpoints(&self) -> &[f64] {
        &self.cum_p
    }

    pub fn blocks(&self) -> usize {
        self.llr.len()
    }

    /// Exact `β_α` and the optimal test.
    pub fn eval(&self, alpha: f64) -> (f64, NpTest) {
        let alpha = alpha.clamp(0.0, 1.0);
        if self.llr.is_empty() {
            let t = NpTest { llr_threshold: f64::INFINITY, randomization: 0.0, achieved_power: 0.0, achieved_size: 0.0 };
            return (0.0, t);
        }
        let a = alpha.min(self.total_p());
        // first block b with cum_p[b+1] >= a
        let b = match self.cum_p[1..].binary_search_by(|c| c.partial_cmp(&a).unwrap()) {
            Ok(i) => i,
            Err(i) => i.min(self.llr.len() - 1),
        };
        let r = if a >= self.cum_p[b + 1] {
            1.0
        } else if self.pmass[b] > 0.0 {
            ((a - self.cum_p[b]) / self.pmass[b]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let beta = self.cum_q[b] + r * self.qmass[b];
        let power = self.cum_p[b] + r * self.pmass[b];
        let test = NpTest { llr_threshold: self.llr[b], randomization: r, achieved_power: power, achieved_size: beta };
        (beta, test)
    }

    pub fn beta(&self, alpha: f64) -> f64 {
        self.eval(alpha).0
    }

    /// Largest `α` with `β_α ≤ b` (the inverse of the curve).
    pub fn alpha_at(&self, b: f64) -> f64 {
        let i = self.cum_q[1..].partition_point(|&c| c <= b);
        if i >= self.llr.len() {
            return self.total_p();
        }
        let r = if self.qmass[i] > 0.0 { ((b - self.cum_q[i]) / self.qmass[i]).clamp(0.0, 1.0) } else { 0.0 };
        self.cum_p[i] + r * self.pmass[i]
    }

    /// Blocks as `(llr, p-mass, q-mass)`.
    pub fn block_iter(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.llr.iter().zip(&self.pmass).zip(&self.qmass).map(|((&l, &p), &q)| (l, p, q))
    }
}

/// Exact `β_α(P, Q)` with the optimal randomized test.
pub fn beta(alpha: f64, p: &DiscreteDist, q: &DiscreteDist) -> Result<(f64, NpTest)> {
    check_same(p, q)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Invalid(format!("α = {alpha} outside [0,1]")));
    }
    Ok(BetaCurve::new(p.probs(), q.probs())?.eval(alpha))
}

/// Exact β on the explicitly formed product `⊗P_i` versus `⊗Q_i`.
pub fn product_beta(alpha: f64, ps: &[DiscreteDist], qs: &[DiscreteDist]) -> Result<f64> {
    if ps.len() != qs.len() || ps.is_empty() {
        return Err(Error::Invalid("need equally many nonempty P and Q factors".into()));
    }
    let p = DiscreteDist::product_of(ps)?;
    let q = DiscreteDist::product_of(qs)?;
    Ok(beta(alpha, &p, &q)?.0)
}
