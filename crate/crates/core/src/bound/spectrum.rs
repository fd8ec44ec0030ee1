//! β curves of memoryless products `P^n` versus `Q^n`.

use std::collections::HashMap;

use crate::error::Result;
use crate::np::{llr, BetaCurve, DiscreteDist, PRODUCT_CAP};

/// Spacing of the LLR lattice used when the product alphabet is too large to
/// materialize.
pub const LATTICE: f64 = 1e-9;

const INF_KEY: i64 = i64::MAX;

fn key(l: f64) -> i64 {
    if l == f64::INFINITY {
        INF_KEY
    } else {
        (l / LATTICE).round() as i64
    }
}

/// LLR spectrum as a map from lattice key to `(P-mass, Q-mass)`.
fn spectrum(p: &DiscreteDist, q: &DiscreteDist) -> HashMap<i64, (f64, f64)> {
    let mut m = HashMap::new();
    for (&pi, &qi) in p.probs().iter().zip(q.probs()) {
        if pi > 0.0 {
            let e = m.entry(key(llr(pi, qi))).or_insert((0.0, 0.0));
            e.0 += pi;
            e.1 += qi;
        }
    }
    m
}

fn convolve(a: &HashMap<i64, (f64, f64)>, b: &HashMap<i64, (f64, f64)>) -> HashMap<i64, (f64, f64)> {
    let mut out = HashMap::with_capacity(a.len() * b.len() / 2 + 1);
    for (&ka, &(pa, qa)) in a {
        for (&kb, &(pb, qb)) in b {
            let k = if ka == INF_KEY || kb == INF_KEY { INF_KEY } else { ka + kb };
            let e = out.entry(k).or_insert((0.0, 0.0));
            e.0 += pa * pb;
            e.1 += qa * qb;
        }
    }
    out
}

/// `α ↦ β_α(P^n, Q^n)`. Products with at most [`PRODUCT_CAP`] atoms are formed
/// explicitly; larger ones go through an LLR-spectrum convolution on a lattice
/// of spacing [`LATTICE`].
pub fn memoryless_curve(p: &DiscreteDist, q: &DiscreteDist, n: usize) -> Result<BetaCurve> {
    let n = n.max(1);
    let size = (p.len() as f64).powi(n as i32);
    if size <= PRODUCT_CAP as f64 {
        let (pn, qn) = (p.power(n)?, q.power(n)?);
        return BetaCurve::new(pn.probs(), qn.probs());
    }
    let base = spectrum(p, q);
    let mut acc = base.clone();
    for _ in 1..n {
        acc = convolve(&acc, &base);
    }
    let mut atoms: Vec<(i64, f64, f64)> = acc.into_iter().map(|(k, (a, b))| (k, a, b)).collect();
    atoms.sort_by(|a, b| b.0.cmp(&a.0));
    Ok(BetaCurve::from_sorted_atoms(
        atoms.into_iter().map(|(k, a, b)| (if k == INF_KEY { f64::INFINITY } else { k as f64 * LATTICE }, a, b)),
    ))
}
