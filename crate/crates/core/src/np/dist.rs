use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest alphabet formed explicitly by products and joint laws.
pub const PRODUCT_CAP: usize = 1_000_000;

const SUM_TOL: f64 = 1e-12;

/// Probability vector on an indexed finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDist {
    probs: Vec<f64>,
}

fn check_cap(size: usize) -> Result<()> {
    if size > PRODUCT_CAP {
        return Err(Error::TooLarge { size, cap: PRODUCT_CAP });
    }
    Ok(())
}

impl DiscreteDist {
    pub fn new(probs: Vec<f64>) -> Result<DiscreteDist> {
        if probs.is_empty() {
            return Err(Error::Invalid("empty distribution".into()));
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::Invalid(format!("invalid probability {bad}")));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > SUM_TOL {
            return Err(Error::Invalid(format!("probabilities sum to {s}, not 1")));
        }
        Ok(DiscreteDist { probs })
    }

    /// Normalize nonnegative weights.
    pub fn from_weights(w: Vec<f64>) -> Result<DiscreteDist> {
        let s: f64 = w.iter().sum();
        if !(s > 0.0 && s.is_finite()) || w.iter().any(|x| *x < 0.0) {
            return Err(Error::Invalid("weights must be nonnegative with positive sum".into()));
        }
        DiscreteDist::new(w.into_iter().map(|x| x / s).collect())
    }

    pub fn uniform(n: usize) -> DiscreteDist {
        DiscreteDist { probs: vec![1.0 / n as f64; n] }
    }

    pub fn point_mass(n: usize, i: usize) -> DiscreteDist {
        let mut probs = vec![0.0; n];
        probs[i] = 1.0;
        DiscreteDist { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Product law; index `i * other.len() + j`.
    pub fn product(&self, other: &DiscreteDist) -> Result<DiscreteDist> {
        check_cap(self.len().saturating_mul(other.len()))?;
        let mut v = Vec::with_capacity(self.len() * other.len());
        for &a in &self.probs {
            for &b in &other.probs {
                v.push(a * b);
            }
        }
        Ok(DiscreteDist { probs: v })
    }

    pub fn product_of(factors: &[DiscreteDist]) -> Result<DiscreteDist> {
        let mut acc = factors
            .first()
            .ok_or_else(|| Error::Invalid("no factors".into()))?
            .clone();
        for f in &factors[1..] {
            acc = acc.product(f)?;
        }
        Ok(acc)
    }

    /// `n`-fold i.i.d. product.
    pub fn power(&self, n: usize) -> Result<DiscreteDist> {
        DiscreteDist::product_of(&vec![self.clone(); n.max(1)])
    }
}

/// Row-stochastic matrix `W(y|x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteChannel {
    n_in: usize,
    n_out: usize,
    w: Vec<f64>,
}

impl DiscreteChannel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<DiscreteChannel> {
        let n_in = rows.len();
        if n_in == 0 {
            return Err(Error::Invalid("channel has no rows".into()));
        }
        let n_out = rows[0].len();
        let mut w = Vec::with_capacity(n_in * n_out);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != n_out {
                return Err(Error::Invalid(format!("row {i} has {} entries, expected {n_out}", r.len())));
            }
            let d = DiscreteDist::new(r).map_err(|e| Error::Invalid(format!("row {i}: {e}")))?;
            w.extend_from_slice(d.probs());
        }
        Ok(DiscreteChannel { n_in, n_out, w })
    }

    pub fn from_rows(rows: &[DiscreteDist]) -> Result<DiscreteChannel> {
        DiscreteChannel::new(rows.iter().map(|r| r.probs().to_vec()).collect())
    }

    pub fn n_inputs(&self) -> usize {
        self.n_in
    }

    pub fn n_outputs(&self) -> usize {
        self.n_out
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.w[x * self.n_out..(x + 1) * self.n_out]
    }

    pub fn row_dist(&self, x: usize) -> DiscreteDist {
        DiscreteDist { probs: self.row(x).to_vec() }
    }

    fn check_input(&self, p_x: &DiscreteDist) -> Result<()> {
        if p_x.len() != self.n_in {
            return Err(Error::AlphabetMismatch(p_x.len(), self.n_in));
        }
        Ok(())
    }

    fn check_output(&self, q_y: &DiscreteDist) -> Result<()> {
        if q_y.len() != self.n_out {
            return Err(Error::AlphabetMismatch(q_y.len(), self.n_out));
        }
        Ok(())
    }

    /// Output law `W ∘ P_X`.
    pub fn output(&self, p_x: &DiscreteDist) -> Result<DiscreteDist> {
        self.check_input(p_x)?;
        let mut v = vec![0.0; self.n_out];
        for (x, &px) in p_x.probs().iter().enumerate() {
            if px == 0.0 {
                continue;
            }
            for (vy, &w) in v.iter_mut().zip(self.row(x)) {
                *vy += px * w;
            }
        }
        Ok(DiscreteDist { probs: v })
    }

    /// Joint law `P_X W` on pairs, index `x * n_out + y`.
    pub fn joint(&self, p_x: &DiscreteDist) -> Result<DiscreteDist> {
        self.check_input(p_x)?;
        check_cap(self.n_in.saturating_mul(self.n_out))?;
        let mut v = Vec::with_capacity(self.n_in * self.n_out);
        for (x, &px) in p_x.probs().iter().enumerate() {
            v.extend(self.row(x).iter().map(|w| px * w));
        }
        Ok(DiscreteDist { probs: v })
    }

    /// Product law `P_X × Q_Y` on pairs, same indexing as [`joint`](Self::joint).
    pub fn input_times(&self, p_x: &DiscreteDist, q_y: &DiscreteDist) -> Result<DiscreteDist> {
        self.check_input(p_x)?;
        self.check_output(q_y)?;
        p_x.product(q_y)
    }

    /// Memoryless extension to `n` uses; inputs and outputs are base-`|A|`/`|B|` tuples.
    pub fn extension(&self, n: usize) -> Result<DiscreteChannel> {
        let n = n.max(1);
        let size_in = (self.n_in as f64).powi(n as i32);
        let size_out = (self.n_out as f64).powi(n as i32);
        if size_in * size_out > PRODUCT_CAP as f64 {
            return Err(Error::TooLarge { size: (size_in * size_out).min(usize::MAX as f64) as usize, cap: PRODUCT_CAP });
        }
        let mut ch = self.clone();
        for _ in 1..n {
            ch = ch.tensor(self);
        }
        Ok(ch)
    }

    fn tensor(&self, other: &DiscreteChannel) -> DiscreteChannel {
        let n_in = self.n_in * other.n_in;
        let n_out = self.n_out * other.n_out;
        let mut w = Vec::with_capacity(n_in * n_out);
        for x1 in 0..self.n_in {
            for x2 in 0..other.n_in {
                for &a in self.row(x1) {
                    for &b in other.row(x2) {
                        w.push(a * b);
                    }
                }
            }
        }
        DiscreteChannel { n_in, n_out, w }
    }
}
