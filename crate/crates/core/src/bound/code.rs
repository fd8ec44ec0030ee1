//! Random coding with the sequential Neyman–Pearson decoder: the decoder
//! returns the first codeword whose test accepts.

use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use serde::Serialize;

use super::BetaPair;
use crate::error::{Error, Result};
use crate::np::{llr, DiscreteChannel, DiscreteDist, NpTest};
use crate::numerics::Seed;

pub const CODE_TRIAL_CAP: usize = 200;

/// Cap on `M · |B|` for exact error evaluation.
pub const CODE_EVAL_CAP: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodebookTrial {
    /// Input letters, one per message.
    pub codewords: Vec<usize>,
    pub m: usize,
    pub tau: f64,
    /// Exact average error of `codewords` under the decoder.
    pub avg_error: f64,
    pub trials_used: usize,
    pub found: bool,
    /// Test applied to each `(codeword, output)` pair, at power `1-ε+τ` for
    /// `P_XY` versus `P_X Q_Y`.
    pub decoder: NpTest,
}

/// `M = ⌈2 β_τ(P_Y,Q_Y) / β_{1-ε+τ}(P_XY,P_X Q_Y)⌉`.
pub fn codebook_size(pair: &BetaPair, eps: f64, tau: f64) -> Result<usize> {
    if !(tau > 0.0 && tau < eps && eps < 1.0) {
        return Err(Error::Invalid(format!("need 0 < τ < ε < 1, got τ = {tau}, ε = {eps}")));
    }
    let num = pair.output.beta(tau);
    let den = pair.joint.beta(1.0 - eps + tau);
    let m = (2.0 * num / den).ceil();
    if !m.is_finite() || m > CODE_EVAL_CAP as f64 {
        return Err(Error::TooLarge { size: m.min(usize::MAX as f64) as usize, cap: CODE_EVAL_CAP });
    }
    Ok((m as usize).max(1))
}

/// Exact average error of a codebook under the sequential decoder. The test is
/// randomized independently for each codeword, so the probability that message
/// `w` is decoded correctly from `y` is `a(c_w,y) Π_{m<w} (1 - a(c_m,y))`.
pub fn decoder_error(channel: &DiscreteChannel, q_y: &DiscreteDist, test: &NpTest, codewords: &[usize]) -> Result<f64> {
    if codewords.is_empty() {
        return Err(Error::Invalid("empty codebook".into()));
    }
    if codewords.len().saturating_mul(channel.n_outputs()) > CODE_EVAL_CAP {
        return Err(Error::TooLarge { size: codewords.len() * channel.n_outputs(), cap: CODE_EVAL_CAP });
    }
    if let Some(&c) = codewords.iter().find(|&&c| c >= channel.n_inputs()) {
        return Err(Error::Invalid(format!("codeword {c} outside the input alphabet")));
    }
    let mut correct = 0.0;
    for y in 0..channel.n_outputs() {
        let mut none_before = 1.0;
        for &c in codewords {
            let w = channel.row(c)[y];
            let a = if w > 0.0 { test.acceptance(llr(w, q_y.probs()[y])) } else { 0.0 };
            correct += w * a * none_before;
            none_before *= 1.0 - a;
            if none_before == 0.0 {
                break;
            }
        }
    }
    Ok((1.0 - correct / codewords.len() as f64).max(0.0))
}

struct Setup {
    pair: BetaPair,
    m: usize,
    test: NpTest,
    sampler: WeightedIndex<f64>,
}

fn setup(channel: &DiscreteChannel, p_x: &DiscreteDist, q_y: &DiscreteDist, eps: f64, tau: f64) -> Result<Setup> {
    let pair = BetaPair::new(channel, p_x, q_y)?;
    let m = codebook_size(&pair, eps, tau)?;
    let (_, test) = pair.joint.eval(1.0 - eps + tau);
    let sampler = WeightedIndex::new(p_x.probs()).map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(Setup { pair, m, test, sampler })
}

/// Exact average errors of `trials` independent random codebooks drawn i.i.d.
/// from `P_X`, trial `t` using substream `t` of `seed`.
pub fn random_code_errors(
    channel: &DiscreteChannel,
    p_x: &DiscreteDist,
    q_y: &DiscreteDist,
    eps: f64,
    tau: f64,
    trials: usize,
    seed: Seed,
) -> Result<Vec<f64>> {
    let s = setup(channel, p_x, q_y, eps, tau)?;
    (0..trials)
        .map(|t| {
            let mut rng = seed.substream(t as u64);
            let cw: Vec<usize> = (0..s.m).map(|_| s.sampler.sample(&mut rng)).collect();
            decoder_error(channel, q_y, &s.test, &cw)
        })
        .collect()
}

/// Draw codebooks of the size guaranteed by the ββ bound at this τ until one
/// has exact average error at most `ε`. When the trial budget runs out the
/// best codebook is returned with `found = false`.
pub fn verify_code_existence(
    channel: &DiscreteChannel,
    p_x: &DiscreteDist,
    q_y: &DiscreteDist,
    eps: f64,
    tau: f64,
    trials: usize,
    seed: Seed,
) -> Result<CodebookTrial> {
    let s = setup(channel, p_x, q_y, eps, tau)?;
    let trials = trials.clamp(1, CODE_TRIAL_CAP);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for t in 0..trials {
        let mut rng = seed.substream(t as u64);
        let cw: Vec<usize> = (0..s.m).map(|_| s.sampler.sample(&mut rng)).collect();
        let err = decoder_error(channel, q_y, &s.test, &cw)?;
        if best.as_ref().map_or(true, |b| err < b.1) {
            best = Some((cw, err));
        }
        if err <= eps {
            let (codewords, avg_error) = best.unwrap();
            return Ok(CodebookTrial { codewords, m: s.m, tau, avg_error, trials_used: t + 1, found: true, decoder: s.test });
        }
    }
    let (codewords, avg_error) = best.unwrap();
    let _ = &s.pair;
    Ok(CodebookTrial { codewords, m: s.m, tau, avg_error, trials_used: trials, found: false, decoder: s.test })
}
