use std::f64::consts::LN_2;

use betabeta::bound::{
    bb_achievability, bb_converse, delta_grid, dt_bound, kappa_beta_relaxed, random_code_errors, tau_grid,
    verify_code_existence, BetaPair,
};
use betabeta::np::{DiscreteChannel, DiscreteDist};
use betabeta::numerics::Seed;
use proptest::prelude::*;

fn bsc(p: f64) -> DiscreteChannel {
    DiscreteChannel::new(vec![vec![1.0 - p, p], vec![p, 1.0 - p]]).unwrap()
}

fn normalize(w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn channel_strategy() -> impl Strategy<Value = (DiscreteChannel, DiscreteDist, DiscreteDist)> {
    (2usize..=4, 2usize..=4).prop_flat_map(|(a, b)| {
        (
            prop::collection::vec(prop::collection::vec(0.02f64..1.0, b), a),
            prop::collection::vec(0.05f64..1.0, a),
            prop::collection::vec(0.05f64..1.0, b),
        )
            .prop_map(|(rows, px, qy)| {
                let ch = DiscreteChannel::new(rows.into_iter().map(normalize).collect()).unwrap();
                (ch, DiscreteDist::new(normalize(px)).unwrap(), DiscreteDist::new(normalize(qy)).unwrap())
            })
    })
}

/// Largest `M` for which some code of `M` distinct codewords has average error
/// at most `ε` under maximum-likelihood decoding.
fn best_code_size(ch: &DiscreteChannel, eps: f64) -> usize {
    let k = ch.n_inputs();
    let mut best = 1;
    for mask in 1u32..(1 << k) {
        let m = mask.count_ones() as usize;
        if m <= best {
            continue;
        }
        let words: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let correct: f64 = (0..ch.n_outputs())
            .map(|y| words.iter().map(|&c| ch.row(c)[y]).fold(0.0, f64::max))
            .sum();
        if 1.0 - correct / m as f64 <= eps + 1e-12 {
            best = m;
        }
    }
    best
}

#[test]
fn bsc_against_optimal_codes() {
    let w = bsc(0.11);
    let u = DiscreteDist::uniform(2);
    for &eps in &[0.1, 0.3] {
        for n in 1..=3 {
            let ext = w.extension(n).unwrap();
            let m_star = best_code_size(&ext, eps) as f64;
            let pair = BetaPair::memoryless(&w, &u, &u, n).unwrap();
            let ach = pair.achievability(eps, &tau_grid(eps, 64)).unwrap();
            let conv = pair.converse(eps, &delta_grid(eps, 64)).unwrap();
            assert!(ach.log_m <= m_star.ln() + 1e-12, "n={n} ε={eps}: {} > ln {m_star}", ach.log_m);
            assert!(conv.log_m >= m_star.ln() - 1e-12, "n={n} ε={eps}: {} < ln {m_star}", conv.log_m);
        }
    }
}

#[test]
fn bsc_extension_up_to_eight() {
    let w = bsc(0.11);
    let u = DiscreteDist::uniform(2);
    let mut prev = f64::NEG_INFINITY;
    for n in 1..=8 {
        let pair = BetaPair::memoryless(&w, &u, &u, n).unwrap();
        let explicit = BetaPair::new(&w.extension(n).unwrap(), &DiscreteDist::uniform(1 << n), &DiscreteDist::uniform(1 << n)).unwrap();
        let a = pair.achievability(0.1, &tau_grid(0.1, 64)).unwrap();
        let b = explicit.achievability(0.1, &tau_grid(0.1, 64)).unwrap();
        assert!((a.log_m - b.log_m).abs() < 1e-9);
        let c = pair.converse(0.1, &delta_grid(0.1, 64)).unwrap();
        assert!(c.log_m >= a.log_m - LN_2);
        assert!(a.log_m >= prev - 1e-12);
        prev = a.log_m;
    }
}

#[test]
fn symmetric_channel_kappa_beta_differs_by_ln2() {
    let w = DiscreteChannel::new(vec![vec![0.8, 0.1, 0.1], vec![0.1, 0.8, 0.1], vec![0.1, 0.1, 0.8]]).unwrap();
    let u = DiscreteDist::uniform(3);
    for &eps in &[0.05, 0.2] {
        let bb = bb_achievability(&w, &u, &u, eps, &tau_grid(eps, 64)).unwrap();
        let kb = kappa_beta_relaxed(&w, &u, &u, eps, &tau_grid(eps, 64)).unwrap();
        assert!((bb.log_m - kb.log_m - LN_2).abs() < 1e-10);
    }
}

#[test]
fn single_input_kappa_beta_is_binary_test() {
    let w = DiscreteChannel::new(vec![vec![0.6, 0.3, 0.1], vec![0.2, 0.2, 0.6]]).unwrap();
    let px = DiscreteDist::point_mass(2, 1);
    let qy = DiscreteDist::new(vec![0.5, 0.25, 0.25]).unwrap();
    let eps = 0.2;
    let kb = kappa_beta_relaxed(&w, &px, &qy, eps, &tau_grid(eps, 64)).unwrap();
    let row = w.row_dist(1);
    let t = kb.tau;
    let direct = betabeta::np::beta(t, &row, &qy).unwrap().0.ln() - betabeta::np::beta(1.0 - eps + t, &row, &qy).unwrap().0.ln();
    assert!((kb.log_m - direct).abs() < 1e-12);
}

#[test]
fn random_coding_mean_error_below_eps() {
    let w = DiscreteChannel::new(vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.8, 0.1], vec![0.2, 0.1, 0.7]]).unwrap();
    let px = DiscreteDist::uniform(3);
    let qy = DiscreteDist::new(vec![0.4, 0.3, 0.3]).unwrap();
    let eps = 0.3;
    let tau = bb_achievability(&w, &px, &qy, eps, &tau_grid(eps, 64)).unwrap().tau.min(eps * 0.999);
    let errs = random_code_errors(&w, &px, &qy, eps, tau, 2000, Seed(5)).unwrap();
    let n = errs.len() as f64;
    let mean = errs.iter().sum::<f64>() / n;
    let sd = (errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(mean <= eps + 3.0 * sd / n.sqrt(), "mean {mean}");
    let found = verify_code_existence(&w, &px, &qy, eps, tau, 200, Seed(5)).unwrap();
    assert!(found.found && found.avg_error <= eps);
    assert_eq!(found.codewords.len(), found.m);
}

#[test]
fn trivial_channel_needs_one_trial() {
    let w = DiscreteChannel::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let u = DiscreteDist::uniform(2);
    let t = verify_code_existence(&w, &u, &u, 0.1, 0.05, 200, Seed(1)).unwrap();
    assert!(t.found);
    assert_eq!(t.trials_used, 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn dt_equivalence((ch, px, _) in channel_strategy(), eps in 0.01f64..0.9) {
        let py = ch.output(&px).unwrap();
        let a = bb_achievability(&ch, &px, &py, eps, &tau_grid(eps, 64)).unwrap();
        let d = dt_bound(&ch, &px, eps).unwrap();
        prop_assert!((a.log_m - d.log_m).abs() < 1e-10, "{} vs {}", a.log_m, d.log_m);
    }

    #[test]
    fn converse_dominates((ch, px, qy) in channel_strategy(), eps in 0.01f64..0.9) {
        let a = bb_achievability(&ch, &px, &qy, eps, &tau_grid(eps, 64)).unwrap();
        let c = bb_converse(&ch, &px, &qy, eps, &delta_grid(eps, 64)).unwrap();
        prop_assert!(c.log_m >= a.log_m - LN_2 - 1e-12);
        prop_assert!(c.log_m >= a.log_m - 1e-12, "{} < {}", c.log_m, a.log_m);
    }

    #[test]
    fn achievability_monotone_in_eps((ch, px, qy) in channel_strategy(), e1 in 0.01f64..0.9, e2 in 0.01f64..0.9) {
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        let a = bb_achievability(&ch, &px, &qy, lo, &tau_grid(lo, 64)).unwrap();
        let b = bb_achievability(&ch, &px, &qy, hi, &tau_grid(hi, 64)).unwrap();
        prop_assert!(b.log_m >= a.log_m - 1e-12);
    }

    #[test]
    fn kappa_beta_below_bb((ch, px, qy) in channel_strategy(), eps in 0.01f64..0.9) {
        let bb = bb_achievability(&ch, &px, &qy, eps, &tau_grid(eps, 64)).unwrap();
        let kb = kappa_beta_relaxed(&ch, &px, &qy, eps, &tau_grid(eps, 64)).unwrap();
        prop_assert!(bb.log_m >= kb.log_m - LN_2 - 1e-12);
    }

    #[test]
    fn code_exists_at_bound_size((ch, px, qy) in channel_strategy(), eps in prop_oneof![Just(0.1), Just(0.3)], seed in any::<u64>()) {
        let tau = bb_achievability(&ch, &px, &qy, eps, &tau_grid(eps, 64)).unwrap().tau.min(eps * (1.0 - 1e-9));
        let t = verify_code_existence(&ch, &px, &qy, eps, tau, 200, Seed(seed)).unwrap();
        prop_assert!(t.found, "{:?}", t);
    }
}
