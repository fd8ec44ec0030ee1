use betabeta::np::io::{parse_channel, parse_dist};
use betabeta::np::lemma::{check_mixture_bound, check_product, renyi_lower_bound, run_suite};
use betabeta::np::{beta, product_beta, BetaCurve, DiscreteChannel, DiscreteDist};
use betabeta::numerics::Seed;
use proptest::prelude::*;

fn d(v: &[f64]) -> DiscreteDist {
    DiscreteDist::new(v.to_vec()).unwrap()
}

/// Brute force: every deterministic acceptance set `S` plus one atom `j ∉ S`
/// accepted with the probability needed to reach power `α`.
fn brute_beta(alpha: f64, p: &[f64], q: &[f64]) -> f64 {
    let n = p.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        let (mut ps, mut qs) = (0.0, 0.0);
        for i in 0..n {
            if mask & (1 << i) != 0 {
                ps += p[i];
                qs += q[i];
            }
        }
        if ps >= alpha - 1e-15 {
            best = best.min(qs);
            continue;
        }
        for j in 0..n {
            if mask & (1 << j) == 0 && p[j] > 0.0 && ps + p[j] >= alpha {
                best = best.min(qs + q[j] * (alpha - ps) / p[j]);
            }
        }
    }
    best
}

fn dist_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 5 => 0.01f64..1.0], n).prop_filter_map("all zero", |w| {
        let s: f64 = w.iter().sum();
        (s > 0.0).then(|| w.iter().map(|x| x / s).collect())
    })
}

fn pair_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..=6).prop_flat_map(|n| (dist_strategy(n), dist_strategy(n)))
}

#[test]
fn beta_of_identical_laws_is_alpha() {
    let p = d(&[0.1, 0.2, 0.3, 0.4]);
    for i in 0..=20 {
        let a = i as f64 / 20.0;
        assert!((beta(a, &p, &p).unwrap().0 - a).abs() < 1e-15);
    }
}

#[test]
fn disjoint_supports_cost_nothing() {
    assert_eq!(beta(0.7, &d(&[1.0, 0.0]), &d(&[0.0, 1.0])).unwrap().0, 0.0);
}

#[test]
fn two_atom_example() {
    let (b, t) = beta(0.5, &d(&[0.5, 0.5]), &d(&[0.9, 0.1])).unwrap();
    assert!((b - 0.1).abs() < 1e-15);
    assert!((brute_beta(0.5, &[0.5, 0.5], &[0.9, 0.1]) - 0.1).abs() < 1e-15);
    assert!((t.achieved_power - 0.5).abs() < 1e-15);
}

#[test]
fn product_of_binary_factors() {
    let p = d(&[0.7, 0.3]);
    let q = d(&[0.4, 0.6]);
    let b = product_beta(0.5, &[p.clone(), p.clone()], &[q.clone(), q.clone()]).unwrap();
    let oracle = brute_beta(0.5, &[0.49, 0.21, 0.21, 0.09], &[0.16, 0.24, 0.24, 0.36]);
    assert!((b - oracle).abs() < 1e-15);
    assert!((product_beta(0.5, &[p.clone()], &[q.clone()]).unwrap() - beta(0.5, &p, &q).unwrap().0).abs() < 1e-15);
    assert!(product_beta(0.5, &[p.clone()], &[]).is_err());
}

#[test]
fn product_cap_is_enforced() {
    let u = DiscreteDist::uniform(1001);
    assert!(product_beta(0.5, &[u.clone(), u.clone()], &[u.clone(), u.clone()]).is_err());
}

#[test]
fn mixture_equality_against_grid() {
    let ch = DiscreteChannel::new(vec![
        vec![0.7, 0.2, 0.1],
        vec![0.1, 0.6, 0.3],
        vec![0.3, 0.3, 0.4],
        vec![0.05, 0.05, 0.9],
    ])
    .unwrap();
    let q_y = d(&[0.3, 0.4, 0.3]);
    let c1 = d(&[0.6, 0.4, 0.0, 0.0]);
    let c2 = d(&[0.0, 0.0, 0.5, 0.5]);
    let lam = [0.35, 0.65];
    let curves: Vec<BetaCurve> = [&c1, &c2]
        .iter()
        .map(|c| BetaCurve::new(ch.joint(c).unwrap().probs(), ch.input_times(c, &q_y).unwrap().probs()).unwrap())
        .collect();
    for &alpha in &[0.1, 0.4, 0.77, 0.95] {
        let m = check_mixture_bound(&lam, &[c1.clone(), c2.clone()], &ch, &q_y, alpha).unwrap();
        assert!(m.bound.holds);
        // The objective is convex in α_1: 200-point grid, then ternary search
        // on the best cell.
        let g = |a1: f64| {
            let a2 = (alpha - lam[0] * a1) / lam[1];
            if (0.0..=1.0).contains(&a2) {
                lam[0] * curves[0].beta(a1) + lam[1] * curves[1].beta(a2)
            } else {
                f64::INFINITY
            }
        };
        let best = (0..=200).min_by(|&i, &j| g(i as f64 / 200.0).partial_cmp(&g(j as f64 / 200.0)).unwrap()).unwrap();
        let (mut lo, mut hi) = ((best.max(1) - 1) as f64 / 200.0, (best + 1).min(200) as f64 / 200.0);
        for _ in 0..200 {
            let (m1, m2) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
            if g(m1) <= g(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let grid_inf = g(0.5 * (lo + hi)).min(g(best as f64 / 200.0));
        let px = d(&[0.21, 0.14, 0.325, 0.325]);
        let exact = beta(alpha, &ch.joint(&px).unwrap(), &ch.input_times(&px, &q_y).unwrap()).unwrap().0;
        assert!((exact - grid_inf).abs() < 1e-6, "{alpha}: {exact} vs {grid_inf}");
        assert!(m.disjoint_gap.unwrap() < 1e-12);
    }
}

#[test]
fn renyi_identity_bound_below_alpha_on_grid() {
    let p = d(&[0.25, 0.75]);
    for &l in &[1.5, 2.0, 4.0] {
        for i in 1..100 {
            let a = i as f64 / 100.0;
            assert!(renyi_lower_bound(&p, &p, a, l).unwrap() <= a + 1e-15);
        }
    }
}

#[test]
fn lemma_suite_thousand_trials() {
    let r = run_suite(1000, Seed(7)).unwrap();
    assert_eq!(r.properties.len(), 5);
    for p in &r.properties {
        assert!(p.trials >= 900, "{p:?}");
        assert_eq!(p.violations, 0, "{p:?}");
    }
}

#[test]
fn text_format_round_trip() {
    let ch = parse_channel("# bsc\n0.9 0.1\n0.1 0.9\n").unwrap();
    assert_eq!(ch.n_inputs(), 2);
    assert!(parse_channel("0.9 0.1\n0.5\n").is_err());
    assert!(parse_dist("0.5 0.5\n").is_ok());
    match parse_dist("0.5 x\n") {
        Err(betabeta::Error::Parse { line, .. }) => assert_eq!(line, 1),
        other => panic!("{other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn beta_matches_brute_force((p, q) in pair_strategy(), alpha in 0.0f64..=1.0) {
        let b = beta(alpha, &d(&p), &d(&q)).unwrap().0;
        prop_assert!((b - brute_beta(alpha, &p, &q)).abs() < 1e-12);
    }

    #[test]
    fn returned_test_reproduces_power_and_size((p, q) in pair_strategy(), alpha in 0.0f64..=1.0) {
        let (b, t) = beta(alpha, &d(&p), &d(&q)).unwrap();
        let (pa, qa) = t.apply(&d(&p), &d(&q)).unwrap();
        prop_assert!((qa - b).abs() < 1e-12);
        prop_assert!(pa >= alpha - 1e-12);
        prop_assert!((pa - t.achieved_power).abs() < 1e-12);
    }

    #[test]
    fn curve_is_monotone_and_convex((p, q) in pair_strategy()) {
        let c = BetaCurve::new(&p, &q).unwrap();
        let v: Vec<f64> = (0..=50).map(|i| c.beta(i as f64 / 50.0)).collect();
        prop_assert_eq!(v[0], 0.0);
        for w in v.windows(3) {
            prop_assert!(w[1] >= w[0] - 1e-15);
            prop_assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-12);
        }
        if p.iter().zip(&q).all(|(a, b)| *a == 0.0 || *b > 0.0) {
            prop_assert!((v[50] - 1.0).abs() < 1e-12 || v[50] <= 1.0);
        }
    }

    #[test]
    fn product_inequality((p1, q1) in pair_strategy(), (p2, q2) in pair_strategy(), alpha in 0.0f64..=1.0) {
        let c = check_product(alpha, &d(&p1), &d(&q1), &d(&p2), &d(&q2)).unwrap();
        prop_assert!(c.holds, "{:?}", c);
    }
}
