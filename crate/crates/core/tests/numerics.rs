use betabeta::numerics::ncx2::{self, ncx2_cdf, ncx2_quantile, Tail};
use betabeta::numerics::special::{gamma_cdf, gamma_log_cdf, log_q, q_func, q_inv};
use betabeta::numerics::{berry_esseen_normal_tail, LogProb, Seed};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

/// `erfc(x)` from the Maclaurin series of `erf`, summed in extended steps;
/// accurate to ~1e-15 absolute for `x ≤ 3`.
fn erfc_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    for n in 1..200 {
        term *= -x * x / n as f64;
        let add = term / (2 * n + 1) as f64;
        sum += add;
        if add.abs() < 1e-18 {
            break;
        }
    }
    1.0 - 2.0 / std::f64::consts::PI.sqrt() * sum
}

#[test]
fn q_function_reference_points() {
    assert_eq!(q_func(0.0), 0.5);
    assert!((1.0 - q_func(-38.0)).abs() < 1e-15);
    // Bisect the series oracle for the 1e-3 quantile.
    let (mut lo, mut hi) = (3.0, 3.2);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if 0.5 * erfc_series(mid / std::f64::consts::SQRT_2) > 1e-3 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((lo - 3.090_232_3).abs() < 1e-7, "{lo}");
    assert!((q_func(3.090_232_3) / 1e-3 - 1.0).abs() < 1e-7);
    assert!((q_inv(1e-3).unwrap() - lo).abs() < 1e-9);
    for x in [0.3, 1.0, 1.7, 2.5, 3.0] {
        let oracle = 0.5 * erfc_series(x / std::f64::consts::SQRT_2);
        assert!((q_func(x) / oracle - 1.0).abs() < 1e-12, "{x}");
    }
    assert_eq!(q_inv(0.5).unwrap(), 0.0);
    assert!(q_inv(0.0).is_none() && q_inv(1.0).is_none());
    assert!((q_inv(q_func(2.0)).unwrap() - 2.0).abs() < 1e-10);
}

#[test]
fn noncentral_chi_squared_reference_points() {
    for x in [0.1, 1.0, 5.0, 20.0] {
        assert!((ncx2_cdf(2, 0.0, x) - (1.0 - (-x / 2.0).exp())).abs() < 1e-14);
    }
    assert!((ncx2_cdf(4, 0.0, 4.0) - (1.0 - 3.0 * (-2.0f64).exp())).abs() < 1e-14);
    // Poisson mixture of central χ²_{2+2j}, each an Erlang CDF in closed form.
    let (mut brute, mut pois) = (0.0, (-2.5f64).exp());
    for j in 0..80 {
        let shape = 1 + j;
        let mut term = 1.0;
        let mut tail = 1.0;
        for i in 1..shape {
            term *= 1.5 / i as f64;
            tail += term;
        }
        brute += pois * (1.0 - (-1.5f64).exp() * tail);
        pois *= 2.5 / (j + 1) as f64;
    }
    assert!((ncx2_cdf(2, 5.0, 3.0) - brute).abs() < 1e-13, "{brute}");
    for p in [1e-6, 0.01, 0.3, 0.9] {
        let x = ncx2_quantile(2.0, 0.0, p, Tail::Upper).unwrap();
        assert!((x / (-2.0 * p.ln()) - 1.0).abs() < 1e-10, "{p}");
    }
}

#[test]
fn chi_squared_median_matches_monte_carlo() {
    let n = 10_000_000;
    let m = ncx2_quantile(8.0, 16.0, 0.5, Tail::Upper).unwrap();
    // χ²₈(16): six central unit normals plus two with means summing to 16.
    let mut rng = Seed(21).substream(0);
    let mu = 8.0f64.sqrt();
    let below = (0..n)
        .filter(|_| {
            let mut s = 0.0;
            for i in 0..8 {
                let z: f64 = rng.sample(StandardNormal);
                let z = if i < 2 { z + mu } else { z };
                s += z * z;
            }
            s < m
        })
        .count();
    let frac = below as f64 / n as f64;
    let sigma = (0.25 / n as f64).sqrt();
    assert!((frac - 0.5).abs() < 3.0 * sigma, "{frac} at {m}");
}

#[test]
fn gamma_reference_points() {
    for x in [0.2, 1.0, 3.0] {
        assert!((gamma_cdf(1.0, 2.0, x) - (1.0 - (-x / 2.0).exp())).abs() < 1e-14);
    }
    assert!((gamma_cdf(2.0, 1.0, 2.0) - (1.0 - 3.0 * (-2.0f64).exp())).abs() < 1e-14);
    let mut last = 0.0;
    for j in 1..200 {
        let c = gamma_cdf(7.5, 1.3, j as f64 * 0.1);
        assert!(c >= last && c <= 1.0);
        last = c;
    }
}

#[test]
fn berry_esseen_band_around_binomial_tail() {
    // Symmetric ±1 steps: mean 0, variance 1, third absolute moment 1.
    let n = 100u64;
    for t in [-10.0, 0.0, 6.0, 14.0] {
        let (lo, hi) = berry_esseen_normal_tail(n, 0.0, 1.0, 1.0, t);
        // S > t  ⇔  heads > (n + t)/2.
        let k0 = ((n as f64 + t) / 2.0).floor() as u64 + 1;
        let exact: f64 = (k0..=n).map(|k| betabeta::numerics::binomial::log_pmf(k, n, 0.5).exp()).sum();
        assert!(lo <= exact && exact <= hi, "{t}: {lo} {exact} {hi}");
        assert!((hi - lo - 2.0 * 0.056).abs() < 1e-12 || lo == 0.0 || hi == 1.0);
    }
    let (lo, hi) = berry_esseen_normal_tail(100_000_000, 0.0, 1.0, 1.0, 0.0);
    assert!(hi - lo < 2e-4 && lo < 0.5 && 0.5 < hi);
}

proptest! {
    #[test]
    fn q_is_decreasing_and_invertible(a in -37.0f64..37.0, d in 1e-6f64..1.0) {
        prop_assert!(q_func(a + d) <= q_func(a));
        // Strictly, where f64 still resolves the values: Q(x) ≈ 1 is read off 1 - Q(x) = Q(-x).
        prop_assert!(log_q(a + d) < log_q(a) || log_q(-(a + d)) > log_q(-a));
        let p = q_func(a);
        if p > 1e-300 && p < 1.0 - 1e-12 {
            let back = q_inv(p).unwrap();
            prop_assert!((q_func(back) / p - 1.0).abs() < 1e-10);
        }
        if p > 1e-300 {
            prop_assert!((log_q(a) - p.ln()).abs() < 1e-9 * p.ln().abs().max(1.0));
        }
    }

    #[test]
    fn ncx2_monotone_in_x_and_lambda(k in 1u32..20, lam in 0.0f64..40.0, x in 0.01f64..80.0, dx in 0.01f64..5.0) {
        let c = ncx2_cdf(k, lam, x);
        prop_assert!((0.0..=1.0).contains(&c));
        prop_assert!(ncx2_cdf(k, lam, x + dx) >= c);
        prop_assert!(ncx2_cdf(k, lam + dx, x) <= c + 1e-15);
        if c > 1e-300 {
            prop_assert!((ncx2::log_cdf(k as f64, lam, x) - c.ln()).abs() <= 1e-9 * c.ln().abs().max(1.0));
        }
    }

    #[test]
    fn ncx2_quantile_round_trip(k in 1u32..20, lam in 0.0f64..40.0, p in 0.001f64..0.999) {
        let x = ncx2_quantile(k as f64, lam, p, Tail::Lower).unwrap();
        prop_assert!((ncx2_cdf(k, lam, x) - p).abs() < 1e-9);
    }

    #[test]
    fn gamma_log_and_linear_agree(shape in 0.2f64..50.0, x in 0.01f64..100.0) {
        let c = gamma_cdf(shape, 1.0, x);
        prop_assert!((0.0..=1.0).contains(&c));
        if c > 1e-300 {
            prop_assert!((gamma_log_cdf(shape, 1.0, x) - c.ln()).abs() <= 1e-9 * c.ln().abs().max(1.0));
        }
    }

    #[test]
    fn log_probabilities_stay_in_range(p in 0.0f64..=1.0) {
        let lp = LogProb::from_prob(p);
        prop_assert!(lp.is_valid() && lp.value() <= 0.0);
        prop_assert!((lp.prob() - p).abs() <= 1e-12);
    }
}
