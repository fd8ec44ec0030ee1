//! Binomial tails and the exact confidence bounds built on them.

use super::special::{bd0, log_add_exp, stirlerr, LN_SQRT_2PI};

/// Log-pmf of Binomial(n, p) at k, stable for large n.
pub fn log_pmf(k: u64, n: u64, p: f64) -> f64 {
    if p <= 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p >= 1.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    let q = 1.0 - p;
    let (nf, kf) = (n as f64, k as f64);
    if k == 0 {
        return nf * (-p).ln_1p();
    }
    if k == n {
        return nf * p.ln();
    }
    let m = nf - kf;
    stirlerr(nf) - stirlerr(kf) - stirlerr(m) - bd0(kf, nf * p) - bd0(m, nf * q)
        + 0.5 * (nf / (kf * m)).ln()
        - LN_SQRT_2PI
}

/// `ln P[X ≤ k]`, summing outward from k with a geometric remainder bound.
pub fn log_cdf(k: u64, n: u64, p: f64) -> f64 {
    if k >= n {
        return 0.0;
    }
    let mean = n as f64 * p;
    if k as f64 > mean {
        // Upper complement is the small one.
        return super::special::log1mexp(log_sf(k + 1, n, p));
    }
    let mut total = log_pmf(k, n, p);
    let mut cur = total;
    let mut i = k;
    while i > 0 {
        // pmf(i-1)/pmf(i) = i q / ((n-i+1) p)
        let lr = ((i as f64) * (1.0 - p) / ((n - i + 1) as f64 * p)).ln();
        cur += lr;
        i -= 1;
        total = log_add_exp(total, cur);
        if lr < 0.0 && cur + lr - super::special::log1mexp(lr) < total - 45.0 {
            break;
        }
    }
    total.min(0.0)
}

/// `ln P[X ≥ k]`.
pub fn log_sf(k: u64, n: u64, p: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if k > n {
        return f64::NEG_INFINITY;
    }
    let mean = n as f64 * p;
    if (k as f64) < mean {
        return super::special::log1mexp(log_cdf(k - 1, n, p));
    }
    let mut total = log_pmf(k, n, p);
    let mut cur = total;
    let mut i = k;
    while i < n {
        // pmf(i+1)/pmf(i) = (n-i) p / ((i+1) q)
        let lr = ((n - i) as f64 * p / ((i + 1) as f64 * (1.0 - p))).ln();
        cur += lr;
        i += 1;
        total = log_add_exp(total, cur);
        if lr < 0.0 && cur + lr - super::special::log1mexp(lr) < total - 45.0 {
            break;
        }
    }
    total.min(0.0)
}

fn bisect_p(mut f: impl FnMut(f64) -> bool) -> f64 {
    // f is false at 0, true at 1; returns the switch point.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-15 * hi.max(1e-300) {
            break;
        }
    }
    hi
}

/// One-sided Clopper–Pearson upper bound on p after `x` successes in `n` trials.
pub fn clopper_pearson_upper(x: u64, n: u64, delta: f64) -> f64 {
    if x >= n {
        return 1.0;
    }
    let ld = delta.ln();
    bisect_p(|p| log_cdf(x, n, p) <= ld)
}

/// One-sided Clopper–Pearson lower bound on p after `x` successes in `n` trials.
pub fn clopper_pearson_lower(x: u64, n: u64, delta: f64) -> f64 {
    if x == 0 {
        return 0.0;
    }
    let ld = delta.ln();
    // Smallest p with P[X ≥ x] ≥ δ: P[X ≥ x] increases with p.
    let p = bisect_p(|p| log_sf(x, n, p) > ld);
    // bisect_p returns the upper end; step down to stay conservative.
    (p * (1.0 - 1e-12)).max(0.0)
}

/// Smallest `k ≥ 1` with `P[Bin(n, p) ≥ k] ≤ δ`, or `None` if even `k = n` fails.
pub fn smallest_k_sf_below(n: u64, p: f64, delta: f64) -> Option<u64> {
    let ld = delta.ln();
    if log_sf(n, n, p) > ld {
        return None;
    }
    let (mut lo, mut hi) = (1u64, n);
    if log_sf(lo, n, p) <= ld {
        return Some(lo);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if log_sf(mid, n, p) <= ld {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Largest `k ≥ 1` with `P[Bin(n, p) ≤ k - 1] ≤ δ`, or `None` if `k = 1` already fails.
pub fn largest_k_cdf_below(n: u64, p: f64, delta: f64) -> Option<u64> {
    let ld = delta.ln();
    // k = 1 needs P[X ≤ 0] ≤ δ.
    if log_cdf(0, n, p) > ld {
        return None;
    }
    let (mut lo, mut hi) = (1u64, n + 1);
    // invariant: lo works, hi fails (or is beyond n)
    if log_cdf(n, n, p) <= ld {
        return Some(n + 1);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if log_cdf(mid - 1, n, p) <= ld {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}
