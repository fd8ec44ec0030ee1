//! Scalar special functions: Gaussian tail, log-domain helpers and the
//! regularized incomplete gamma function.

use std::f64::consts::{LN_2, SQRT_2};


pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// `ln(1 + x) - x`, accurate for small `x`.
pub fn log1pmx(x: f64) -> f64 {
    if x.abs() < 0.5 {
        // -x^2/2 + x^3/3 - ...
        let mut term = -x;
        let mut sum = 0.0;
        for k in 2..200 {
            term *= -x;
            let inc = term / k as f64;
            sum += inc;
            if inc.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        -sum
    } else {
        x.ln_1p() - x
    }
}

/// Stirling correction `ln Γ(a) - (a - 1/2) ln a + a - ln √(2π)`.
pub fn stirlerr(a: f64) -> f64 {
    if a >= 15.0 {
        let a2 = a * a;
        (1.0 / 12.0
            - (1.0 / 360.0 - (1.0 / 1260.0 - (1.0 / 1680.0 - 1.0 / (1188.0 * a2)) / a2) / a2) / a2)
            / a
    } else {
        ln_gamma(a) - (a - 0.5) * a.ln() + a - LN_SQRT_2PI
    }
}

/// Deviance term `x ln(x/m) + m - x` without cancellation.
pub fn bd0(x: f64, m: f64) -> f64 {
    if x == 0.0 {
        return m;
    }
    let v = x / m - 1.0;
    m * ((1.0 + v) * log1pmx(v) + v * v)
}

/// `ln(1 - e^x)` for `x <= 0`.
pub fn log1mexp(x: f64) -> f64 {
    if x > -LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(e^a - e^b)` for `a >= b`; returns `-inf` when the difference vanishes.
pub fn log_sub_exp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    if b >= a {
        return f64::NEG_INFINITY;
    }
    a + log1mexp(b - a)
}

/// `(ln mass inside, ln mass outside)` of an interval `[a, b]`, given the
/// `(ln cdf, ln sf)` pairs at both ends. Each side is computed from the tail
/// that avoids cancellation.
pub fn log_interval_mass(at_a: (f64, f64), at_b: (f64, f64)) -> (f64, f64) {
    let out = log_add_exp(at_a.0, at_b.1);
    let inside = if at_b.0 < -LN_2 {
        log_sub_exp(at_b.0, at_a.0)
    } else if at_a.1 < -LN_2 {
        log_sub_exp(at_a.1, at_b.1)
    } else {
        log1mexp(out.min(0.0))
    };
    (inside, out)
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m == f64::INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Standard normal density.
pub fn phi(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Gaussian upper tail `P[N(0,1) > x]`.
pub fn q_func(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    0.5 * libm::erfc(x / SQRT_2)
}

/// Natural log of the Gaussian upper tail, finite far beyond underflow of `q_func`.
pub fn log_q(x: f64) -> f64 {
    if x == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    if x < -5.0 {
        (-q_func(-x)).ln_1p()
    } else if x <= 5.0 {
        q_func(x).ln()
    } else {
        // Mills ratio continued fraction Q(x) = φ(x) / (x + 1/(x + 2/(x + ...))).
        let mut t = x;
        for k in (1..=200).rev() {
            t = x + k as f64 / t;
        }
        -0.5 * x * x - LN_SQRT_2PI - t.ln()
    }
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

/// Lower-tail standard normal quantile (Wichura's PPND16).
fn ppnd16(p: f64) -> f64 {
    const A: [f64; 8] = [
        3.387_132_872_796_366_608,
        1.331_416_678_917_843_774_5e2,
        1.971_590_950_306_551_442_7e3,
        1.373_169_376_550_946_112_5e4,
        4.592_195_393_154_987_145_7e4,
        6.726_577_092_700_870_085_3e4,
        3.343_057_558_358_812_810_5e4,
        2.509_080_928_730_122_672_7e3,
    ];
    const B: [f64; 8] = [
        1.0,
        4.231_333_070_160_091_125_2e1,
        6.871_870_074_920_579_083e2,
        5.394_196_021_424_751_107_7e3,
        2.121_379_430_158_659_586_7e4,
        3.930_789_580_009_271_061e4,
        2.872_908_573_572_194_267_4e4,
        5.226_495_278_852_854_561e3,
    ];
    const C: [f64; 8] = [
        1.423_437_110_749_683_577_34,
        4.630_337_846_156_545_295_9,
        5.769_497_221_460_691_405_5,
        3.647_848_324_763_204_605_04,
        1.270_458_252_452_368_382_58,
        2.417_807_251_774_506_117_7e-1,
        2.272_384_498_926_918_458_33e-2,
        7.745_450_142_783_414_076_4e-4,
    ];
    const D: [f64; 8] = [
        1.0,
        2.053_191_626_637_758_821_87,
        1.676_384_830_183_803_849_4,
        6.897_673_349_851_000_045_5e-1,
        1.481_039_764_274_800_745_9e-1,
        1.519_866_656_361_645_719_66e-2,
        5.475_938_084_995_344_946e-4,
        1.050_750_071_644_416_843_24e-9,
    ];
    const E: [f64; 8] = [
        6.657_904_643_501_103_777_2,
        5.463_784_911_164_114_369_9,
        1.784_826_539_917_291_335_8,
        2.965_605_718_285_048_912_3e-1,
        2.653_218_952_657_612_309_3e-2,
        1.242_660_947_388_078_438_6e-3,
        2.711_555_568_743_487_578_15e-5,
        2.010_334_399_292_288_132_65e-7,
    ];
    const F: [f64; 8] = [
        1.0,
        5.998_322_065_558_879_376_9e-1,
        1.369_298_809_227_358_053_1e-1,
        1.487_536_129_085_061_485_25e-2,
        7.868_691_311_456_132_591e-4,
        1.846_318_317_510_054_681_8e-5,
        1.421_511_758_316_445_888_7e-7,
        2.044_263_103_389_939_785_64e-15,
    ];
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180_625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let r = (-r.ln()).sqrt();
    let z = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if q < 0.0 {
        -z
    } else {
        z
    }
}

/// Inverse of the Gaussian upper tail. Returns `None` outside `(0, 1)`.
pub fn q_inv(p: f64) -> Option<f64> {
    if !(p > 0.0 && p < 1.0) {
        return None;
    }
    let mut x = -ppnd16(p);
    // One Newton step on the tail in the accurate direction.
    if x > 0.0 {
        let d = phi(x);
        if d > 0.0 {
            x += (q_func(x) - p) / d;
        }
    } else {
        let d = phi(x);
        if d > 0.0 {
            x -= ((1.0 - p) - q_func(-x)) / d;
        }
    }
    Some(x)
}

/// `a ln x - x - ln Γ(a)` without cancellation for large `a`.
pub fn log_gamma_prefactor(a: f64, x: f64) -> f64 {
    if x == 0.0 {
        return f64::NEG_INFINITY;
    }
    if a >= 10.0 {
        0.5 * a.ln() - LN_SQRT_2PI - stirlerr(a) + a * log1pmx((x - a) / a)
    } else {
        a * x.ln() - x - ln_gamma(a)
    }
}

/// Natural logs of the regularized incomplete gamma functions `(ln P(a,x), ln Q(a,x))`.
pub fn log_gamma_pq(a: f64, x: f64) -> (f64, f64) {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return (f64::NEG_INFINITY, 0.0);
    }
    if x == f64::INFINITY {
        return (0.0, f64::NEG_INFINITY);
    }
    let pref = log_gamma_prefactor(a, x);
    if x < a + 1.0 {
        // Series: P = x^a e^{-x} / Γ(a+1) · Σ x^k / ((a+1)…(a+k)).
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            term *= x / (a + k);
            sum += term;
            if term < sum * 1e-17 || k > 1e8 {
                break;
            }
            k += 1.0;
        }
        let lp = pref - a.ln() + sum.ln();
        let lp = lp.min(0.0);
        (lp, log1mexp(lp))
    } else {
        // Modified Lentz evaluation of the continued fraction for Q.
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        let mut i = 1.0;
        loop {
            let an = -i * (i - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 || i > 1e8 {
                break;
            }
            i += 1.0;
        }
        let lq = (pref + h.ln()).min(0.0);
        (log1mexp(lq), lq)
    }
}

/// Order above which [`log_bessel_i`] uses the uniform (Debye) expansion.
pub const BESSEL_DEBYE_MIN_ORDER: f64 = 100.0;

/// `ln I_v(x)` for `v ≥ 0`, `x > 0`: uniform asymptotic expansion with four
/// correction terms for `v ≥ 100`, power series otherwise.
pub fn log_bessel_i(v: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return if v == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if v < BESSEL_DEBYE_MIN_ORDER {
        return log_bessel_i_series(v, x);
    }
    let z = x / v;
    let sq = (1.0 + z * z).sqrt();
    let t = 1.0 / sq;
    let eta = sq + (z / (1.0 + sq)).ln();
    v * eta - 0.5 * (2.0 * std::f64::consts::PI * v).ln() - 0.5 * sq.ln() + debye_log_corr(v, t)
}

/// Log of the Debye correction series `1 + Σ u_j(t)/v^j`, `j ≤ 4`, for
/// `t = 1/√(1+(x/v)²)`.
pub fn debye_log_corr(v: f64, t: f64) -> f64 {
    let t2 = t * t;
    let u1 = t * (3.0 - 5.0 * t2) / 24.0;
    let u2 = t2 * (81.0 + t2 * (-462.0 + 385.0 * t2)) / 1152.0;
    let u3 = t * t2 * (30375.0 + t2 * (-369603.0 + t2 * (765765.0 - 425425.0 * t2))) / 414720.0;
    let u4 = t2 * t2 * (4465125.0 + t2 * (-94121676.0 + t2 * (349922430.0 + t2 * (-446185740.0 + 185910725.0 * t2))))
        / 39813120.0;
    (1.0 + (u1 + (u2 + (u3 + u4 / v) / v) / v) / v).ln()
}

/// `ln Σ_m (x/2)^{2m+v} / (m! Γ(m+v+1))`, summed outward from the largest term.
pub fn log_bessel_i_series(v: f64, x: f64) -> f64 {
    let lh = (0.5 * x).ln();
    let term = |m: f64| (2.0 * m + v) * lh - ln_gamma(m + 1.0) - ln_gamma(m + v + 1.0);
    let m0 = (0.5 * ((v * v + x * x).sqrt() - v)).floor().max(0.0);
    let top = term(m0);
    let mut acc = 1.0;
    let mut m = m0 + 1.0;
    loop {
        let r = (term(m) - top).exp();
        acc += r;
        if r < 1e-17 * acc {
            break;
        }
        m += 1.0;
    }
    let mut m = m0 - 1.0;
    while m >= 0.0 {
        let r = (term(m) - top).exp();
        acc += r;
        if r < 1e-17 * acc {
            break;
        }
        m -= 1.0;
    }
    top + acc.ln()
}

/// Log-density of Gamma(shape, 1) at `x`.
pub fn gamma_log_pdf(shape: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return if x == 0.0 && shape == 1.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    log_gamma_prefactor(shape, x) - x.ln()
}

/// CDF of the Gamma distribution with the given shape and scale.
pub fn gamma_cdf(shape: f64, scale: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    log_gamma_pq(shape, x / scale).0.exp()
}

pub fn gamma_log_cdf(shape: f64, scale: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    log_gamma_pq(shape, x / scale).0
}

pub fn gamma_log_sf(shape: f64, scale: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    log_gamma_pq(shape, x / scale).1
}

/// Lower-tail quantile of Gamma(shape, 1) for `ln p`.
pub fn gamma_quantile_log(shape: f64, log_p: f64, upper: bool) -> f64 {
    let f = |x: f64| {
        let (lp, lq) = log_gamma_pq(shape, x);
        if upper {
            lq - log_p
        } else {
            lp - log_p
        }
    };
    let sd = shape.sqrt();
    let mut lo = (shape - 10.0 * sd).max(0.0);
    let mut hi = shape + 10.0 * sd + 10.0;
    let sign = if upper { -1.0 } else { 1.0 };
    while lo > 0.0 && sign * f(lo) > 0.0 {
        lo = (lo - (hi - lo)).max(0.0);
    }
    while sign * f(hi) < 0.0 {
        hi += hi - lo;
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if sign * f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}
