#![allow(dead_code)]

use betabeta::numerics::ncx2;
use betabeta::numerics::special::gamma_log_pdf;
use betabeta::numerics::Seed;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

/// Empirical upper quantile: the value exceeded by a fraction `a` of `xs`.
pub fn upper_quantile(xs: &mut [f64], a: f64) -> f64 {
    let idx = (((1.0 - a) * xs.len() as f64).floor() as usize).min(xs.len() - 1);
    *xs.select_nth_unstable_by(idx, |p, q| p.partial_cmp(q).unwrap()).1
}

/// Monte Carlo `β_a(P_Y, CN(0,I))` for input uniform on the sphere of
/// radius `√(nP)` in `C^n`, using the radial test on `2‖y‖²`. Returns the
/// estimate and its standard error (binomial plus threshold noise).
pub fn shell_output_beta(n: usize, snr: f64, a: f64, samples: usize, seed: Seed) -> (f64, f64) {
    let mut rng = seed.substream(0);
    let d = 2 * n;
    let radius = (n as f64 * snr).sqrt();
    let mut x = vec![0.0; d];
    let mut stat_p: Vec<f64> = (0..samples)
        .map(|_| {
            let mut norm = 0.0;
            for xi in x.iter_mut() {
                *xi = rng.sample::<f64, _>(StandardNormal);
                norm += *xi * *xi;
            }
            let scale = radius / norm.sqrt();
            let mut r = 0.0;
            for xi in &x {
                let y = xi * scale + rng.sample::<f64, _>(StandardNormal) * std::f64::consts::FRAC_1_SQRT_2;
                r += y * y;
            }
            2.0 * r
        })
        .collect();
    let gamma = upper_quantile(&mut stat_p, a);
    drop(stat_p);
    let mut rng = seed.substream(1);
    let hits = (0..samples)
        .filter(|_| {
            let r: f64 = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal).powi(2)).sum();
            r >= gamma
        })
        .count();
    let beta = hits as f64 / samples as f64;
    let nf = n as f64;
    let f_l = (gamma_log_pdf(nf, 0.5 * gamma) - std::f64::consts::LN_2).exp();
    let f_s = ncx2::log_pdf(2.0 * nf, 2.0 * nf * snr, gamma).exp();
    let var = beta * (1.0 - beta) / samples as f64 + (f_l / f_s).powi(2) * a * (1.0 - a) / samples as f64;
    (beta, var.sqrt())
}

/// Monte Carlo `ln β_α(N(μ,1), N(0,1))` by importance sampling under the
/// shifted law with an empirical threshold. Returns `(ln β̂, standard error of ln β̂)`.
pub fn gaussian_shift_log_beta(mu: f64, alpha: f64, samples: usize, seed: Seed) -> (f64, f64) {
    let mut rng = seed.substream(0);
    let mut t: Vec<f64> = (0..samples).map(|_| mu + rng.sample::<f64, _>(StandardNormal)).collect();
    let thr = upper_quantile(&mut t, alpha);
    // Weights e^{-llr} are relative to their maximum over the accepted set.
    let log_w = |x: f64| -(mu * x - 0.5 * mu * mu);
    let top = log_w(thr);
    let (mut s1, mut s2) = (0.0, 0.0);
    for &x in &t {
        if x >= thr {
            let w = (log_w(x) - top).exp();
            s1 += w;
            s2 += w * w;
        }
    }
    let nf = samples as f64;
    let mean = s1 / nf;
    let var_is = (s2 / nf - mean * mean) / nf;
    // Threshold noise: d ln β / dt times the quantile standard error.
    let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let beta_t = betabeta::numerics::q_func(thr);
    let dlnb = phi(thr) / beta_t;
    let sd_t = (alpha * (1.0 - alpha) / nf).sqrt() / phi(thr - mu);
    let sd = (var_is.sqrt() / mean).hypot(dlnb * sd_t);
    (top + mean.ln(), sd)
}

/// Monte Carlo `β_a` of the radial test between `χ²_{2n}(2nP)` and `χ²_{2n}`,
/// sampling the noncentral law as `(√λ + Z)² + χ²_{2n-1}`.
pub fn radial_beta(n: usize, snr: f64, a: f64, samples: usize, seed: Seed) -> (f64, f64) {
    let nf = n as f64;
    let lam = 2.0 * nf * snr;
    let chi_rest = ChiSquared::new(2.0 * nf - 1.0).unwrap();
    let chi_full = ChiSquared::new(2.0 * nf).unwrap();
    let mut rng = seed.substream(0);
    let mut s: Vec<f64> = (0..samples)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            (lam.sqrt() + z).powi(2) + chi_rest.sample(&mut rng)
        })
        .collect();
    let gamma = upper_quantile(&mut s, a);
    let mut rng = seed.substream(1);
    let hits = (0..samples).filter(|_| chi_full.sample(&mut rng) >= gamma).count();
    let beta = hits as f64 / samples as f64;
    let f_l = (gamma_log_pdf(nf, 0.5 * gamma) - std::f64::consts::LN_2).exp();
    let f_s = ncx2::log_pdf(2.0 * nf, lam, gamma).exp();
    let var = beta * (1.0 - beta) / samples as f64 + (f_l / f_s).powi(2) * a * (1.0 - a) / samples as f64;
    (beta, var.sqrt())
}
