use betabeta::awgn::AwgnSpec;
use betabeta::dispersion::*;
use betabeta::numerics::Seed;
use proptest::prelude::*;
use std::f64::consts::PI;

fn normal_pdf(var: f64, y: f64) -> f64 {
    (-0.5 * y * y / var).exp() / (2.0 * PI * var).sqrt()
}

#[test]
fn gaussian_noise_matches_closed_forms() {
    let noise = NoiseModel::gaussian(1.0).unwrap();
    for p in [0.25, 1.0, 4.0] {
        let r = dispersion(&noise, p, 200_000, Seed(3)).unwrap();
        let (i, v, mmse, c) = gaussian_closed_form(p);
        assert!((r.i - i).abs() < 1e-8, "{p}: I {}", r.i);
        assert!((r.v - v).abs() < 1e-6, "{p}: V {}", r.v);
        assert!((r.mmse - mmse).abs() < 1e-6 && (r.c - c).abs() < 1e-6);
        assert!(r.var_dq < 1e-9);
        assert!((r.mc.v - v).abs() < 4.0 * r.mc.v_std_err, "{p}: {} ± {}", r.mc.v, r.mc.v_std_err);
        assert!((r.mc.mmse - mmse).abs() < 0.01 * mmse);
        assert!((r.mc.i - i).abs() < 0.01);
    }
    let (_, v, mmse, c) = gaussian_closed_form(1.0);
    assert_eq!((v, mmse, c), (0.375, 0.5, -0.25));
}

#[test]
fn gaussian_output_density_is_the_convolution() {
    let noise = NoiseModel::gaussian(1.0).unwrap();
    for p in [0.1f64, 1.0, 10.0] {
        let s = (1.0 + p).sqrt();
        let worst = (0..=160)
            .map(|j| -8.0 * s + j as f64 * 0.1 * s)
            .map(|y| (output_density(&noise, p, y).unwrap() / normal_pdf(1.0 + p, y) - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "{p}: {worst}");
    }
}

#[test]
fn vanishing_power_recovers_the_noise_density() {
    let noise = NoiseModel::laplace(1.0).unwrap();
    for y in [-2.0, -0.5, 0.7, 3.0] {
        let q = output_density(&noise, 1e-6, y).unwrap();
        assert!((q / noise.pdf(y) - 1.0).abs() < 1e-5, "{y}");
    }
}

#[test]
fn symmetric_noise_gives_even_output_density() {
    for noise in [
        NoiseModel::laplace(0.8).unwrap(),
        NoiseModel::uniform(1.5).unwrap(),
        NoiseModel::student_t(7.5).unwrap(),
    ] {
        for y in [0.3, 1.1, 2.9, 6.0] {
            let (a, b) = (output_density(&noise, 2.0, y).unwrap(), output_density(&noise, 2.0, -y).unwrap());
            assert!((a / b - 1.0).abs() < 1e-10, "{} {y}", noise.name());
        }
    }
}

#[test]
fn log_density_curvature_identity() {
    let h = 1e-3;
    for noise in [
        NoiseModel::laplace(1.0).unwrap(),
        NoiseModel::student_t(8.0).unwrap(),
        NoiseModel::uniform(1.0).unwrap(),
    ] {
        let p = 1.0;
        let lq = |y: f64| output_density(&noise, p, y).unwrap().ln();
        for j in 0..20 {
            let y = -3.8 + 0.4 * j as f64;
            let fd = (lq(y + h) - 2.0 * lq(y) + lq(y - h)) / (h * h);
            let exact = log_density_curvature(&noise, p, y).unwrap();
            assert!((fd - exact).abs() < 1e-4, "{} y={y}: {fd} {exact}", noise.name());
        }
    }
}

#[test]
fn laplace_noise_is_seed_stable() {
    let noise = NoiseModel::laplace(std::f64::consts::FRAC_1_SQRT_2).unwrap();
    let a = dispersion(&noise, 1.0, 400_000, Seed(11)).unwrap();
    let b = dispersion(&noise, 1.0, 400_000, Seed(12)).unwrap();
    assert_eq!(a.v, b.v);
    let sigma = a.mc.v_std_err.hypot(b.mc.v_std_err);
    assert!((a.mc.v - b.mc.v).abs() <= 2.0 * sigma, "{} {} {sigma}", a.mc.v, b.mc.v);
    assert!((a.mc.v - a.v).abs() <= 4.0 * a.mc.v_std_err);
    let rate = a.rate_second_order(10_000, 1e-3).unwrap();
    assert!(rate.is_finite() && rate < a.i);
    // Unit-variance Laplace noise is less harmful than Gaussian noise.
    assert!(a.i > gaussian_closed_form(1.0).0);
    let again = dispersion(&noise, 1.0, 400_000, Seed(11)).unwrap();
    assert_eq!(a, again);
}

#[test]
fn half_error_rate_is_mutual_information() {
    let r = dispersion(&NoiseModel::uniform(1.0).unwrap(), 1.0, 10_000, Seed(1)).unwrap();
    assert_eq!(rate_second_order(&r, 100, 0.5).unwrap(), r.i);
    assert!(rate_second_order(&r, 0, 0.1).is_err());
    assert!(rate_second_order(&r, 10, 1.0).is_err());
}

#[test]
fn gaussian_bridge_to_complex_awgn() {
    // One complex use at SNR P is two real uses at SNR P.
    let noise = NoiseModel::gaussian(1.0).unwrap();
    for (p, n, eps) in [(1.0, 500, 1e-3), (0.3, 2000, 1e-2), (4.0, 100, 0.1)] {
        let r = dispersion(&noise, p, 10_000, Seed(2)).unwrap();
        let real = 2.0 * rate_second_order(&r, 2 * n, eps).unwrap();
        let complex = AwgnSpec::new(n, p, eps).unwrap().normal_approx_rate();
        assert!((real - complex).abs() < 1e-7, "{p}: {real} {complex}");
    }
}

#[test]
fn tabulated_gaussian_agrees_with_builtin() {
    let text: String = (-1200..=1200)
        .map(|j| {
            let x = j as f64 * 0.01;
            format!("{x} {}\n", normal_pdf(1.0, x))
        })
        .collect();
    let noise = NoiseModel::Tabulated(TabulatedPdf::parse(&text).unwrap());
    assert!((noise.variance() - 1.0).abs() < 1e-4);
    for y in [-4.0, -1.0, 0.0, 2.5] {
        let q = output_density(&noise, 1.0, y).unwrap();
        assert!((q / normal_pdf(2.0, y) - 1.0).abs() < 1e-4, "{y}");
    }
    let r = dispersion(&noise, 1.0, 100_000, Seed(5)).unwrap();
    assert!((r.v - 0.375).abs() < 1e-3 && (r.mmse - 0.5).abs() < 1e-4, "{r:?}");
}

#[test]
fn tabulated_files_and_parse_errors() {
    let dir = std::env::temp_dir().join(format!("betabeta-noise-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("tent.txt");
    std::fs::write(&path, "# triangular\n-1, 0\n0, 1\n1, 0\n").unwrap();
    let noise = NoiseModel::parse(&format!("file:{}", path.display())).unwrap();
    assert!((noise.variance() - 1.0 / 6.0).abs() < 1e-12);
    let r = dispersion(&noise, 1.0, 20_000, Seed(1)).unwrap();
    assert!(r.v > 0.0 && r.mmse <= 1.0);
    std::fs::remove_dir_all(&dir).unwrap();

    assert!(TabulatedPdf::parse("0 1\n1 1 1\n").is_err());
    assert!(TabulatedPdf::parse("0 1\n0 1\n").is_err());
    assert!(TabulatedPdf::parse("0 0.4\n1 0.4\n2 0.4\n").is_err());
    assert!(TabulatedPdf::parse("0 x\n1 1\n").is_err());
    assert!(NoiseModel::parse("file:/nonexistent/noise.txt").is_err());
}

#[test]
fn model_parsing_and_conditions() {
    assert_eq!(NoiseModel::parse("gaussian").unwrap(), NoiseModel::Gaussian { sd: 1.0 });
    assert_eq!(NoiseModel::parse("laplace:2").unwrap(), NoiseModel::Laplace { scale: 2.0 });
    assert_eq!(NoiseModel::parse("student-t:7").unwrap(), NoiseModel::StudentT { nu: 7.0 });
    assert!((NoiseModel::parse("uniform").unwrap().variance() - 1.0).abs() < 1e-12);
    assert!(NoiseModel::parse("student-t:5").is_err());
    assert!(NoiseModel::parse("student-t").is_err());
    assert!(NoiseModel::parse("cauchy").is_err());
    assert!(NoiseModel::laplace(-1.0).is_err());
    assert!(dispersion(&NoiseModel::gaussian(1.0).unwrap(), 0.0, 100, Seed(1)).is_err());
    assert!(dispersion(&NoiseModel::gaussian(1.0).unwrap(), 1.0, 1, Seed(1)).is_err());
}

#[test]
fn samplers_match_their_moments() {
    use rand::Rng;
    for noise in [
        NoiseModel::laplace(1.3).unwrap(),
        NoiseModel::uniform(0.7).unwrap(),
        NoiseModel::student_t(9.0).unwrap(),
        NoiseModel::Tabulated(TabulatedPdf::parse("-1 0\n0 1.3333333333333333\n0.5 0\n").unwrap()),
    ] {
        let mut rng = Seed(4).substream(0);
        let n = 400_000;
        let xs: Vec<f64> = (0..n).map(|_| noise.sample(&mut rng)).collect();
        let m = xs.iter().sum::<f64>() / n as f64;
        let m2 = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let sd2 = ((noise.abs_moment(4) - noise.abs_moment(2).powi(2)) / n as f64).sqrt();
        let sd1 = (noise.variance() / n as f64).sqrt();
        assert!((m - noise.mean()).abs() < 5.0 * sd1, "{}", noise.name());
        assert!((m2 - noise.abs_moment(2)).abs() < 5.0 * sd2, "{}", noise.name());
        let _: f64 = rng.gen();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn report_invariants(p in 0.05f64..20.0, kind in 0usize..3, scale in 0.3f64..3.0) {
        let noise = match kind {
            0 => NoiseModel::laplace(scale).unwrap(),
            1 => NoiseModel::uniform(scale).unwrap(),
            _ => NoiseModel::student_t(6.5 + scale).unwrap(),
        };
        let r = dispersion(&noise, p, 4_000, Seed(9)).unwrap();
        prop_assert!(r.var_cond >= 0.0 && r.var_dq >= 0.0);
        prop_assert!((r.v - (r.var_cond + r.var_dq)).abs() <= 1e-12 * r.v.max(1.0));
        prop_assert!(r.mmse >= 0.0 && r.mmse <= p + 1e-9);
        prop_assert!(r.c <= 0.0);
        prop_assert!(r.i > 0.0 && r.i.is_finite());
        prop_assert!(r.mc.third_abs_moment.is_finite());
    }
}
