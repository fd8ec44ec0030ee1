//! Achievable dispersion of the real additive-noise channel `Y = X + Z` under
//! Gaussian codebooks `X ~ N(0, P)`, for non-Gaussian noise `Z`.
//!
//! All quantities are in nats and use the real-channel convention, so
//! Gaussian noise gives `I = ½ ln(1+P)`; one complex use of the `awgn` module
//! corresponds to two real uses here.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::quad::integrate_breaks;
use crate::numerics::special::{ln_gamma, q_func, q_inv};
use crate::numerics::Seed;

/// Tail probability bounding the quadrature window of heavy-tailed noise.
pub const TAIL_MASS: f64 = 1e-10;
/// Samples per Monte-Carlo chunk; each chunk uses its own substream.
pub const MC_CHUNK: usize = 1 << 16;
/// Default Monte-Carlo sample count.
pub const DEFAULT_MC_SAMPLES: usize = 1_000_000;

const REL_TOL: f64 = 1e-11;
const TABLE_STEPS_PER_SCALE: f64 = 40.0;
const MAX_TABLE_POINTS: usize = 400_000;

/// Noise density given as a piecewise-linear table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedPdf {
    xs: Vec<f64>,
    ps: Vec<f64>,
    cdf: Vec<f64>,
}

impl TabulatedPdf {
    /// Build from knots and density values. A table whose trapezoid mass is
    /// within `1e-3` of one is rescaled to unit mass; anything else is rejected.
    pub fn new(xs: Vec<f64>, ps: Vec<f64>) -> Result<TabulatedPdf> {
        if xs.len() != ps.len() || xs.len() < 2 {
            return Err(Error::Invalid("density table needs at least two (x, density) pairs".into()));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) || xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("density table abscissae must be finite and strictly increasing".into()));
        }
        if ps.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Invalid("density values must be finite and non-negative".into()));
        }
        let mut cdf = vec![0.0];
        for i in 1..xs.len() {
            cdf.push(cdf[i - 1] + 0.5 * (ps[i] + ps[i - 1]) * (xs[i] - xs[i - 1]));
        }
        let mass = *cdf.last().unwrap();
        if (mass - 1.0).abs() > 1e-3 {
            return Err(Error::Invalid(format!("density table integrates to {mass}, not 1")));
        }
        let ps = ps.iter().map(|p| p / mass).collect();
        let cdf = cdf.iter().map(|c| c / mass).collect();
        Ok(TabulatedPdf { xs, ps, cdf })
    }

    /// Parse whitespace- or comma-separated `x density` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<TabulatedPdf> {
        let (mut xs, mut ps) = (Vec::new(), Vec::new());
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::Parse { line: i + 1, msg: format!("{s:?}: {e}") })
            };
            if fields.len() != 2 {
                return Err(Error::Parse { line: i + 1, msg: "expected two columns: x density".into() });
            }
            xs.push(parse(fields[0])?);
            ps.push(parse(fields[1])?);
        }
        TabulatedPdf::new(xs, ps)
    }

    pub fn from_file(path: &Path) -> Result<TabulatedPdf> {
        TabulatedPdf::parse(&std::fs::read_to_string(path)?)
    }

    fn support(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    fn pdf(&self, z: f64) -> f64 {
        let (lo, hi) = self.support();
        if !(z >= lo && z <= hi) {
            return 0.0;
        }
        let i = self.xs.partition_point(|&x| x <= z).clamp(1, self.xs.len() - 1);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let t = (z - x0) / (x1 - x0);
        self.ps[i - 1] + t * (self.ps[i] - self.ps[i - 1])
    }

    fn inverse_cdf(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c < u).clamp(1, self.xs.len() - 1);
        let (x0, w) = (self.xs[i - 1], self.xs[i] - self.xs[i - 1]);
        let p0 = self.ps[i - 1];
        let s = (self.ps[i] - p0) / w;
        let r = (u - self.cdf[i - 1]).max(0.0);
        let disc = (p0 * p0 + 2.0 * s * r).max(0.0);
        let t = if p0 + disc.sqrt() > 0.0 { 2.0 * r / (p0 + disc.sqrt()) } else { 0.0 };
        x0 + t.min(w)
    }

    /// `∫ |z|^k p(z) dz`, exact for the piecewise-linear density.
    fn abs_moment(&self, k: u32) -> f64 {
        let mut breaks = self.xs.clone();
        if breaks[0] < 0.0 && *breaks.last().unwrap() > 0.0 {
            breaks.push(0.0);
            breaks.sort_by(f64::total_cmp);
        }
        integrate_breaks(&mut |z: f64| z.abs().powi(k as i32) * self.pdf(z), &breaks, 0.0, 1e-13).0
    }

    /// Posterior sums `(∫ φ_P(x) p(y-x) x^j dx)_{j=0..2}` in closed form.
    fn gaussian_moments(&self, p: f64, y: f64) -> [f64; 3] {
        let sp = p.sqrt();
        let phi = |u: f64| (-0.5 * u * u).exp() / (2.0 * PI).sqrt();
        let mut out = [0.0; 3];
        for i in 1..self.xs.len() {
            let (z0, z1) = (self.xs[i - 1], self.xs[i]);
            let (ul, uh) = ((y - z1) / sp, (y - z0) / sp);
            if ul > 40.0 || uh < -40.0 {
                continue;
            }
            let mass = if ul >= 0.0 {
                q_func(ul) - q_func(uh)
            } else if uh <= 0.0 {
                q_func(-uh) - q_func(-ul)
            } else {
                1.0 - q_func(uh) - q_func(-ul)
            };
            let (fl, fh) = (phi(ul), phi(uh));
            let j1 = fl - fh;
            let j2 = mass + ul * fl - uh * fh;
            let j3 = 2.0 * j1 + ul * ul * fl - uh * uh * fh;
            let k = [mass, sp * j1, p * j2, p * sp * j3];
            let s = (self.ps[i] - self.ps[i - 1]) / (z1 - z0);
            let a = self.ps[i - 1] + s * (y - z0);
            for j in 0..3 {
                out[j] += a * k[j] - s * k[j + 1];
            }
        }
        out
    }
}

/// Additive noise law `P_Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    Gaussian { sd: f64 },
    Laplace { scale: f64 },
    Uniform { half_width: f64 },
    /// Student-t with `ν > 6` degrees of freedom.
    StudentT { nu: f64 },
    Tabulated(TabulatedPdf),
}

impl NoiseModel {
    pub fn gaussian(sd: f64) -> Result<NoiseModel> {
        positive("standard deviation", sd)?;
        Ok(NoiseModel::Gaussian { sd })
    }

    pub fn laplace(scale: f64) -> Result<NoiseModel> {
        positive("Laplace scale", scale)?;
        Ok(NoiseModel::Laplace { scale })
    }

    pub fn uniform(half_width: f64) -> Result<NoiseModel> {
        positive("uniform half-width", half_width)?;
        Ok(NoiseModel::Uniform { half_width })
    }

    pub fn student_t(nu: f64) -> Result<NoiseModel> {
        if !(nu > 6.0 && nu.is_finite()) {
            return Err(Error::Invalid(format!("Student-t needs ν > 6 for E|Z|⁶ < ∞, got {nu}")));
        }
        Ok(NoiseModel::StudentT { nu })
    }

    /// Parse `gaussian[:sd]`, `laplace[:scale]`, `uniform[:half_width]`,
    /// `student-t:nu` or `file:PATH`.
    pub fn parse(s: &str) -> Result<NoiseModel> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        if name == "file" {
            let path = arg.ok_or_else(|| Error::Invalid("file: needs a path".into()))?;
            return Ok(NoiseModel::Tabulated(TabulatedPdf::from_file(Path::new(path))?));
        }
        let num = |default: Option<f64>| -> Result<f64> {
            match arg {
                Some(a) => a.parse().map_err(|_| Error::Invalid(format!("bad noise parameter {a:?}"))),
                None => default.ok_or_else(|| Error::Invalid(format!("noise {name} needs a parameter"))),
            }
        };
        match name {
            "gaussian" => NoiseModel::gaussian(num(Some(1.0))?),
            "laplace" => NoiseModel::laplace(num(Some(std::f64::consts::FRAC_1_SQRT_2))?),
            "uniform" => NoiseModel::uniform(num(Some(3f64.sqrt()))?),
            "student-t" => NoiseModel::student_t(num(None)?),
            _ => Err(Error::Invalid(format!("unknown noise model {name:?}"))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            NoiseModel::Gaussian { sd } => format!("gaussian(sd={sd})"),
            NoiseModel::Laplace { scale } => format!("laplace(scale={scale})"),
            NoiseModel::Uniform { half_width } => format!("uniform(half_width={half_width})"),
            NoiseModel::StudentT { nu } => format!("student-t(nu={nu})"),
            NoiseModel::Tabulated(t) => format!("tabulated({} points)", t.xs.len()),
        }
    }

    pub fn ln_pdf(&self, z: f64) -> f64 {
        match self {
            NoiseModel::Gaussian { sd } => {
                let u = z / sd;
                -0.5 * u * u - (sd * (2.0 * PI).sqrt()).ln()
            }
            NoiseModel::Laplace { scale } => -z.abs() / scale - (2.0 * scale).ln(),
            NoiseModel::Uniform { half_width } => {
                if z.abs() <= *half_width {
                    -(2.0 * half_width).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            NoiseModel::StudentT { nu } => {
                ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu) - 0.5 * (nu * PI).ln()
                    - 0.5 * (nu + 1.0) * (z * z / nu).ln_1p()
            }
            NoiseModel::Tabulated(t) => t.pdf(z).ln(),
        }
    }

    pub fn pdf(&self, z: f64) -> f64 {
        match self {
            NoiseModel::Tabulated(t) => t.pdf(z),
            _ => self.ln_pdf(z).exp(),
        }
    }

    /// `E|Z|^k` for `k ≤ 6`.
    pub fn abs_moment(&self, k: u32) -> f64 {
        assert!(k <= 6);
        let kf = k as f64;
        match self {
            NoiseModel::Gaussian { sd } => {
                sd.powi(k as i32) * 2f64.powf(0.5 * kf) * (ln_gamma(0.5 * (kf + 1.0)) - 0.5 * PI.ln()).exp()
            }
            NoiseModel::Laplace { scale } => scale.powi(k as i32) * (1..=k).product::<u32>() as f64,
            NoiseModel::Uniform { half_width } => half_width.powi(k as i32) / (kf + 1.0),
            NoiseModel::StudentT { nu } => {
                if kf >= *nu {
                    return f64::INFINITY;
                }
                (0.5 * kf * nu.ln() + ln_gamma(0.5 * (kf + 1.0)) + ln_gamma(0.5 * (nu - kf))
                    - 0.5 * PI.ln()
                    - ln_gamma(0.5 * nu))
                    .exp()
            }
            NoiseModel::Tabulated(t) => t.abs_moment(k),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            NoiseModel::Tabulated(t) => {
                integrate_breaks(&mut |z: f64| z * t.pdf(z), &t.xs, 0.0, 1e-13).0
            }
            _ => 0.0,
        }
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.abs_moment(2) - m * m
    }

    /// Points where the density is not smooth.
    fn kinks(&self) -> Vec<f64> {
        match self {
            NoiseModel::Laplace { .. } => vec![0.0],
            NoiseModel::Uniform { half_width } => vec![-half_width, *half_width],
            _ => Vec::new(),
        }
    }

    /// Interval outside which the noise has negligible mass.
    fn window(&self) -> (f64, f64) {
        match self {
            NoiseModel::Gaussian { sd } => (-12.0 * sd, 12.0 * sd),
            NoiseModel::Laplace { scale } => (-30.0 * scale, 30.0 * scale),
            NoiseModel::Uniform { half_width } => (-half_width, *half_width),
            NoiseModel::StudentT { .. } => {
                let r = (self.abs_moment(6) / TAIL_MASS).powf(1.0 / 6.0);
                (-r, r)
            }
            NoiseModel::Tabulated(t) => t.support(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            NoiseModel::Gaussian { sd } => sd * rng.sample::<f64, _>(StandardNormal),
            NoiseModel::Laplace { scale } => {
                let u: f64 = rng.gen::<f64>() - 0.5;
                -scale * u.signum() * (-2.0 * u.abs()).ln_1p()
            }
            NoiseModel::Uniform { half_width } => rng.gen_range(-*half_width..*half_width),
            NoiseModel::StudentT { nu } => StudentT::new(*nu).expect("ν > 6").sample(rng),
            NoiseModel::Tabulated(t) => t.inverse_cdf(rng.gen()),
        }
    }

    /// Checks the finiteness conditions on the noise law.
    fn check(&self) -> Result<()> {
        let m6 = self.abs_moment(6);
        if !m6.is_finite() {
            return Err(Error::Invalid(format!("{}: E|Z|⁶ is not finite", self.name())));
        }
        Ok(())
    }
}

fn positive(what: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Invalid(format!("{what} must be positive, got {v}")))
    }
}

fn check_power(p: f64) -> Result<()> {
    positive("power P", p)
}

/// Sorted, deduplicated breaks clipped to `[lo, hi]`.
fn clip_breaks(mut pts: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    pts.push(lo);
    pts.push(hi);
    pts.retain(|x| x.is_finite() && *x >= lo && *x <= hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Output density and posterior moments of `X ~ N(0,P)` given `Y = y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub density: f64,
    pub mean: f64,
    pub variance: f64,
}

fn posterior(noise: &NoiseModel, p: f64, y: f64, want_var: bool) -> Posterior {
    if let NoiseModel::Tabulated(t) = noise {
        let m = t.gaussian_moments(p, y);
        let mean = m[1] / m[0];
        return Posterior { density: m[0], mean, variance: (m[2] / m[0] - mean * mean).max(0.0) };
    }
    let sp = p.sqrt();
    let (zlo, zhi) = noise.window();
    let reach = 12.0 * sp + y.abs();
    let (lo, hi) = ((y - zhi).max(-reach), (y - zlo).min(reach));
    if !(hi > lo) {
        return Posterior { density: 0.0, mean: f64::NAN, variance: f64::NAN };
    }
    let sz = noise.variance().sqrt();
    let mut pts: Vec<f64> = (-12..=12).map(|j| j as f64 * sp).collect();
    pts.extend(noise.kinks().iter().map(|k| y - k));
    pts.extend((-10..=10).map(|j| y + j as f64 * sz));
    let breaks = clip_breaks(pts, lo, hi);
    let ln_phi0 = -0.5 * (2.0 * PI * p).ln();
    let weight = |x: f64| (ln_phi0 - 0.5 * x * x / p + noise.ln_pdf(y - x)).exp();
    let q = integrate_breaks(&mut |x| weight(x), &breaks, 0.0, REL_TOL).0;
    let mean = integrate_breaks(&mut |x| x * weight(x), &breaks, 0.0, REL_TOL).0 / q;
    let variance = if want_var {
        integrate_breaks(&mut |x| (x - mean).powi(2) * weight(x), &breaks, 0.0, REL_TOL).0 / q
    } else {
        f64::NAN
    };
    Posterior { density: q, mean, variance }
}

/// `q_Y(y) = ∫ φ_P(x) p_Z(y - x) dx`.
pub fn output_density(noise: &NoiseModel, p: f64, y: f64) -> Result<f64> {
    check_power(p)?;
    Ok(posterior(noise, p, y, false).density)
}

/// `q_Y(y)` together with `E[X | Y = y]` and `Var[X | Y = y]`.
pub fn posterior_moments(noise: &NoiseModel, p: f64, y: f64) -> Result<Posterior> {
    check_power(p)?;
    Ok(posterior(noise, p, y, true))
}

/// `d² ln q_Y / dy² = -1/P + Var[X | Y = y]/P²`.
pub fn log_density_curvature(noise: &NoiseModel, p: f64, y: f64) -> Result<f64> {
    let post = posterior_moments(noise, p, y)?;
    Ok(-1.0 / p + post.variance / (p * p))
}

/// `ln q_Y` on a uniform grid with cubic Hermite interpolation; the slope
/// `-E[X|Y=y]/P` comes from the same quadrature. Points off the grid are
/// evaluated directly.
struct LogDensityTable<'a> {
    noise: &'a NoiseModel,
    p: f64,
    lo: f64,
    h: f64,
    vals: Vec<f64>,
    slopes: Vec<f64>,
}

impl<'a> LogDensityTable<'a> {
    fn new(noise: &'a NoiseModel, p: f64) -> Result<LogDensityTable<'a>> {
        let sp = p.sqrt();
        let (zlo, zhi) = noise.window();
        let (lo, hi) = (zlo - 10.0 * sp, zhi + 10.0 * sp);
        let scale = sp.min(noise.variance().sqrt());
        let points = (((hi - lo) / scale * TABLE_STEPS_PER_SCALE).ceil() as usize + 1).clamp(64, MAX_TABLE_POINTS);
        let h = (hi - lo) / (points - 1) as f64;
        let (mut vals, mut slopes) = (Vec::with_capacity(points), Vec::with_capacity(points));
        for i in 0..points {
            let post = posterior(noise, p, lo + i as f64 * h, false);
            vals.push(post.density.ln());
            slopes.push(-post.mean / p);
        }
        if vals.iter().chain(&slopes).any(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "{}: output density vanishes inside the noise window, q_Y is not positive",
                noise.name()
            )));
        }
        Ok(LogDensityTable { noise, p, lo, h, vals, slopes })
    }

    /// `(ln q_Y(y), d ln q_Y/dy)`.
    fn eval(&self, y: f64) -> (f64, f64) {
        let t = (y - self.lo) / self.h;
        let i = t.floor();
        if !(i >= 0.0 && (i as usize) + 1 < self.vals.len()) {
            let post = posterior(self.noise, self.p, y, false);
            return (post.density.ln(), -post.mean / self.p);
        }
        let i = i as usize;
        let s = t - i as f64;
        let (y0, y1) = (self.vals[i], self.vals[i + 1]);
        let (d0, d1) = (self.slopes[i] * self.h, self.slopes[i + 1] * self.h);
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * d1;
        let dv = (6.0 * s2 - 6.0 * s) * y0 + (3.0 * s2 - 4.0 * s + 1.0) * d0 + (-6.0 * s2 + 6.0 * s) * y1 + (3.0 * s2 - 2.0 * s) * d1;
        (v, dv / self.h)
    }
}

/// Dispersion terms for one noise law and power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionReport {
    pub noise: String,
    pub power: f64,
    /// `I(X;Y)`, nats.
    pub i: f64,
    /// `var_cond + var_dq`, nats².
    pub v: f64,
    /// `(mmse - P)/(2P²)`.
    pub c: f64,
    pub mmse: f64,
    /// `E[Var(i(X;Y) | X)]`.
    pub var_cond: f64,
    /// `Var[D(P_{Y|X=X̄} ‖ Q_Y) + c X̄²]`.
    pub var_dq: f64,
    pub mc: McEstimate,
}

/// Monte-Carlo counterparts from antithetic pairs `(x, z)`, `(-x, z')`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub samples: usize,
    pub seed: u64,
    pub i: f64,
    /// `Var[i(X;Y) + c X²]`, which equals `V`.
    pub v: f64,
    pub v_std_err: f64,
    /// `E[(X - E[X|Y])²]` with the conditional mean evaluated at each sample.
    pub mmse: f64,
    /// `E|i(X;Y) - I|³`.
    pub third_abs_moment: f64,
}

impl DispersionReport {
    /// `I - √(V/n)·Q⁻¹(ε)`, nats per real channel use.
    pub fn rate_second_order(&self, n: usize, eps: f64) -> Result<f64> {
        rate_second_order(self, n, eps)
    }
}

/// `I - √(V/n)·Q⁻¹(ε)` from a computed report.
pub fn rate_second_order(report: &DispersionReport, n: usize, eps: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Invalid("blocklength must be positive".into()));
    }
    let z = q_inv(eps).ok_or_else(|| Error::Invalid(format!("ε = {eps} outside (0,1)")))?;
    Ok(report.i - (report.v / n as f64).sqrt() * z)
}

#[derive(Default, Clone, Copy)]
struct McSums {
    pairs: usize,
    i: f64,
    e: f64,
    u: f64,
    u2: f64,
    sq_err: f64,
    abs3: f64,
}

impl McSums {
    fn merge(mut self, o: McSums) -> McSums {
        self.pairs += o.pairs;
        self.i += o.i;
        self.e += o.e;
        self.u += o.u;
        self.u2 += o.u2;
        self.sq_err += o.sq_err;
        self.abs3 += o.abs3;
        self
    }
}

fn mc_chunk(table: &LogDensityTable, c: f64, center: f64, i_ref: f64, pairs: usize, seed: Seed, chunk: u64) -> McSums {
    let mut rng = seed.substream(chunk);
    let (noise, p) = (table.noise, table.p);
    let sp = p.sqrt();
    let mut acc = McSums { pairs, ..McSums::default() };
    for _ in 0..pairs {
        let x = sp * rng.sample::<f64, _>(StandardNormal);
        let mut u = 0.0;
        for xs in [x, -x] {
            let z = noise.sample(&mut rng);
            let (lq, dlq) = table.eval(xs + z);
            let i = noise.ln_pdf(z) - lq;
            let e = i + c * xs * xs - center;
            acc.i += i;
            acc.e += e;
            u += 0.5 * e * e;
            acc.abs3 += (i - i_ref).abs().powi(3);
            acc.sq_err += (xs + p * dlq).powi(2);
        }
        acc.u += u;
        acc.u2 += u * u;
    }
    acc
}

/// Quadrature values of `I`, `V` and its two summands, `c` and `mmse`, with
/// an independent Monte-Carlo estimate of `I`, `V` and `mmse` from
/// `mc_samples` antithetic samples.
pub fn dispersion(noise: &NoiseModel, p: f64, mc_samples: usize, seed: Seed) -> Result<DispersionReport> {
    check_power(p)?;
    noise.check()?;
    if mc_samples < 2 {
        return Err(Error::Invalid("need at least two Monte-Carlo samples".into()));
    }
    let table = LogDensityTable::new(noise, p)?;
    let sp = p.sqrt();
    let (zlo, zhi) = noise.window();
    let sz = noise.variance().sqrt();

    // mmse = E[Var(X | Y)] over the output law.
    let mut y_pts: Vec<f64> = (-12..=12).map(|j| j as f64 * sp).collect();
    y_pts.extend((-10..=10).map(|j| j as f64 * sz));
    for k in noise.kinks() {
        y_pts.extend((-4..=4).map(|j| k + j as f64 * sp));
    }
    let y_breaks = clip_breaks(y_pts, zlo - 10.0 * sp, zhi + 10.0 * sp);
    let mmse = integrate_breaks(
        &mut |y| {
            let post = posterior(noise, p, y, true);
            if post.density > 0.0 { post.density * post.variance } else { 0.0 }
        },
        &y_breaks,
        1e-15,
        1e-10,
    )
    .0;
    let c = (mmse - p) / (2.0 * p * p);

    // Inner integrals over z for each x: D(x) and Var(i | X = x).
    let mut z_pts: Vec<f64> = (-10..=10).map(|j| noise.mean() + j as f64 * sz).collect();
    match noise {
        NoiseModel::Tabulated(t) => z_pts.extend(&t.xs),
        _ => z_pts.extend(noise.kinks()),
    }
    let z_breaks = clip_breaks(z_pts, zlo, zhi);
    let mut cache: HashMap<u64, (f64, f64)> = HashMap::new();
    let mut inner = |x: f64| -> (f64, f64) {
        *cache.entry(x.to_bits()).or_insert_with(|| {
            let dens = |z: f64| noise.pdf(z);
            let info = |z: f64| noise.ln_pdf(z) - table.eval(x + z).0;
            let term = |z: f64| {
                let w = dens(z);
                if w > 0.0 { w * info(z) } else { 0.0 }
            };
            let d = integrate_breaks(&mut |z| term(z), &z_breaks, 1e-14, 1e-11).0;
            let var = integrate_breaks(
                &mut |z| {
                    let w = dens(z);
                    if w > 0.0 { w * (info(z) - d).powi(2) } else { 0.0 }
                },
                &z_breaks,
                1e-15,
                1e-10,
            )
            .0;
            (d, var)
        })
    };
    let x_breaks: Vec<f64> = (-10..=10).map(|j| j as f64 * sp).collect();
    let gauss = |x: f64| (-0.5 * x * x / p).exp() / (2.0 * PI * p).sqrt();
    let var_cond = integrate_breaks(&mut |x| gauss(x) * inner(x).1, &x_breaks, 1e-15, 1e-10).0;
    let mean_g = integrate_breaks(&mut |x| gauss(x) * (inner(x).0 + c * x * x), &x_breaks, 1e-15, 1e-12).0;
    let var_dq =
        integrate_breaks(&mut |x| gauss(x) * (inner(x).0 + c * x * x - mean_g).powi(2), &x_breaks, 1e-16, 1e-10).0;
    let i = mean_g - c * p;
    let v = var_cond + var_dq;
    for (what, val) in [("I(P)", i), ("mmse", mmse), ("Var[i|X]", var_cond), ("Var[D + cX²]", var_dq)] {
        if !val.is_finite() {
            return Err(Error::Numerical(format!("{}: {what} is not finite", noise.name())));
        }
    }

    let pairs = mc_samples / 2;
    let chunks = pairs.div_ceil(MC_CHUNK);
    let threads = std::thread::available_parallelism().map(|t| t.get()).unwrap_or(1).min(chunks);
    let center = mean_g;
    let table = &table;
    let mut parts: Vec<(usize, McSums)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                s.spawn(move || {
                    (t..chunks)
                        .step_by(threads)
                        .map(|k| {
                            let len = MC_CHUNK.min(pairs - k * MC_CHUNK);
                            (k, mc_chunk(table, c, center, i, len, seed, k as u64))
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("Monte-Carlo worker panicked")).collect()
    });
    parts.sort_by_key(|(k, _)| *k);
    let sums = parts.into_iter().fold(McSums::default(), |a, (_, b)| a.merge(b));
    let np = sums.pairs as f64;
    let ns = 2.0 * np;
    let mean_e = sums.e / ns;
    let mean_u = sums.u / np;
    let var_u = (sums.u2 / np - mean_u * mean_u).max(0.0);
    let mc = McEstimate {
        samples: 2 * sums.pairs,
        seed: seed.0,
        i: sums.i / ns,
        v: mean_u - mean_e * mean_e,
        v_std_err: (var_u / np).sqrt(),
        mmse: sums.sq_err / ns,
        third_abs_moment: sums.abs3 / ns,
    };
    if !(mc.v.is_finite() && mc.third_abs_moment.is_finite()) {
        return Err(Error::Numerical(format!(
            "{}: third absolute moment of i(X;Y) is not finite on the sample",
            noise.name()
        )));
    }
    Ok(DispersionReport { noise: noise.name(), power: p, i, v, c, mmse, var_cond, var_dq, mc })
}

/// Gaussian-noise closed forms `(I, V, mmse, c)` at power `P` with unit noise.
pub fn gaussian_closed_form(p: f64) -> (f64, f64, f64, f64) {
    let s = 1.0 + p;
    (0.5 * p.ln_1p(), p * (2.0 + p) / (2.0 * s * s), p / s, -0.5 / s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_interpolates_and_samples() {
        let t = TabulatedPdf::parse("# tent\n-1 0\n0 1\n1 0\n").unwrap();
        assert!((t.pdf(0.5) - 0.5).abs() < 1e-15);
        assert_eq!(t.pdf(2.0), 0.0);
        assert!((t.inverse_cdf(0.5)).abs() < 1e-12);
        assert!((t.inverse_cdf(0.125) + 0.5).abs() < 1e-12);
        assert!((t.abs_moment(2) - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn builtin_moments() {
        let g = NoiseModel::gaussian(1.0).unwrap();
        assert!((g.abs_moment(6) - 15.0).abs() < 1e-10);
        assert!((NoiseModel::laplace(1.0).unwrap().variance() - 2.0).abs() < 1e-12);
        assert!((NoiseModel::student_t(8.0).unwrap().variance() - 8.0 / 6.0).abs() < 1e-10);
        assert!(NoiseModel::student_t(6.0).is_err());
    }
}
