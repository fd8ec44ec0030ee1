mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use betabeta::awgn::{bb_rate_achievability, bb_rate_converse, eb_curves, AwgnOptions, AwgnSpec};
use betabeta::bound::{delta_grid, tau_grid, verify_code_existence, BetaPair, BoundResult, DEFAULT_GRID};
use betabeta::dispersion::{dispersion, NoiseModel};
use betabeta::expnoise::exp_table;
use betabeta::mimo::{rate_curve, MimoSpec, DEFAULT_CONFIDENCE, DEFAULT_SAMPLES};
use betabeta::np::io::{parse_channel, parse_dist};
use betabeta::np::lemma::run_suite;
use betabeta::np::{DiscreteChannel, DiscreteDist};
use betabeta::numerics::optim::log_grid;
use betabeta::numerics::Seed;
use betabeta::Error;
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use output::{num, Format, Table, Unit};

/// Finite-blocklength achievability and converse bounds.
#[derive(Debug, Parser)]
#[command(name = "betabeta", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Unit for rates and information quantities.
    #[arg(long, global = true, value_enum, default_value_t = Unit::Bits)]
    unit: Unit,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed for Monte-Carlo work.
    #[arg(long, global = true, env = "BETABETA_SEED", default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Args)]
struct DiscreteArgs {
    /// Channel matrix: a file with one row per input, or inline rows separated by ';'.
    #[arg(long)]
    channel: String,
    /// Input distribution (file or inline row); uniform when omitted.
    #[arg(long)]
    px: Option<String>,
    /// Auxiliary output distribution; the induced output law when omitted.
    #[arg(long)]
    qy: Option<String>,
    #[arg(long)]
    eps: f64,
    /// Blocklength of the memoryless extension.
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Points in the τ or δ search grid.
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// ββ achievability bound for a discrete memoryless channel.
    DiscreteBb(DiscreteArgs),
    /// ββ converse bound for a discrete memoryless channel.
    DiscreteConverse(DiscreteArgs),
    /// Search random codebooks of the guaranteed size for one meeting ε.
    VerifyCode {
        #[command(flatten)]
        discrete: DiscreteArgs,
        /// τ in (0, ε); the optimizing τ of the achievability bound when omitted.
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
    /// ββ achievability, converse and normal approximation for the complex AWGN channel.
    AwgnRate {
        #[arg(long)]
        n: usize,
        #[arg(long, allow_hyphen_values = true)]
        snr_db: f64,
        #[arg(long)]
        eps: f64,
        /// Use the prescribed τ_n and α_n schedules instead of free optimization.
        #[arg(long)]
        schedule: bool,
    },
    /// Minimum energy per bit versus rate for k information bits.
    EbCurves {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        eps: f64,
        /// Smallest rate, bits per channel use.
        #[arg(long, default_value_t = 0.01)]
        r_min: f64,
        #[arg(long, default_value_t = 0.5)]
        r_max: f64,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long)]
        schedule: bool,
    },
    /// Exact ββ achievability and converse for the additive exponential-noise channel.
    ExpRate {
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long)]
        eps: f64,
        /// Blocklengths, comma separated.
        #[arg(long, value_delimiter = ',', default_values_t = [100usize, 1000, 10000])]
        n: Vec<usize>,
    },
    /// Capacity, dispersion, c and mmse of a real additive-noise channel with Gaussian input.
    Dispersion {
        /// gaussian[:sd], laplace[:scale], uniform[:half_width], student-t:nu or file:PATH.
        #[arg(long, default_value = "gaussian")]
        noise: String,
        #[arg(long)]
        power: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        /// Also report the second-order rate at this blocklength.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
    },
    /// Certified Monte-Carlo ββ lower bound for MIMO block fading with receiver CSI.
    MimoRate {
        #[arg(long, default_value_t = 4)]
        mt: usize,
        #[arg(long, default_value_t = 4)]
        mr: usize,
        #[arg(long, default_value_t = 4)]
        nc: usize,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        snr_db: f64,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        #[arg(long, default_value_t = 500)]
        n_max: usize,
        /// Blocklengths on a geometric grid from n_c to n_max, rounded to multiples of n_c.
        #[arg(long, default_value_t = 8)]
        points: usize,
        /// Explicit blocklengths, comma separated; overrides the grid.
        #[arg(long, value_delimiter = ',')]
        ns: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_CONFIDENCE)]
        confidence: f64,
        /// Channel draws for the reference normal approximation.
        #[arg(long, default_value_t = 200_000)]
        reference_samples: usize,
    },
    /// Randomized check of the Neyman–Pearson β properties.
    PropsCheck {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
}

enum Failure {
    Invalid(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Read a file when `arg` names one, otherwise parse it inline with `;` between rows.
fn source_text(arg: &str) -> Result<String, Failure> {
    if Path::new(arg).is_file() {
        Ok(std::fs::read_to_string(arg)?)
    } else {
        Ok(arg.replace(';', "\n").replace(',', " "))
    }
}

struct Discrete {
    channel: DiscreteChannel,
    px: DiscreteDist,
    qy: DiscreteDist,
}

fn load_discrete(a: &DiscreteArgs) -> Result<Discrete, Failure> {
    let channel = parse_channel(&source_text(&a.channel)?)?;
    let px = match &a.px {
        Some(s) => parse_dist(&source_text(s)?)?,
        None => DiscreteDist::uniform(channel.n_inputs()),
    };
    let qy = match &a.qy {
        Some(s) => parse_dist(&source_text(s)?)?,
        None => channel.output(&px)?,
    };
    if a.n == 0 {
        return Err(Failure::Invalid("n must be positive".into()));
    }
    Ok(Discrete { channel, px, qy })
}

fn bound_table(b: &BoundResult, unit: Unit, param: &str) -> Table {
    let u = unit.suffix();
    let mut names = vec![format!("log_m_{u}"), format!("rate_{u}_per_use"), "n".into(), param.into()];
    let mut row = vec![num(unit.from_nats(b.log_m)), num(unit.from_nats(b.rate)), Value::from(b.n), num(b.tau)];
    for (k, v) in &b.components {
        names.push(format!("{k}_nats"));
        row.push(num(*v));
    }
    let mut t = Table::new(names);
    t.push(row);
    t
}

fn run(cli: Cli) -> Outcome {
    let Common { format, unit, out, seed } = cli.common;
    let out = out.as_deref();
    let u = unit.suffix();
    let table = match cli.command {
        Command::DiscreteBb(a) => {
            let d = load_discrete(&a)?;
            let pair = BetaPair::memoryless(&d.channel, &d.px, &d.qy, a.n)?;
            bound_table(&pair.achievability(a.eps, &tau_grid(a.eps, a.grid))?, unit, "tau")
        }
        Command::DiscreteConverse(a) => {
            let d = load_discrete(&a)?;
            let pair = BetaPair::memoryless(&d.channel, &d.px, &d.qy, a.n)?;
            bound_table(&pair.converse(a.eps, &delta_grid(a.eps, a.grid))?, unit, "delta")
        }
        Command::VerifyCode { discrete: a, tau, trials } => {
            if a.n != 1 {
                return Err(Failure::Invalid("verify-code works on single channel uses (n = 1)".into()));
            }
            let d = load_discrete(&a)?;
            let tau = match tau {
                Some(t) => t,
                None => BetaPair::new(&d.channel, &d.px, &d.qy)?.achievability(a.eps, &tau_grid(a.eps, a.grid))?.tau.min(a.eps * 0.999),
            };
            let t = verify_code_existence(&d.channel, &d.px, &d.qy, a.eps, tau, trials, Seed(seed))?;
            let mut table =
                Table::new(["found", "m", "tau", "avg_error", "trials_used", "codewords", "decoder_llr_threshold_nats", "decoder_randomization"]);
            let cw: Vec<String> = t.codewords.iter().map(|c| c.to_string()).collect();
            table.push(vec![
                Value::from(t.found),
                Value::from(t.m),
                num(t.tau),
                num(t.avg_error),
                Value::from(t.trials_used),
                Value::from(cw.join(" ")),
                num(t.decoder.llr_threshold),
                num(t.decoder.randomization),
            ]);
            table
        }
        Command::AwgnRate { n, snr_db, eps, schedule } => {
            let spec = AwgnSpec::new(n, db_to_linear(snr_db), eps)?;
            let opts = if schedule { AwgnOptions::schedule() } else { AwgnOptions::default() };
            let ach = bb_rate_achievability(&spec, &opts)?;
            let conv = bb_rate_converse(&spec, &opts)?;
            let mut t = Table::new([
                "n".to_string(),
                "snr_dB".into(),
                "eps".into(),
                format!("achievability_{u}_per_use"),
                format!("converse_{u}_per_use"),
                format!("normal_approx_{u}_per_use"),
                format!("capacity_{u}_per_use"),
                "tau".into(),
                "delta".into(),
            ]);
            t.push(vec![
                Value::from(n),
                num(snr_db),
                num(eps),
                num(unit.from_nats(ach.rate)),
                num(unit.from_nats(conv.rate)),
                num(unit.from_nats(spec.normal_approx_rate())),
                num(unit.from_nats(spec.capacity())),
                num(ach.tau),
                num(conv.tau),
            ]);
            t
        }
        Command::EbCurves { k, eps, r_min, r_max, points, schedule } => {
            if !(r_min > 0.0 && r_max >= r_min) || points == 0 {
                return Err(Failure::Invalid("need 0 < r-min <= r-max and points >= 1".into()));
            }
            let rates = log_grid(r_min, r_max, points);
            let opts = if schedule { AwgnOptions::schedule() } else { AwgnOptions::default() };
            let rows = eb_curves(k, eps, &rates, &opts)?;
            let mut t = Table::new(["R_bits", "n", "eb_ach_dB", "eb_conv_dB", "eb_approx_dB"]);
            for r in rows {
                let cell = |x: &Result<betabeta::awgn::EbResult, String>| x.as_ref().map_or(Value::Null, |e| num(e.eb_db));
                t.push(vec![num(r.rate_bits), Value::from(r.n), cell(&r.achievability), cell(&r.converse), num(r.approximation.eb_db)]);
            }
            t
        }
        Command::ExpRate { sigma, eps, n } => {
            let rows = exp_table(sigma, eps, &n)?;
            let mut t = Table::new([
                "n".to_string(),
                format!("achievability_{u}_per_use"),
                format!("converse_{u}_per_use"),
                format!("normal_approx_{u}_per_use"),
                format!("capacity_{u}_per_use"),
            ]);
            for r in rows {
                t.push(vec![
                    Value::from(r.n),
                    num(unit.from_nats(r.rate_ach)),
                    num(unit.from_nats(r.rate_converse)),
                    num(unit.from_nats(r.rate_normal_approx)),
                    num(unit.from_nats(r.capacity)),
                ]);
            }
            t
        }
        Command::Dispersion { noise, power, samples, n, eps } => {
            let model = NoiseModel::parse(&noise)?;
            let r = dispersion(&model, power, samples, Seed(seed))?;
            let sq = |v: f64| unit.from_nats(unit.from_nats(v));
            let mut names = vec![
                "noise".to_string(),
                "power".into(),
                format!("capacity_{u}"),
                format!("dispersion_{u}2"),
                format!("mc_capacity_{u}"),
                format!("mc_dispersion_{u}2"),
                format!("mc_dispersion_std_err_{u}2"),
                "c".into(),
                "mmse".into(),
                "mc_mmse".into(),
            ];
            let mut row = vec![
                Value::from(r.noise.clone()),
                num(power),
                num(unit.from_nats(r.i)),
                num(sq(r.v)),
                num(unit.from_nats(r.mc.i)),
                num(sq(r.mc.v)),
                num(sq(r.mc.v_std_err)),
                num(r.c),
                num(r.mmse),
                num(r.mc.mmse),
            ];
            if let Some(n) = n {
                names.push(format!("rate_n{n}_{u}_per_use"));
                row.push(num(unit.from_nats(r.rate_second_order(n, eps)?)));
            }
            let mut t = Table::new(names);
            t.push(row);
            t
        }
        Command::MimoRate { mt, mr, nc, snr_db, eps, n_max, points, ns, samples, confidence, reference_samples } => {
            let base = MimoSpec::new(mt, mr, nc, 1, db_to_linear(snr_db), eps)?
                .with_samples(samples)
                .with_seed(Seed(seed))
                .with_confidence(confidence);
            let ns = if ns.is_empty() { mimo_grid(nc, n_max, points)? } else { ns };
            let curve = rate_curve(&base, &ns, reference_samples)?;
            let mut t = Table::new([
                "n".to_string(),
                format!("rate_{u}_lower"),
                format!("ci_radius_{u}"),
                format!("normal_approx_{u}"),
                format!("rate_{u}_point"),
                "tau".into(),
            ]);
            let conv = |bits: f64| unit.from_nats(bits * std::f64::consts::LN_2);
            for p in curve {
                t.push(vec![
                    Value::from(p.n),
                    num(conv(p.rate_bits_lower)),
                    num(conv(p.ci_radius_bits)),
                    num(conv(p.normal_approx_bits)),
                    num(conv(p.rate_bits_point)),
                    num(p.tau),
                ]);
            }
            t
        }
        Command::PropsCheck { trials } => {
            let report = run_suite(trials, Seed(seed))?;
            let mut t = Table::new(["property", "trials", "violations", "min_slack"]);
            for p in &report.properties {
                t.push(vec![Value::from(p.name.clone()), Value::from(p.trials), Value::from(p.violations), num(p.min_slack)]);
            }
            t.emit(format, out)?;
            if !report.all_hold() {
                return Err(Failure::Numerical("property violations found".into()));
            }
            return Ok(());
        }
    };
    table.emit(format, out)?;
    Ok(())
}

/// Geometric grid of multiples of `nc` in `[nc, n_max]`.
fn mimo_grid(nc: usize, n_max: usize, points: usize) -> Result<Vec<usize>, Failure> {
    if n_max < nc || points == 0 {
        return Err(Failure::Invalid("need n-max >= nc and points >= 1".into()));
    }
    let (lo, hi) = (1.0, (n_max / nc) as f64);
    let mut ls: Vec<usize> =
        log_grid(lo, hi.max(lo), points).into_iter().map(|l| (l.round() as usize).clamp(1, n_max / nc)).collect();
    ls.dedup();
    Ok(ls.into_iter().map(|l| l * nc).collect())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            ExitCode::from(2)
        }
    }
}
