//! The experiment runner behind the `fewbits` binary.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{ProtocolConfig, ProtocolKind};
use crate::dist::{InstanceFamily, InstanceSpec, TwoPointSide};
use crate::error::{Error, Result};
use crate::harness::report::{write_outputs, CsvRow, RunManifest};
use crate::harness::runfile::RunFile;
use crate::harness::{
    budget_audit, default_worst_case_family, estimate_risk, scaling_slope, worst_case_risk, Sweep,
    SweepParam,
};
use crate::protocol::run_protocol;
use crate::randomness::SharedRandomness;
use crate::rates::{classify_regime, lower_bound, Budget};
use crate::sampling::sample;

#[derive(Debug, Parser)]
#[command(name = "fewbits", about = "Distributed distribution estimation under bit budgets")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte Carlo risk of one protocol on one instance.
    Risk(RunArgs),
    /// Sweep one parameter and fit the log-log scaling slope.
    Sweep(SweepArgs),
    /// Search a family of instances for the worst mean loss.
    Worst(RunArgs),
    /// Run a protocol once and audit the transcript's budget.
    Audit(RunArgs),
    /// Predicted regime and reference rates for a parameter point.
    Rates(RatesArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// TOML file with the same keys; explicit flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    protocol: Option<String>,
    /// Instance family: uniform | zipf[:a] | sparse:s | point | dirichlet[:seed]
    /// | two-point:eps:side | two-point:auto:side. `worst` accepts a comma
    /// list or `default`.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "const-scale")]
    const_scale: Option<f64>,
    /// CSV output path; the JSON manifest lands at `<out>.manifest.json`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Which parameter the grid varies: m | n | k | l.
    #[arg(long)]
    param: String,
    /// Comma-separated grid values, strictly increasing.
    #[arg(long, value_delimiter = ',', required = true)]
    grid: Vec<usize>,
    /// Use 2^l as the abscissa (only with --param l).
    #[arg(long)]
    pow2_x: bool,
}

#[derive(Debug, Args)]
struct RatesArgs {
    #[arg(long)]
    m: u64,
    #[arg(long)]
    n: u64,
    #[arg(long)]
    k: u64,
    /// Bits per message, or `inf`.
    #[arg(long)]
    l: String,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
}

struct Resolved {
    cfg: ProtocolConfig,
    family: Option<String>,
    trials: usize,
    seed: u64,
    out: Option<PathBuf>,
}

fn resolve(args: &RunArgs) -> Result<Resolved> {
    let file = match &args.config {
        Some(path) => RunFile::load(path)?,
        None => RunFile::default(),
    };
    let need = |flag: &str, v: Option<usize>| {
        v.ok_or_else(|| Error::Config(format!("missing required parameter --{flag}")))
    };
    let m = need("m", args.m.or(file.m))?;
    let n = need("n", args.n.or(file.n))?;
    let k = need("k", args.k.or(file.k))?;
    let l = need("l", args.l.or(file.l))?;
    let p = args.p.or(file.p).unwrap_or(2.0);
    let protocol: ProtocolKind = args
        .protocol
        .clone()
        .or(file.protocol)
        .ok_or_else(|| Error::Config("missing required parameter --protocol".into()))?
        .parse()?;
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let cfg = ProtocolConfig::new(m, n, k, l, p, protocol)
        .with_seed(seed)
        .with_const_scale(args.const_scale.or(file.const_scale).unwrap_or(1.0));
    cfg.validate()?;
    Ok(Resolved {
        cfg,
        family: args.family.clone().or(file.family),
        trials: args.trials.or(file.trials).unwrap_or(400),
        seed,
        out: args.out.clone().or(file.out),
    })
}

impl Resolved {
    /// The single instance for risk/sweep/audit runs; defaults to uniform.
    fn instance(&self) -> Result<InstanceSpec> {
        let token = self.family.as_deref().unwrap_or("uniform");
        parse_family(token, self.cfg.k, self.cfg.m, self.cfg.n, self.seed)
    }
}

/// Parse one instance token against the run's dimensions.
fn parse_family(token: &str, k: usize, m: usize, n: usize, seed: u64) -> Result<InstanceSpec> {
    let parts: Vec<&str> = token.split(':').collect();
    let family = match parts.as_slice() {
        ["uniform"] => InstanceFamily::Uniform,
        ["zipf"] => InstanceFamily::Zipf { alpha: 1.0 },
        ["zipf", a] => InstanceFamily::Zipf {
            alpha: a
                .parse()
                .map_err(|_| Error::Config(format!("bad zipf exponent '{a}'")))?,
        },
        ["point"] => InstanceFamily::Sparse { s: 1 },
        ["sparse", s] => InstanceFamily::Sparse {
            s: s.parse()
                .map_err(|_| Error::Config(format!("bad sparse support '{s}'")))?,
        },
        ["dirichlet"] => InstanceFamily::Dirichlet,
        ["dirichlet", s] => {
            let seed = s
                .parse()
                .map_err(|_| Error::Config(format!("bad dirichlet seed '{s}'")))?;
            return Ok(InstanceSpec::new(InstanceFamily::Dirichlet, k, seed));
        }
        ["two-point", eps, side] => {
            let epsilon = if *eps == "auto" {
                1.0 / (100.0 * m as f64 * n as f64).sqrt()
            } else {
                eps.parse()
                    .map_err(|_| Error::Config(format!("bad epsilon '{eps}'")))?
            };
            let side = match *side {
                "1" => TwoPointSide::First,
                "2" => TwoPointSide::Second,
                other => return Err(Error::Config(format!("bad two-point side '{other}'"))),
            };
            InstanceFamily::TwoPoint { epsilon, side }
        }
        _ => return Err(Error::Config(format!("unknown family '{token}'"))),
    };
    Ok(InstanceSpec::new(family, k, seed))
}

fn predicted(cfg: &ProtocolConfig) -> (f64, String) {
    let pred = classify_regime(
        cfg.m as u64,
        cfg.n as u64,
        cfg.k as u64,
        Budget::Bits(cfg.l as u64),
        cfg.p,
    );
    (pred.upper_rate, pred.regime.to_string())
}

pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Risk(args) => cmd_risk(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Worst(args) => cmd_worst(&args),
        Command::Audit(args) => cmd_audit(&args),
        Command::Rates(args) => cmd_rates(&args),
    }
}

fn cmd_risk(args: &RunArgs) -> Result<String> {
    let r = resolve(args)?;
    let instance = r.instance()?;
    let report = estimate_risk(&r.cfg, &instance, r.trials, r.seed)?;
    let (rate, regime) = predicted(&r.cfg);
    let rows = vec![CsvRow {
        param_value: r.cfg.m as f64,
        mean_loss: report.mean_loss,
        std_error: report.std_error,
        predicted_rate: rate,
        regime: regime.clone(),
    }];
    let mut text = format!(
        "risk {} on {}: mean_loss={} std_error={} trials={} budget_ok={} regime={} predicted_rate={}\n",
        r.cfg.protocol,
        report.instance,
        report.mean_loss,
        report.std_error,
        report.trials,
        report.budget_ok,
        regime,
        rate,
    );
    if let Some(out) = &r.out {
        let manifest = RunManifest::new("risk", r.cfg, vec![report.instance.clone()], r.trials, r.seed);
        let manifest_path = write_outputs(out, &rows, manifest)?;
        let _ = writeln!(text, "wrote {} and {}", out.display(), manifest_path.display());
    }
    Ok(text)
}

fn cmd_sweep(args: &SweepArgs) -> Result<String> {
    let r = resolve(&args.run)?;
    let param = match args.param.as_str() {
        "m" => SweepParam::M,
        "n" => SweepParam::N,
        "k" => SweepParam::K,
        "l" => SweepParam::L,
        other => return Err(Error::Config(format!("unknown sweep parameter '{other}'"))),
    };
    if args.pow2_x && param != SweepParam::L {
        return Err(Error::Config("--pow2-x only applies to --param l".into()));
    }
    let sweep = if args.pow2_x {
        Sweep::BucketCount {
            l_values: args.grid.clone(),
        }
    } else {
        Sweep::Parameter {
            param,
            values: args.grid.clone(),
        }
    };
    let instance = r.instance()?;
    let fit = scaling_slope(&r.cfg, instance.family, &sweep, r.trials, r.seed)?;
    let rows: Vec<CsvRow> = fit
        .xs
        .iter()
        .zip(&fit.reports)
        .map(|(&x, report)| {
            let (rate, regime) = predicted(&report.config);
            CsvRow {
                param_value: x,
                mean_loss: report.mean_loss,
                std_error: report.std_error,
                predicted_rate: rate,
                regime,
            }
        })
        .collect();
    let mut text = format!(
        "sweep {} over {}: slope={} stderr={} regime={}\n",
        r.cfg.protocol, fit.param, fit.slope, fit.slope_stderr, fit.regime
    );
    for row in &rows {
        let _ = writeln!(
            text,
            "  {}={}: mean_loss={} std_error={} predicted_rate={}",
            fit.param, row.param_value, row.mean_loss, row.std_error, row.predicted_rate
        );
    }
    if let Some(out) = &r.out {
        let mut manifest = RunManifest::new(
            "sweep",
            r.cfg,
            fit.reports.iter().map(|rep| rep.instance.clone()).collect(),
            r.trials,
            r.seed,
        );
        manifest.sweep = Some(format!("{} in {:?}", fit.param, args.grid));
        manifest.slope = Some(fit.slope);
        manifest.slope_stderr = Some(fit.slope_stderr);
        let manifest_path = write_outputs(out, &rows, manifest)?;
        let _ = writeln!(text, "wrote {} and {}", out.display(), manifest_path.display());
    }
    Ok(text)
}

fn cmd_worst(args: &RunArgs) -> Result<String> {
    let r = resolve(args)?;
    let family: Vec<InstanceSpec> = match r.family.as_deref() {
        None | Some("default") => default_worst_case_family(r.cfg.k, r.cfg.m, r.cfg.n),
        Some(list) => list
            .split(',')
            .map(|token| parse_family(token.trim(), r.cfg.k, r.cfg.m, r.cfg.n, r.seed))
            .collect::<Result<_>>()?,
    };
    let (worst, report) = worst_case_risk(&r.cfg, &family, r.trials, r.seed)?;
    let (rate, regime) = predicted(&r.cfg);
    let mut text = format!(
        "worst case for {} over {} instances: {} mean_loss={} std_error={}\n",
        r.cfg.protocol,
        family.len(),
        report.instance,
        report.mean_loss,
        report.std_error
    );
    if let Some(out) = &r.out {
        let rows: Vec<CsvRow> = family
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let rep = estimate_risk(&r.cfg, spec, r.trials, r.seed)?;
                Ok(CsvRow {
                    param_value: i as f64,
                    mean_loss: rep.mean_loss,
                    std_error: rep.std_error,
                    predicted_rate: rate,
                    regime: regime.clone(),
                })
            })
            .collect::<Result<_>>()?;
        let mut manifest = RunManifest::new(
            "worst",
            r.cfg,
            family.iter().map(ToString::to_string).collect(),
            r.trials,
            r.seed,
        );
        manifest.sweep = Some(format!("worst instance: {worst}"));
        let manifest_path = write_outputs(out, &rows, manifest)?;
        let _ = writeln!(text, "wrote {} and {}", out.display(), manifest_path.display());
    }
    Ok(text)
}

fn cmd_audit(args: &RunArgs) -> Result<String> {
    let r = resolve(args)?;
    let instance = r.instance()?;
    let truth = instance.realize()?;
    let shared = SharedRandomness::new(r.seed);
    let samples = sample(&truth, r.cfg.m, r.cfg.n, &mut shared.stream("samples"));
    let out = run_protocol(&r.cfg, &samples, &shared)?;
    let audit = budget_audit(&out.transcript, &r.cfg);
    let mut text = format!(
        "audit {}: {} ({} messages, {} bits total)\n",
        r.cfg.protocol,
        if audit.pass { "pass" } else { "FAIL" },
        out.transcript.len(),
        audit.total_bits
    );
    for v in &audit.violations {
        let _ = writeln!(text, "  violation: {v}");
    }
    Ok(text)
}

fn cmd_rates(args: &RatesArgs) -> Result<String> {
    let l: Budget = args.l.parse()?;
    let pred = classify_regime(args.m, args.n, args.k, l, args.p);
    let lb = lower_bound(args.m, args.n, args.k, l, args.p);
    Ok(format!(
        "regime={} upper_rate={} lower_rate={} reference_lower_bound={}\nnotes: {}\n",
        pred.regime, pred.upper_rate, pred.lower_rate, lb, pred.notes
    ))
}
