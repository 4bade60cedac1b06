//! `hypansatz`: certification sweeps, single-point evaluation and oracle
//! cross-checks for conformally rescaled hyperbolic-ansatz metrics.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 when the
//! request itself is invalid. Nothing is written on exit 2.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use hypansatz::ansatz::Configuration;
use hypansatz::certify::{parse_checks, run_certify, run_oracle, SweepSpec, ORACLE_TOL};
use hypansatz::curvature::evaluate;
use hypansatz::hyperbolic3::HPoint;

/// Flat-chart comparisons are exact up to finite-difference roundoff.
const FLAT_TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "hypansatz", version, about = "Curvature certificates for hyperbolic-ansatz metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep a region around the centers and check curvature conditions.
    Certify {
        /// Configuration as a JSON file path or an inline JSON object.
        #[arg(long)]
        config: String,
        #[arg(long, default_value_t = 8.0)]
        rmax: f64,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        /// Radii per center; each sphere carries grid² directions.
        #[arg(long, default_value_t = 12)]
        grid: usize,
        /// Comma-separated: positivity, strong, ric-operator, mu-bound, cluster, oracle, orbifold.
        #[arg(long, default_value = "positivity,strong")]
        checks: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Report path; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        /// Relative cluster size bound for the cluster check.
        #[arg(long, default_value_t = 0.05)]
        cluster_eps: f64,
        #[arg(long, default_value_t = 10_000)]
        cluster_samples: usize,
        #[arg(long, default_value_t = 100)]
        oracle_samples: usize,
        #[arg(long, default_value_t = 1e-3)]
        oracle_step: f64,
    },
    /// Compare the closed-form curvature against finite differences of the explicit metric.
    Oracle {
        /// Axisymmetric configuration; omit together with --flat.
        #[arg(long, required_unless_present = "flat")]
        config: Option<String>,
        /// Run on the flat metric instead.
        #[arg(long, conflicts_with = "config")]
        flat: bool,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate curvature at one point.
    Eval {
        #[arg(long)]
        config: String,
        /// Point as x,y,z with z > 0.
        #[arg(long)]
        point: String,
    },
}

fn load_config(src: &str) -> anyhow::Result<Configuration> {
    let text = if src.trim_start().starts_with('{') {
        src.to_string()
    } else {
        fs::read_to_string(src).with_context(|| format!("reading configuration file {src}"))?
    };
    Configuration::from_json(&text).context("parsing configuration")
}

fn parse_point(s: &str) -> anyhow::Result<HPoint> {
    let v: Vec<f64> = s
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .with_context(|| format!("point '{s}' is not a list of numbers"))?;
    let [x, y, z] = v[..] else { bail!("point '{s}' needs three coordinates") };
    Ok(HPoint::new(x, y, z)?)
}

fn emit(out: Option<&Path>, body: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => fs::write(path, body).with_context(|| format!("writing {}", path.display())),
        None => {
            println!("{}", body.trim_end_matches('\n'));
            Ok(())
        }
    }
}

/// Runs a command; `Ok(false)` means a check failed.
fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Certify {
            config,
            rmax,
            eps,
            grid,
            checks,
            seed,
            out,
            format,
            cluster_eps,
            cluster_samples,
            oracle_samples,
            oracle_step,
        } => {
            let spec = SweepSpec {
                config: load_config(&config)?,
                rmax,
                eps,
                grid,
                checks: parse_checks(&checks)?,
                seed,
                cluster_eps,
                cluster_samples,
                oracle_samples,
                oracle_step,
            };
            let report = run_certify(&spec)?;
            let body = match format {
                Format::Json => report.to_json()?,
                Format::Csv => report.to_csv(),
            };
            emit(out.as_deref(), &body)?;
            for c in &report.checks {
                eprintln!(
                    "{:<13} {} evaluated={} min={:.6e} failures={}",
                    c.check.name(),
                    if c.passed { "PASS" } else { "FAIL" },
                    c.evaluated,
                    c.min,
                    c.failures
                );
            }
            Ok(report.passed)
        }
        Command::Oracle { config, flat, samples, step, seed, out } => {
            let cfg = if flat { None } else { config.as_deref().map(load_config).transpose()? };
            let report = run_oracle(cfg.as_ref(), samples, step, seed)?;
            emit(out.as_deref(), &serde_json::to_string_pretty(&report)?)?;
            let passed = if flat {
                report.max_ricci_rel_error < FLAT_TOL
            } else {
                report.max_ricci_rel_error < ORACLE_TOL && report.max_selfduality_residual < ORACLE_TOL
            };
            eprintln!(
                "oracle {} ricci_rel_error={:.3e} selfduality_residual={:.3e}",
                if passed { "PASS" } else { "FAIL" },
                report.max_ricci_rel_error,
                report.max_selfduality_residual
            );
            Ok(passed)
        }
        Command::Eval { config, point } => {
            let cfg = load_config(&config)?;
            let p = parse_point(&point)?;
            let pc = evaluate(&cfg, &p)?;
            println!("{}", serde_json::to_string_pretty(&pc.report)?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
