use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use geoconsensus::harness::config::{Algorithm, ExperimentConfig};
use geoconsensus::harness::experiment::{prepare_sweep, run_prepared, run_sweep};
use geoconsensus::harness::output::{fmt_g, write_csv};
use geoconsensus::network::validate;
use geoconsensus::Error;

const OUT_DIR_ENV: &str = "GEOCONSENSUS_OUT_DIR";

#[derive(Parser)]
#[command(name = "geoconsensus", version, about = "Decentralized online optimization on curved manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its regret trace as CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// key=value, may be repeated
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Check a configuration without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run one experiment per value of a parameter, e.g. `--param s=0.6,0.8,1.0`.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Print the derived constants of a configuration.
    Constants {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
}

enum Failure {
    Rejected(Error),
    Runtime(Error),
}

fn load(path: &Path, overrides: &[String], seed: Option<u64>) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::load(path).map_err(Failure::Rejected)?;
    cfg.apply_overrides(overrides).map_err(Failure::Rejected)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn output_path(explicit: Option<PathBuf>, cfg: &ExperimentConfig, config_path: &Path) -> PathBuf {
    let path = explicit.or_else(|| cfg.output.clone()).unwrap_or_else(|| {
        let stem = config_path.file_stem().map(|s| s.to_string_lossy().into_owned());
        PathBuf::from(format!("{}.csv", stem.unwrap_or_else(|| "trace".into())))
    });
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if path.is_relative() => PathBuf::from(dir).join(path),
        _ => path,
    }
}

fn sweep_path(base: &Path, key: &str, value: &str) -> PathBuf {
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = base.extension().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    base.with_file_name(format!("{stem}_{key}{value}.{ext}"))
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run {
            config,
            seed,
            out,
            overrides,
        } => {
            let cfg = load(&config, &overrides, seed)?;
            let prep = cfg.prepare().map_err(Failure::Rejected)?;
            let trace = run_prepared(&prep).map_err(Failure::Runtime)?;
            let path = output_path(out, &cfg, &config);
            write_csv(&trace, &path).map_err(Failure::Runtime)?;
            let last = trace.rows.last().map_or(0.0, |r| r.cum_regret);
            println!("wrote {} (T = {}, cum_regret = {})", path.display(), trace.rows.len(), fmt_g(last));
        }
        Command::Validate { config, overrides } => {
            let cfg = load(&config, &overrides, None)?;
            let prep = cfg.prepare().map_err(Failure::Rejected)?;
            let report = validate(&prep.weights);
            println!("network: symmetric, doubly stochastic, nonnegative, connected (sigma2 = {})", fmt_g(report.sigma2));
            println!(
                "curvature: K in [{}, {}], D = {}",
                fmt_g(prep.context.k_min),
                fmt_g(prep.context.k_max),
                fmt_g(prep.context.diameter)
            );
            println!("loss: squared distance, L = {}", fmt_g(prep.lipschitz));
            let sch = &prep.schedule;
            if cfg.algorithm == Algorithm::Bandit {
                println!("schedule: s = {}, delta = {}, tau = {}", fmt_g(sch.s), fmt_g(sch.delta), fmt_g(sch.tau));
            } else {
                println!("schedule: s = {}", fmt_g(sch.s));
            }
            println!("ok");
        }
        Command::Sweep {
            config,
            param,
            seed,
            out,
            overrides,
        } => {
            let cfg = load(&config, &overrides, seed)?;
            let (key, values) = param.split_once('=').ok_or_else(|| {
                Failure::Rejected(Error::Parse(format!("--param {param:?} is not key=v1,v2,...")))
            })?;
            let values: Vec<String> = values.split(',').map(|v| v.trim().to_string()).collect();
            let points = prepare_sweep(&cfg, key.trim(), &values).map_err(Failure::Rejected)?;
            let traces = run_sweep(&points).map_err(Failure::Runtime)?;
            let base = output_path(out, &cfg, &config);
            for (v, trace) in values.iter().zip(&traces) {
                let path = sweep_path(&base, key.trim(), v);
                write_csv(trace, &path).map_err(Failure::Runtime)?;
                let last = trace.rows.last().map_or(0.0, |r| r.cum_regret);
                println!("{key}={v}: wrote {} (cum_regret = {})", path.display(), fmt_g(last));
            }
        }
        Command::Constants { config, overrides } => {
            let cfg = load(&config, &overrides, None)?;
            let prep = cfg.prepare().map_err(Failure::Rejected)?;
            println!("sigma2 = {}", fmt_g(prep.sigma2));
            for (k, v) in prep.constants.entries() {
                println!("{k} = {}", fmt_g(v));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Rejected(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
