use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use zoclip::optimizers::{BatchPolicy, RestartProblem};
use zoclip::{restart_schedule, theoretical_params_convex, RestartSchedule};
use zoclip_bench::{run_experiment, run_grid, run_suites, BenchError, ParamMode, RunConfig, Suite, SuiteOptions};

/// Worker threads; defaults to the number of cores.
const WORKERS_ENV: &str = "ZOCLIP_WORKERS";

#[derive(Parser)]
#[command(name = "zoclip", version, about = "Zeroth-order clipped optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Overrides {
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    n_seeds: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every method of a config over its seeds.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Sweep the config's grid and write a ranked table.
    Grid {
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run the statistical check suites and print a JSON report.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
    },
    /// Print the parameters of the convex method, or the restart schedule
    /// when `--mu` is given.
    Params {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 0.01)]
        beta: f64,
        #[arg(long)]
        radius: f64,
        #[arg(long)]
        m2: f64,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long)]
        batch: Option<u64>,
        #[arg(long)]
        iterations: Option<u64>,
        #[arg(long)]
        gamma: Option<f64>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum Mode {
    Theoretical,
    Practical,
}

impl From<Mode> for ParamMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Theoretical => ParamMode::Theoretical,
            Mode::Practical => ParamMode::Practical,
        }
    }
}

fn load(path: &PathBuf, o: Overrides) -> Result<RunConfig, BenchError> {
    let mut cfg = RunConfig::load(path)?;
    if let Some(v) = o.budget {
        cfg.budget = v;
    }
    if let Some(v) = o.n_seeds {
        cfg.n_seeds = v;
    }
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = o.output_dir {
        cfg.output_dir = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn config_err(e: impl std::fmt::Display) -> BenchError {
    BenchError::Config(e.to_string())
}

#[allow(clippy::too_many_arguments)]
fn params(
    mode: ParamMode,
    eps: f64,
    beta: f64,
    radius: f64,
    m2: f64,
    d: usize,
    alpha: f64,
    mu: Option<f64>,
    batch: Option<u64>,
    iterations: Option<u64>,
    gamma: Option<f64>,
) -> Result<serde_json::Value, BenchError> {
    let need = |v: Option<u64>, name: &str| v.ok_or_else(|| config_err(format!("--{name} is required here")));
    let value = match (mu, mode) {
        (Some(mu), _) => {
            let problem = RestartProblem { mu, radius, eps, m2, d, alpha, beta };
            let schedule = match mode {
                ParamMode::Theoretical => {
                    restart_schedule(problem, batch.map_or(BatchPolicy::Cap, BatchPolicy::Fixed))?
                }
                ParamMode::Practical => RestartSchedule::practical(
                    problem,
                    need(iterations, "iterations")?,
                    need(batch, "batch")?,
                    gamma.ok_or_else(|| config_err("--gamma is required in practical mode"))?,
                )?,
            };
            serde_json::to_value(schedule)
        }
        (None, mode) => {
            let mut p = theoretical_params_convex(eps, beta, radius, m2, d, alpha, need(batch, "batch")?, need(iterations, "iterations")?)?;
            if mode == ParamMode::Practical {
                let g = gamma.ok_or_else(|| config_err("--gamma is required in practical mode"))?;
                p.a = 1.0 / (g * p.smoothness);
            }
            let first_lambda = p.lambda(0);
            let last_lambda = p.lambda(p.iterations - 1);
            serde_json::to_value(json!({ "params": p, "lambda_first": first_lambda, "lambda_last": last_lambda }))
        }
    };
    Ok(value.expect("parameters serialize"))
}

fn dispatch(cmd: Command) -> Result<ExitCode, BenchError> {
    match cmd {
        Command::Run { config, overrides } => {
            let cfg = load(&config, overrides)?;
            let result = run_experiment(&cfg)?;
            for s in &result.summaries {
                println!(
                    "{}: initial gap {:?}, final mean gap {:?}, {}/{} diverged, {} truncated",
                    s.method, s.initial_gap, s.final_mean_gap, s.diverged, s.runs, s.truncated
                );
            }
            println!("wrote {}", cfg.output_dir.display());
        }
        Command::Grid { config, overrides } => {
            let cfg = load(&config, overrides)?;
            let cells = run_grid(&cfg)?;
            for c in &cells {
                println!(
                    "{} B={:?} gamma={:?} lambda={:?}: final mean gap {:?} ({}/{} diverged)",
                    c.method, c.batch, c.gamma, c.lambda, c.final_mean_gap, c.diverged, c.runs
                );
            }
        }
        Command::Verify { suite, seed, trials, samples } => {
            let checks = run_suites(suite, &SuiteOptions { seed, trials, samples })?;
            let passed = checks.iter().all(|c| c.passed);
            let report = json!({ "passed": passed, "checks": checks });
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            if !passed {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Params { mode, eps, beta, radius, m2, d, alpha, mu, batch, iterations, gamma } => {
            let v = params(mode.into(), eps, beta, radius, m2, d, alpha, mu, batch, iterations, gamma)?;
            println!("{}", serde_json::to_string_pretty(&v).expect("json"));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    if let Ok(n) = std::env::var(WORKERS_ENV) {
        match n.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: {WORKERS_ENV} must be a positive integer, got {n:?}");
                return ExitCode::from(1);
            }
        }
    }
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let BenchError::AllDiverged { table } = &e {
                eprintln!("{table}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
