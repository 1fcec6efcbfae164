use std::fs;
use std::io::Write;
use std::path::Path;

use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use zoclip::optimizers::{BatchPolicy, RestartProblem};
use zoclip::{
    r_zo_clipped_sstm, restart_schedule, zo_clipped_sstm, zo_sgd, ClipPolicy, RestartConfig,
    RestartSchedule, RngState, SgdConfig, SstmConfig, StochasticOracle, Trace, ZoError,
};

use crate::config::{MethodConfig, ParamMode, RunConfig};
use crate::error::BenchError;
use crate::plot::write_svg;

/// Number of checkpoints of the aggregate curves.
pub const CHECKPOINTS: usize = 64;

/// Result of one (method, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub method: String,
    pub seed_index: u64,
    pub trace: Trace,
    pub diverged: bool,
    /// The budget cut the requested iterations short.
    pub truncated: bool,
}

/// Gap statistics across seeds at shared oracle-call checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateCurve {
    pub method: String,
    pub runs: usize,
    pub diverged: usize,
    pub checkpoints: Vec<u64>,
    /// Over non-diverged runs; `NaN` when every run diverged.
    pub mean: Vec<f64>,
    pub median: Vec<f64>,
    pub q10: Vec<f64>,
    pub q90: Vec<f64>,
}

impl AggregateCurve {
    pub fn final_mean(&self) -> f64 {
        self.mean.last().copied().unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub runs: usize,
    pub diverged: usize,
    pub truncated: usize,
    pub initial_gap: Option<f64>,
    /// Mean over non-diverged runs of the gap at budget end.
    pub final_mean_gap: Option<f64>,
    pub final_median_gap: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub runs: Vec<SeedRun>,
    pub curves: Vec<AggregateCurve>,
    pub summaries: Vec<MethodSummary>,
}

impl ExperimentResult {
    pub fn summary(&self, method: &str) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    pub fn all_diverged(&self) -> bool {
        self.runs.iter().all(|r| r.diverged)
    }
}

fn capped(requested: Option<u64>, budget: u64, per_iter: u64) -> (u64, bool) {
    let affordable = budget / per_iter;
    match requested {
        Some(r) if r <= affordable => (r, false),
        Some(_) => (affordable, true),
        None => (affordable, affordable == 0),
    }
}

fn initial_only(oracle: &dyn StochasticOracle<f64>, x0: &Array1<f64>) -> Trace {
    Trace {
        records: vec![zoclip::TraceRecord {
            k: 0,
            oracle_calls: 0,
            gap: oracle.gap(x0.view()),
            dist_to_opt: oracle.dist_to_opt(x0.view()),
            elapsed_s: 0.0,
        }],
        diverged: false,
    }
}

/// Runs one method with noise stream `rng`, within `budget` oracle calls.
pub fn run_method(
    oracle: &dyn StochasticOracle<f64>,
    method: &MethodConfig,
    x0: &Array1<f64>,
    budget: u64,
    record_wall_time: bool,
    rng: &RngState,
) -> Result<(Trace, bool, bool), BenchError> {
    let outcome = |r: zoclip::Result<Trace>, truncated: bool| match r {
        Ok(t) => Ok((t, false, truncated)),
        Err(ZoError::Diverged { trace, .. }) => Ok((*trace, true, truncated)),
        Err(e) => Err(BenchError::from(e)),
    };
    match method {
        MethodConfig::ZoClippedSstm { batch, gamma, a, smoothness, tau, clip, iterations, .. } => {
            run_sstm(oracle, x0, *batch, *gamma, *a, *smoothness, *tau, clip.clone(), *iterations, budget, record_wall_time, rng, &outcome)
        }
        MethodConfig::ZoSstm { batch, gamma, a, smoothness, tau, iterations, .. } => {
            run_sstm(oracle, x0, *batch, *gamma, *a, *smoothness, *tau, ClipPolicy::Unclipped, *iterations, budget, record_wall_time, rng, &outcome)
        }
        MethodConfig::ZoSgd { batch, gamma, omega, tau, iterations, .. } => {
            let (k, truncated) = capped(*iterations, budget, 2 * *batch as u64);
            if k == 0 {
                return Ok((initial_only(oracle, x0), false, true));
            }
            let cfg = SgdConfig { record_wall_time, ..SgdConfig::new(x0.clone(), k, *batch, *gamma, *omega, *tau) };
            outcome(zo_sgd(oracle, &cfg, rng).map(|(_, t)| t), truncated)
        }
        MethodConfig::RZoClippedSstm { mode, radius, eps, m2, beta, mu, iterations, batch, gamma, .. } => {
            let mu = match mu {
                Some(m) => *m,
                None => oracle.meta().mu,
            };
            let problem = RestartProblem {
                mu,
                radius: *radius,
                eps: *eps,
                m2: *m2,
                d: oracle.dim(),
                alpha: oracle.meta().alpha,
                beta: *beta,
            };
            let mut schedule = match mode {
                ParamMode::Theoretical => restart_schedule(problem, BatchPolicy::Cap)?,
                ParamMode::Practical => RestartSchedule::practical(
                    problem,
                    iterations.expect("validated"),
                    batch.expect("validated"),
                    gamma.expect("validated"),
                )?,
            };
            let n = schedule.stages.len() as u64;
            if n == 0 {
                return Ok((initial_only(oracle, x0), false, false));
            }
            let mut truncated = false;
            for st in &mut schedule.stages {
                let (k, cut) = capped(Some(st.iterations), budget / n, 2 * st.batch);
                truncated |= cut;
                st.iterations = k;
            }
            if schedule.stages.iter().any(|st| st.iterations == 0) {
                return Ok((initial_only(oracle, x0), false, true));
            }
            let cfg = RestartConfig { x0: x0.clone(), schedule, record_wall_time };
            outcome(r_zo_clipped_sstm(oracle, &cfg, rng).map(|r| r.trace), truncated)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn run_sstm(
    oracle: &dyn StochasticOracle<f64>,
    x0: &Array1<f64>,
    batch: usize,
    gamma: Option<f64>,
    a: Option<f64>,
    smoothness: Option<f64>,
    tau: f64,
    clip: ClipPolicy,
    iterations: Option<u64>,
    budget: u64,
    record_wall_time: bool,
    rng: &RngState,
    outcome: &dyn Fn(zoclip::Result<Trace>, bool) -> Result<(Trace, bool, bool), BenchError>,
) -> Result<(Trace, bool, bool), BenchError> {
    let (k, truncated) = capped(iterations, budget, 2 * batch as u64);
    if k == 0 {
        return Ok((initial_only(oracle, x0), false, true));
    }
    let mut cfg = match (gamma, a, smoothness) {
        (Some(g), _, _) => SstmConfig::practical(x0.clone(), k, batch, g, tau, clip),
        (None, Some(a), Some(l)) => SstmConfig {
            x0: x0.clone(),
            iterations: k,
            batch,
            a,
            smoothness: l,
            tau,
            clip,
            record_wall_time,
        },
        _ => return Err(BenchError::Config("missing stepsize".into())),
    };
    cfg.record_wall_time = record_wall_time;
    outcome(zo_clipped_sstm(oracle, &cfg, rng).map(|(_, t)| t), truncated)
}

/// `count` log-spaced oracle-call checkpoints from `first` to `last`.
pub fn checkpoint_grid(first: u64, last: u64, count: usize) -> Vec<u64> {
    let first = first.max(1).min(last.max(1));
    let last = last.max(first);
    let (lo, hi) = ((first as f64).ln(), (last as f64).ln());
    let mut out: Vec<u64> = (0..count)
        .map(|i| {
            let t = if count > 1 { i as f64 / (count - 1) as f64 } else { 1.0 };
            (lo + t * (hi - lo)).exp().round() as u64
        })
        .collect();
    *out.last_mut().expect("nonempty") = last;
    out.dedup();
    out
}

/// Gap of `trace` after `calls` oracle calls: the last record at or before it.
pub fn gap_at(trace: &Trace, calls: u64) -> Option<f64> {
    trace.records.iter().take_while(|r| r.oracle_calls <= calls).last().and_then(|r| r.gap)
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (i, frac) = (pos.floor() as usize, pos.fract());
    if i + 1 < sorted.len() {
        sorted[i] * (1.0 - frac) + sorted[i + 1] * frac
    } else {
        sorted[i]
    }
}

/// Mean, median and 10%/90% quantiles of the gap across the non-diverged
/// runs of one method.
pub fn aggregate(method: &str, runs: &[&SeedRun], checkpoints: &[u64]) -> AggregateCurve {
    let alive: Vec<&&SeedRun> = runs.iter().filter(|r| !r.diverged).collect();
    let mut curve = AggregateCurve {
        method: method.to_string(),
        runs: runs.len(),
        diverged: runs.len() - alive.len(),
        checkpoints: checkpoints.to_vec(),
        mean: Vec::with_capacity(checkpoints.len()),
        median: Vec::with_capacity(checkpoints.len()),
        q10: Vec::with_capacity(checkpoints.len()),
        q90: Vec::with_capacity(checkpoints.len()),
    };
    for &c in checkpoints {
        let mut v: Vec<f64> = alive
            .iter()
            .filter_map(|r| gap_at(&r.trace, c))
            .filter(|g| g.is_finite())
            .collect();
        v.sort_by(f64::total_cmp);
        curve.mean.push(if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 });
        curve.median.push(quantile(&v, 0.5));
        curve.q10.push(quantile(&v, 0.1));
        curve.q90.push(quantile(&v, 0.9));
    }
    curve
}

fn summarize(method: &str, runs: &[&SeedRun], budget: u64) -> MethodSummary {
    let alive: Vec<&&SeedRun> = runs.iter().filter(|r| !r.diverged).collect();
    let mut finals: Vec<f64> = alive.iter().filter_map(|r| gap_at(&r.trace, budget)).collect();
    finals.sort_by(f64::total_cmp);
    MethodSummary {
        method: method.to_string(),
        runs: runs.len(),
        diverged: runs.len() - alive.len(),
        truncated: runs.iter().filter(|r| r.truncated).count(),
        initial_gap: runs.first().and_then(|r| r.trace.initial_gap()),
        final_mean_gap: (!finals.is_empty()).then(|| finals.iter().sum::<f64>() / finals.len() as f64),
        final_median_gap: (!finals.is_empty()).then(|| quantile(&finals, 0.5)),
    }
}

/// Noise stream of seed index `i`, shared by every method.
pub fn seed_stream(base_seed: u64, i: u64) -> RngState {
    RngState::from_seed(base_seed).substream(zoclip::Stream::Run).child(i)
}

/// Runs every method on every seed without writing files.
pub fn execute(cfg: &RunConfig) -> Result<ExperimentResult, BenchError> {
    cfg.validate()?;
    let oracle = cfg.problem.build::<f64>()?;
    let x0 = cfg.x0.clone().map(Array1::from).unwrap_or_else(|| Array1::zeros(cfg.problem.dim()));
    let jobs: Vec<(usize, u64)> =
        (0..cfg.methods.len()).flat_map(|m| (0..cfg.n_seeds).map(move |s| (m, s))).collect();
    let runs: Vec<SeedRun> = jobs
        .par_iter()
        .map(|&(m, s)| {
            let method = &cfg.methods[m];
            let (trace, diverged, truncated) =
                run_method(oracle.as_ref(), method, &x0, cfg.budget, cfg.record_wall_time, &seed_stream(cfg.seed, s))?;
            if diverged {
                log::info!("{} seed {s} diverged", method.name());
            }
            Ok(SeedRun { method: method.name(), seed_index: s, trace, diverged, truncated })
        })
        .collect::<Result<_, BenchError>>()?;

    let first_calls = runs
        .iter()
        .filter_map(|r| r.trace.records.iter().map(|rec| rec.oracle_calls).find(|c| *c > 0))
        .min()
        .unwrap_or(1);
    let checkpoints = checkpoint_grid(first_calls, cfg.budget, CHECKPOINTS);
    let mut curves = Vec::new();
    let mut summaries = Vec::new();
    for method in &cfg.methods {
        let name = method.name();
        let mine: Vec<&SeedRun> = runs.iter().filter(|r| r.method == name).collect();
        curves.push(aggregate(&name, &mine, &checkpoints));
        summaries.push(summarize(&name, &mine, cfg.budget));
    }
    Ok(ExperimentResult { runs, curves, summaries })
}

pub fn write_trace_csv(trace: &Trace, path: &Path) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in &trace.records {
        w.serialize(r)?;
    }
    if trace.records.is_empty() {
        w.write_record(["k", "oracle_calls", "gap", "dist_to_opt", "elapsed_s"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregate_csv(curves: &[AggregateCurve], path: &Path) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "oracle_calls", "runs", "diverged", "mean_gap", "median_gap", "q10_gap", "q90_gap"])?;
    for c in curves {
        for (i, calls) in c.checkpoints.iter().enumerate() {
            w.write_record([
                c.method.clone(),
                calls.to_string(),
                c.runs.to_string(),
                c.diverged.to_string(),
                c.mean[i].to_string(),
                c.median[i].to_string(),
                c.q10[i].to_string(),
                c.q90[i].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Runs the experiment and writes per-seed traces, the echoed config, the
/// aggregate curves, a summary and a plot into `cfg.output_dir`.
pub fn run_experiment(cfg: &RunConfig) -> Result<ExperimentResult, BenchError> {
    let result = execute(cfg)?;
    let dir = &cfg.output_dir;
    let traces = dir.join("traces");
    fs::create_dir_all(&traces)?;
    fs::write(dir.join("config.json"), cfg.to_json() + "\n")?;
    for r in &result.runs {
        write_trace_csv(&r.trace, &traces.join(format!("{}_seed{:03}.csv", r.method, r.seed_index)))?;
    }
    write_aggregate_csv(&result.curves, &dir.join("aggregate.csv"))?;
    let mut f = fs::File::create(dir.join("summary.json"))?;
    writeln!(f, "{}", serde_json::to_string_pretty(&result.summaries).expect("summary serializes"))?;
    write_svg(&result.curves, &dir.join("gap.svg"))?;
    if result.all_diverged() {
        return Err(BenchError::AllDiverged { table: divergence_table(&result) });
    }
    Ok(result)
}

fn divergence_table(result: &ExperimentResult) -> String {
    result
        .summaries
        .iter()
        .map(|s| format!("{}: {}/{} diverged", s.method, s.diverged, s.runs))
        .collect::<Vec<_>>()
        .join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use zoclip::TraceRecord;

    fn run(gaps: &[(u64, f64)], diverged: bool) -> SeedRun {
        SeedRun {
            method: "m".into(),
            seed_index: 0,
            trace: Trace {
                records: gaps
                    .iter()
                    .enumerate()
                    .map(|(k, &(c, g))| TraceRecord { k: k as u64, oracle_calls: c, gap: Some(g), dist_to_opt: None, elapsed_s: 0.0 })
                    .collect(),
                diverged,
            },
            diverged,
            truncated: false,
        }
    }

    #[test]
    fn checkpoints_are_log_spaced_and_end_at_budget() {
        let c = checkpoint_grid(20, 250_000, 64);
        assert_eq!(c.len(), 64);
        assert_eq!((c[0], *c.last().unwrap()), (20, 250_000));
        assert!(c.windows(2).all(|w| w[0] < w[1]));
        let tiny = checkpoint_grid(4, 10, 64);
        assert!(tiny.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn constant_traces_aggregate_to_the_constant() {
        let a = run(&[(0, 2.5), (10, 2.5), (20, 2.5)], false);
        let b = run(&[(0, 2.5), (10, 2.5), (20, 2.5)], false);
        let c = aggregate("m", &[&a, &b], &[1, 10, 15, 20]);
        assert!(c.mean.iter().all(|v| *v == 2.5));
        assert!(c.median.iter().all(|v| *v == 2.5));
    }

    #[test]
    fn diverged_runs_are_excluded_and_counted() {
        let a = run(&[(0, 1.0), (10, 0.5)], false);
        let b = run(&[(0, 1.0), (10, f64::INFINITY)], true);
        let c = aggregate("m", &[&a, &b], &[10]);
        assert_eq!(c.diverged, 1);
        assert_eq!(c.mean, vec![0.5]);
        let all = aggregate("m", &[&b], &[10]);
        assert!(all.mean[0].is_nan());
    }

    #[test]
    fn step_interpolation() {
        let a = run(&[(0, 4.0), (10, 3.0), (30, 1.0)], false);
        assert_eq!(gap_at(&a.trace, 5), Some(4.0));
        assert_eq!(gap_at(&a.trace, 29), Some(3.0));
        assert_eq!(gap_at(&a.trace, 100), Some(1.0));
    }

    #[test]
    fn budget_caps_iterations() {
        assert_eq!(capped(None, 100, 20), (5, false));
        assert_eq!(capped(Some(3), 100, 20), (3, false));
        assert_eq!(capped(Some(10), 100, 20), (5, true));
        assert_eq!(capped(None, 10, 20), (0, true));
    }
}
