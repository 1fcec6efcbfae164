//! Statistical checks of the estimator and the batching bound, bundled for the
//! `verify` subcommand.

use ndarray::Array1;
use serde::{Deserialize, Serialize};
use zoclip::oracle::{make_quadratic, EuclideanNorm, HeavyTailLsq, Linear, LsqGeneration};
use zoclip::verify::{
    check_batch_moment_bound, check_estimator_batch_ratio, check_estimator_moment, check_smoothing_gap,
    check_unbiasedness, CoordinateLaw, DEFAULT_SLACK,
};
use zoclip::{NoiseSpec, RngState, Stream, StochasticOracle};

use crate::error::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    All,
    Batching,
    Estimator,
    Smoothing,
    Unbiasedness,
}

#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Trials of the moment checks.
    pub trials: u64,
    /// Samples of the Monte-Carlo means.
    pub samples: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { seed: 0, trials: 10_000, samples: 100_000 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub report: serde_json::Value,
}

pub const BATCH_SIZES: [u64; 4] = [1, 4, 16, 64];
pub const SMOOTHING_TAUS: [f64; 3] = [0.2, 0.1, 0.05];

/// Coordinate law used for moment order `p`: stable with index `p + 0.1` for
/// `p < 2`, Gaussian at `p = 2`.
pub fn batching_law(p: f64) -> CoordinateLaw {
    if p >= 2.0 {
        CoordinateLaw::Gaussian
    } else {
        CoordinateLaw::SymStable { index: p + 0.1 }
    }
}

fn result<R: Serialize>(suite: &'static str, name: String, passed: bool, report: &R) -> CheckResult {
    CheckResult { suite, name, passed, report: serde_json::to_value(report).expect("report serializes") }
}

fn batching(opts: &SuiteOptions, rng: &RngState) -> Result<Vec<CheckResult>, BenchError> {
    let mut out = Vec::new();
    for (i, p) in [1.2, 1.4, 2.0].into_iter().enumerate() {
        for (j, d) in [2usize, 16].into_iter().enumerate() {
            let r = rng.child((i * 2 + j) as u64);
            let rep = check_batch_moment_bound(batching_law(p), d, p, None, &BATCH_SIZES, opts.trials, DEFAULT_SLACK, &r)?;
            out.push(result("batching", format!("p={p} d={d}"), rep.passed, &rep));
        }
    }
    Ok(out)
}

fn lsq_noiseless(rng: &RngState) -> Result<HeavyTailLsq<f64>, BenchError> {
    Ok(HeavyTailLsq::new(8, 50, NoiseSpec::None, LsqGeneration::Regression, rng)?)
}

fn estimator(opts: &SuiteOptions, rng: &RngState) -> Result<Vec<CheckResult>, BenchError> {
    let alpha = 1.5;
    let p = 0.95 * alpha;
    let tau = 0.05;
    let x = Array1::from(vec![0.3, -0.2, 0.5, 0.1, -0.4, 0.2, 0.0, 0.7]);
    let oracles: Vec<(&str, Box<dyn StochasticOracle<f64>>)> = vec![
        ("norm", Box::new(EuclideanNorm::<f64>::centered(8)?)),
        ("linear", Box::new(Linear::new(Array1::from(vec![1.0, -2.0, 0.5, 0.0, 3.0, -1.0, 0.25, 2.0]), NoiseSpec::None)?)),
        ("lsq", Box::new(lsq_noiseless(&rng.child(99))?)),
    ];
    let mut out = Vec::new();
    for (i, (name, o)) in oracles.iter().enumerate() {
        let rep = check_estimator_moment(o.as_ref(), x.view(), tau, p, opts.trials, Some(16), DEFAULT_SLACK, &rng.child(i as u64))?;
        out.push(result("estimator", format!("{name} p={p:.3}"), rep.passed, &rep));
    }
    let noisy = Linear::new(Array1::from(vec![1.0; 8]), NoiseSpec::SymStable { alpha, scale: 1.0 })?;
    let rep = check_estimator_batch_ratio(&noisy, x.view(), tau, 1.2, opts.trials, 16, DEFAULT_SLACK, &rng.child(10))?;
    out.push(result("estimator", "stable-noise linear batch=16".into(), rep.passed, &rep));
    Ok(out)
}

fn smoothing(opts: &SuiteOptions, rng: &RngState) -> Result<Vec<CheckResult>, BenchError> {
    let d = 4;
    let norm = EuclideanNorm::<f64>::centered(d)?;
    let mut pr = rng.substream(Stream::Trial);
    let points: Vec<Array1<f64>> = (0..50).map(|_| Array1::from_shape_fn(d, |_| pr.standard_normal())).collect();
    let mut out = Vec::new();
    for (i, tau) in SMOOTHING_TAUS.into_iter().enumerate() {
        let rep = check_smoothing_gap(&norm, tau, &points, (opts.samples / 10).max(100) as usize, &rng.child(i as u64))?;
        out.push(result("smoothing", format!("norm tau={tau}"), rep.passed, &rep));
    }
    let lin = Linear::new(Array1::from(vec![1.0, -1.0, 2.0, 0.5]), NoiseSpec::None)?;
    let rep = check_smoothing_gap(&lin, 0.1, &points[..5], 1000, &rng.child(9))?;
    // The smoothed linear function equals the function, so only sampling error remains.
    let exact = rep.points.iter().all(|p| p.gap <= 3.0 * p.std_error + 1e-12);
    out.push(result("smoothing", "linear tau=0.1".into(), exact, &rep));
    Ok(out)
}

fn unbiasedness(opts: &SuiteOptions, rng: &RngState) -> Result<Vec<CheckResult>, BenchError> {
    let x = Array1::from(vec![0.5, -1.0, 2.0]);
    let lin = Linear::new(Array1::from(vec![1.0, 2.0, -1.0]), NoiseSpec::SymStable { alpha: 1.5, scale: 1.0 })?;
    let quad = make_quadratic(3, 0.5, 4.0, Array1::from(vec![1.0, 0.0, -1.0]), NoiseSpec::Gaussian { std: 1.0 }, Some(&rng.child(7)))?;
    let mut out = Vec::new();
    let rep = check_unbiasedness(&lin, x.view(), 0.1, opts.samples, &rng.child(0))?;
    out.push(result("unbiasedness", "linear".into(), rep.passed, &rep));
    let rep = check_unbiasedness(&quad, x.view(), 0.1, opts.samples, &rng.child(1))?;
    out.push(result("unbiasedness", "quadratic".into(), rep.passed, &rep));
    Ok(out)
}

/// Runs the selected suites. Each suite draws from its own stream.
pub fn run_suites(suite: Suite, opts: &SuiteOptions) -> Result<Vec<CheckResult>, BenchError> {
    let root = RngState::from_seed(opts.seed).substream(Stream::Trial);
    let mut out = Vec::new();
    let wants = |s: Suite| suite == Suite::All || suite == s;
    if wants(Suite::Batching) {
        out.extend(batching(opts, &root.child(0))?);
    }
    if wants(Suite::Estimator) {
        out.extend(estimator(opts, &root.child(1))?);
    }
    if wants(Suite::Smoothing) {
        out.extend(smoothing(opts, &root.child(2))?);
    }
    if wants(Suite::Unbiasedness) {
        out.extend(unbiasedness(opts, &root.child(3))?);
    }
    Ok(out)
}
