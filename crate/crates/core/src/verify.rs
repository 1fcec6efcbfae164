//! Monte-Carlo checks of the estimator moment bounds, the batching bound and
//! the smoothing gap.
//!
//! Every check is a pure function of its inputs and seed, and produces a
//! serializable report carrying observed values, bounds and their ratios.

use ndarray::{Array1, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoError};
use crate::gradest::{estimate_gradient, estimate_gradient_batched, smoothed_value_mc, SmoothingParams};
use crate::optimizers::estimator_sigma;
use crate::oracle::StochasticOracle;
use crate::randkit::{cms_unchecked, sample_sym_pareto, RngState, Stream};
use crate::scalar::Scalar;

/// Multiplier applied to every theoretical bound before comparing.
pub const DEFAULT_SLACK: f64 = 1.5;

/// Samples whose norm exceeds this quantile are clipped to it when estimating
/// the standard error of a heavy-tailed mean.
pub const SE_CLIP_QUANTILE: f64 = 0.999;

/// Widening of the admissible log-log decay slope below `−(p−1)`.
pub const SLOPE_TOLERANCE: f64 = 0.15;

/// Law of the i.i.d. coordinates of the vectors fed to the batching check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoordinateLaw {
    Gaussian,
    SymStable { index: f64 },
    SymPareto { index: f64 },
}

impl CoordinateLaw {
    fn validate(&self) -> Result<()> {
        match *self {
            CoordinateLaw::Gaussian => Ok(()),
            CoordinateLaw::SymStable { index } if index > 1.0 && index <= 2.0 => Ok(()),
            CoordinateLaw::SymPareto { index } if index > 1.0 => Ok(()),
            other => Err(ZoError::invalid(format!("unsupported coordinate law {other:?}"))),
        }
    }

    fn draw(&self, rng: &mut RngState) -> f64 {
        match *self {
            CoordinateLaw::Gaussian => rng.standard_normal(),
            CoordinateLaw::SymStable { index } => cms_unchecked(index, rng),
            CoordinateLaw::SymPareto { index } => {
                sample_sym_pareto(index, rng).expect("index validated")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub p: f64,
    pub d: usize,
    /// `σ^p` the bounds are built from.
    pub sigma_p: f64,
    /// Whether `σ^p` was measured rather than supplied.
    pub calibrated: bool,
    pub batch_sizes: Vec<u64>,
    pub moments: Vec<f64>,
    /// `2σ^p/B^{p−1}`.
    pub bounds: Vec<f64>,
    /// `moment / bound`.
    pub ratios: Vec<f64>,
    pub pass: Vec<bool>,
    pub slack: f64,
    /// Least-squares slope of `ln moment` against `ln B`.
    pub slope: Option<f64>,
    pub slope_window: Option<(f64, f64)>,
    pub samples: u64,
    pub passed: bool,
}

fn norm_pow(v: &[f64], p: f64) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt().powf(p)
}

fn check_order(p: f64) -> Result<()> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(ZoError::invalid(format!("moment order must lie in (1, 2], got {p}")));
    }
    Ok(())
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Empirical `E‖(1/B)Σ X_i‖^p` against `2σ^p/B^{p−1}` for i.i.d. zero-mean
/// `X_i ∈ R^d`.
///
/// Each trial draws `max(B)` vectors and splits them into consecutive batches
/// of every requested size, so all batch sizes share the same samples; every
/// size must divide the largest. `σ^p` is the pooled single-sample moment.
/// If `sigma` is given, the calibrated moment must not exceed `sigma^p`.
#[allow(clippy::too_many_arguments)]
pub fn check_batch_moment_bound(
    law: CoordinateLaw,
    d: usize,
    p: f64,
    sigma: Option<f64>,
    batch_sizes: &[u64],
    n_trials: u64,
    slack: f64,
    rng: &RngState,
) -> Result<MomentReport> {
    law.validate()?;
    check_order(p)?;
    if d == 0 || n_trials == 0 || batch_sizes.is_empty() || batch_sizes.contains(&0) {
        return Err(ZoError::invalid("need d, trials and batch sizes >= 1"));
    }
    let b_max = *batch_sizes.iter().max().expect("nonempty");
    if let Some(b) = batch_sizes.iter().find(|b| b_max % **b != 0) {
        return Err(ZoError::invalid(format!("batch size {b} does not divide {b_max}")));
    }
    let nb = batch_sizes.len();
    let per_trial = |t: u64| {
        let mut r = rng.substream(Stream::Trial).child(t);
        let xs: Vec<Vec<f64>> = (0..b_max).map(|_| (0..d).map(|_| law.draw(&mut r)).collect()).collect();
        let single: f64 = xs.iter().map(|x| norm_pow(x, p)).sum();
        let mut sums = vec![0.0; nb];
        for (j, &b) in batch_sizes.iter().enumerate() {
            for chunk in xs.chunks(b as usize) {
                let mut mean = vec![0.0; d];
                for x in chunk {
                    for (m, c) in mean.iter_mut().zip(x) {
                        *m += c;
                    }
                }
                mean.iter_mut().for_each(|m| *m /= b as f64);
                sums[j] += norm_pow(&mean, p);
            }
        }
        (single, sums)
    };
    let parts: Vec<(f64, Vec<f64>)> = (0..n_trials).into_par_iter().map(per_trial).collect();
    let mut single = 0.0;
    let mut sums = vec![0.0; nb];
    for (s, v) in &parts {
        single += s;
        for (a, b) in sums.iter_mut().zip(v) {
            *a += b;
        }
    }
    let sigma_p = single / (n_trials * b_max) as f64;
    if let Some(s) = sigma {
        if sigma_p > s.powf(p) {
            return Err(ZoError::InvalidSetup(format!(
                "single-sample moment {sigma_p} exceeds supplied sigma^p = {}",
                s.powf(p)
            )));
        }
    }
    let moments: Vec<f64> = batch_sizes
        .iter()
        .zip(&sums)
        .map(|(&b, s)| s / (n_trials * (b_max / b)) as f64)
        .collect();
    let bounds: Vec<f64> = batch_sizes.iter().map(|&b| 2.0 * sigma_p / (b as f64).powf(p - 1.0)).collect();
    let ratios: Vec<f64> = moments.iter().zip(&bounds).map(|(m, b)| m / b).collect();
    let pass: Vec<bool> = ratios.iter().map(|r| *r <= slack).collect();
    let (slope, window) = if nb >= 2 {
        let xs: Vec<f64> = batch_sizes.iter().map(|&b| (b as f64).ln()).collect();
        let ys: Vec<f64> = moments.iter().map(|m| m.ln()).collect();
        (Some(fit_slope(&xs, &ys)), Some((-(p - 1.0) - SLOPE_TOLERANCE, 0.0)))
    } else {
        (None, None)
    };
    let slope_ok = match (slope, window) {
        (Some(s), Some((lo, hi))) => s >= lo && s <= hi,
        _ => true,
    };
    let passed = pass.iter().all(|p| *p) && slope_ok;
    Ok(MomentReport {
        p,
        d,
        sigma_p,
        calibrated: true,
        batch_sizes: batch_sizes.to_vec(),
        moments,
        bounds,
        ratios,
        pass,
        slack,
        slope,
        slope_window: window,
        samples: n_trials * b_max,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorMomentReport {
    pub p: f64,
    pub d: usize,
    pub tau: f64,
    /// Scale the single-estimate bound is built from.
    pub sigma: f64,
    /// Whether `sigma` is the measured single-estimate moment rather than
    /// `√d·M₂/2^{1/4}`.
    pub calibrated: bool,
    /// `E‖g − ḡ‖^p` for single estimates.
    pub single_moment: f64,
    pub single_bound: f64,
    pub single_ratio: f64,
    pub batch: Option<u64>,
    /// `E‖g^B − ḡ‖^p`.
    pub batch_moment: Option<f64>,
    /// `2σ^p/B^{p−1}`.
    pub batch_bound: Option<f64>,
    pub batch_ratio: Option<f64>,
    pub slack: f64,
    pub samples: u64,
    pub passed: bool,
}

fn central_moment<T: Scalar>(samples: &[Array1<T>], p: f64) -> f64 {
    let n = samples.len() as f64;
    let d = samples[0].len();
    let mut mean = vec![0.0; d];
    for s in samples {
        for (m, c) in mean.iter_mut().zip(s.iter()) {
            *m += c.as_f64() / n;
        }
    }
    samples
        .iter()
        .map(|s| {
            let dev: Vec<f64> = s.iter().zip(&mean).map(|(c, m)| c.as_f64() - m).collect();
            norm_pow(&dev, p)
        })
        .sum::<f64>()
        / n
}

/// Shared body of the two estimator moment checks. `sigma = None` calibrates
/// `σ^p` as the measured single-estimate moment.
#[allow(clippy::too_many_arguments)]
fn estimator_moments<T, O>(
    oracle: &O,
    x: ArrayView1<T>,
    tau: T,
    p: f64,
    n_trials: u64,
    batch: Option<u64>,
    sigma: Option<f64>,
    slack: f64,
    rng: &RngState,
) -> Result<EstimatorMomentReport>
where
    T: Scalar,
    O: StochasticOracle<T> + ?Sized,
{
    check_order(p)?;
    if n_trials < 2 {
        return Err(ZoError::invalid("need at least two trials"));
    }
    let d = oracle.dim();
    let params = SmoothingParams::new(tau, d)?;
    let single_rng = rng.substream(Stream::Trial);
    let singles: Vec<Array1<T>> = (0..n_trials)
        .into_par_iter()
        .map(|i| estimate_gradient(oracle, x, &params, &single_rng.child(i)).map(|g| g.vector))
        .collect::<Result<_>>()?;
    let single_moment = central_moment(&singles, p);
    let (sigma_value, sigma_p, calibrated) = match sigma {
        Some(s) => (s, s.powf(p), false),
        None => (single_moment.powf(1.0 / p), single_moment, true),
    };
    let single_bound = sigma_p;
    let single_ratio = single_moment / single_bound;
    let mut report = EstimatorMomentReport {
        p,
        d,
        tau: tau.as_f64(),
        sigma: sigma_value,
        calibrated,
        single_moment,
        single_bound,
        single_ratio,
        batch: None,
        batch_moment: None,
        batch_bound: None,
        batch_ratio: None,
        slack,
        samples: n_trials,
        passed: single_moment == 0.0 || single_ratio <= slack,
    };
    if let Some(b) = batch {
        if b == 0 {
            return Err(ZoError::invalid("batch size must be at least 1"));
        }
        let batch_rng = rng.substream(Stream::Run);
        let batched: Vec<Array1<T>> = (0..n_trials)
            .into_par_iter()
            .map(|i| {
                estimate_gradient_batched(oracle, x, &params, b as usize, &batch_rng.child(i)).map(|g| g.vector)
            })
            .collect::<Result<_>>()?;
        let m = central_moment(&batched, p);
        let bound = 2.0 * sigma_p / (b as f64).powf(p - 1.0);
        let ratio = if bound > 0.0 { m / bound } else { 0.0 };
        report.batch = Some(b);
        report.batch_moment = Some(m);
        report.batch_bound = Some(bound);
        report.batch_ratio = Some(ratio);
        report.passed &= m == 0.0 || ratio <= slack;
    }
    Ok(report)
}

/// Central `p`-th moment of single (and optionally batched) two-point
/// estimates against `σ = √d·M₂/2^{1/4}`. Needs `M₂` in the oracle metadata.
#[allow(clippy::too_many_arguments)]
pub fn check_estimator_moment<T, O>(
    oracle: &O,
    x: ArrayView1<T>,
    tau: T,
    p: f64,
    n_trials: u64,
    batch: Option<u64>,
    slack: f64,
    rng: &RngState,
) -> Result<EstimatorMomentReport>
where
    T: Scalar,
    O: StochasticOracle<T> + ?Sized,
{
    let m2 = oracle
        .meta()
        .m2
        .ok_or_else(|| ZoError::invalid("estimator moment check needs a known M2"))?
        .as_f64();
    let sigma = estimator_sigma(m2, oracle.dim());
    estimator_moments(oracle, x, tau, p, n_trials, batch, Some(sigma), slack, rng)
}

/// Batched moment against `2σ^p/B^{p−1}` with `σ^p` the measured
/// single-estimate moment; usable when `M₂` is unknown.
#[allow(clippy::too_many_arguments)]
pub fn check_estimator_batch_ratio<T, O>(
    oracle: &O,
    x: ArrayView1<T>,
    tau: T,
    p: f64,
    n_trials: u64,
    batch: u64,
    slack: f64,
    rng: &RngState,
) -> Result<EstimatorMomentReport>
where
    T: Scalar,
    O: StochasticOracle<T> + ?Sized,
{
    estimator_moments(oracle, x, tau, p, n_trials, Some(batch), None, slack, rng)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingPoint {
    pub x: Vec<f64>,
    pub value: f64,
    pub smoothed: f64,
    pub std_error: f64,
    /// `|f̂_τ(x) − f(x)|` as measured.
    pub gap: f64,
    /// `τM₂ + 3·std_error`.
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingReport {
    pub tau: f64,
    pub m2: f64,
    pub samples_per_point: usize,
    pub points: Vec<SmoothingPoint>,
    pub max_gap: f64,
    pub passed: bool,
}

/// `|f̂_τ(x) − f(x)| ≤ τM₂` at each point, up to three Monte-Carlo standard
/// errors. Needs `M₂` and the noise-free objective.
pub fn check_smoothing_gap<T, O>(
    oracle: &O,
    tau: T,
    points: &[Array1<T>],
    n_mc: usize,
    rng: &RngState,
) -> Result<SmoothingReport>
where
    T: Scalar,
    O: StochasticOracle<T> + ?Sized,
{
    let m2 = oracle
        .meta()
        .m2
        .ok_or_else(|| ZoError::invalid("smoothing check needs a known M2"))?
        .as_f64();
    let params = SmoothingParams::new(tau, oracle.dim())?;
    let tau64 = tau.as_f64();
    let checked: Vec<SmoothingPoint> = points
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let value = oracle
                .expected_value(x.view())
                .ok_or_else(|| ZoError::invalid("smoothing check needs the noise-free objective"))?
                .as_f64();
            let est = smoothed_value_mc(oracle, x.view(), &params, n_mc, &rng.child(i as u64))?;
            let (smoothed, se) = (est.mean.as_f64(), est.std_error.as_f64());
            let gap = (smoothed - value).abs();
            let bound = tau64 * m2 + 3.0 * se;
            Ok(SmoothingPoint {
                x: x.iter().map(|c| c.as_f64()).collect(),
                value,
                smoothed,
                std_error: se,
                gap,
                bound,
                pass: gap <= bound,
            })
        })
        .collect::<Result<_>>()?;
    let max_gap = checked.iter().map(|p| p.gap).fold(0.0, f64::max);
    let passed = checked.iter().all(|p| p.pass);
    Ok(SmoothingReport { tau: tau64, m2, samples_per_point: n_mc, points: checked, max_gap, passed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnbiasednessReport {
    pub tau: f64,
    pub samples: u64,
    pub mean: Vec<f64>,
    pub target: Vec<f64>,
    /// `‖mean − ∇f̂_τ(x)‖₂`.
    pub error: f64,
    /// Standard error of the mean vector, from samples clipped at the
    /// [`SE_CLIP_QUANTILE`] norm quantile.
    pub std_error: f64,
    /// `error / std_error`.
    pub z: f64,
    pub passed: bool,
}

/// Mean of `n_mc` single estimates against the closed-form `∇f̂_τ(x)`, passing
/// within four standard errors.
pub fn check_unbiasedness<T, O>(
    oracle: &O,
    x: ArrayView1<T>,
    tau: T,
    n_mc: u64,
    rng: &RngState,
) -> Result<UnbiasednessReport>
where
    T: Scalar,
    O: StochasticOracle<T> + ?Sized,
{
    let target = oracle
        .smoothed_gradient(x, tau)
        .ok_or_else(|| ZoError::invalid("no closed-form smoothed gradient for this problem"))?;
    if n_mc < 2 {
        return Err(ZoError::invalid("need at least two samples"));
    }
    let params = SmoothingParams::new(tau, oracle.dim())?;
    let samples: Vec<Vec<f64>> = (0..n_mc)
        .into_par_iter()
        .map(|i| {
            estimate_gradient(oracle, x, &params, &rng.child(i))
                .map(|g| g.vector.iter().map(|c| c.as_f64()).collect())
        })
        .collect::<Result<_>>()?;
    let d = target.len();
    let n = n_mc as f64;
    let mut mean = vec![0.0; d];
    for s in &samples {
        for (m, c) in mean.iter_mut().zip(s) {
            *m += c / n;
        }
    }
    let target: Vec<f64> = target.iter().map(|c| c.as_f64()).collect();
    let error = mean.iter().zip(&target).map(|(m, t)| (m - t).powi(2)).sum::<f64>().sqrt();

    // Robust spread: clip sample norms at a high quantile before taking the
    // coordinate variances.
    let mut norms: Vec<f64> = samples.iter().map(|s| s.iter().map(|c| c * c).sum::<f64>().sqrt()).collect();
    norms.sort_by(f64::total_cmp);
    let q_idx = ((SE_CLIP_QUANTILE * (n - 1.0)).round() as usize).min(norms.len() - 1);
    let cap = norms[q_idx];
    let clipped: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| {
            let nr = s.iter().map(|c| c * c).sum::<f64>().sqrt();
            let f = if nr > cap && nr > 0.0 { cap / nr } else { 1.0 };
            s.iter().map(|c| c * f).collect()
        })
        .collect();
    let mut cmean = vec![0.0; d];
    for s in &clipped {
        for (m, c) in cmean.iter_mut().zip(s) {
            *m += c / n;
        }
    }
    let var_sum: f64 = clipped
        .iter()
        .map(|s| s.iter().zip(&cmean).map(|(c, m)| (c - m).powi(2)).sum::<f64>())
        .sum::<f64>()
        / (n - 1.0);
    let std_error = (var_sum / n).sqrt();
    let z = if std_error > 0.0 { error / std_error } else if error == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(UnbiasednessReport {
        tau: tau.as_f64(),
        samples: n_mc,
        mean,
        target,
        error,
        std_error,
        z,
        passed: error <= 4.0 * std_error,
    })
}
