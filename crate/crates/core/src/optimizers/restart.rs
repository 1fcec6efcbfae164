use ndarray::Array1;
use serde::{Deserialize, Serialize};

use super::params::{batch_cap, check_alpha, estimator_sigma, step_parameter};
use super::schedule::ClipPolicy;
use super::sstm::{zo_clipped_sstm, SstmConfig};
use super::trace::Trace;
use crate::error::{Result, ZoError};
use crate::oracle::StochasticOracle;
use crate::randkit::RngState;
use crate::scalar::Scalar;

/// How each stage picks its batch size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchPolicy {
    Fixed(u64),
    /// `⌊(√d·M₂·R_{t−1}/ε_t)^{1/(α−1)}⌋`.
    Cap,
}

/// Problem constants the restart schedule is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestartProblem {
    pub mu: f64,
    /// `R ≥ ‖x⁰ − x*‖`.
    pub radius: f64,
    pub eps: f64,
    pub m2: f64,
    pub d: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl RestartProblem {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("mu", self.mu), ("R", self.radius), ("eps", self.eps), ("M2", self.m2), ("beta", self.beta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ZoError::invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.beta > 1.0 {
            return Err(ZoError::invalid(format!("beta must lie in (0, 1], got {}", self.beta)));
        }
        if self.d == 0 {
            return Err(ZoError::invalid("d must be at least 1"));
        }
        check_alpha(self.alpha)
    }

    /// `N = ⌈log₂(μR²/(2ε))⌉`, 0 when the start is already accurate enough.
    pub fn stages(&self) -> u32 {
        let ratio = self.mu * self.radius * self.radius / (2.0 * self.eps);
        if ratio <= 1.0 {
            return 0;
        }
        let l = ratio.log2();
        let r = l.round();
        if (l - r).abs() <= 1e-12 * r.max(1.0) {
            r as u32
        } else {
            l.ceil() as u32
        }
    }

    /// `R_t = 2^{−t/2}·R`.
    pub fn radius_at(&self, t: u32) -> f64 {
        self.radius * 2f64.powf(-(t as f64) / 2.0)
    }

    /// `ε_t = μR²_{t−1}/4`.
    pub fn eps_at(&self, t: u32) -> f64 {
        let r = self.radius_at(t - 1);
        self.mu * r * r / 4.0
    }

    /// `τ_t = ε_t/(4M₂)`.
    pub fn tau_at(&self, t: u32) -> f64 {
        self.eps_at(t) / (4.0 * self.m2)
    }

    /// `L_t = M₂√d/τ_t`.
    pub fn smoothness_at(&self, t: u32) -> f64 {
        self.m2 * (self.d as f64).sqrt() / self.tau_at(t)
    }
}

/// Parameters of stage `t` (1-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageParams {
    pub t: u32,
    pub eps: f64,
    /// `R_{t−1}`.
    pub radius_prev: f64,
    /// `R_t`.
    pub radius: f64,
    pub tau: f64,
    pub smoothness: f64,
    /// `K_t` as a real number; may exceed `u64`.
    pub iterations_exact: f64,
    /// `K_t`, saturated at `u64::MAX`.
    pub iterations: u64,
    pub batch: u64,
    pub a: f64,
    /// `ln(4K_tN/β)`.
    pub log_term: f64,
}

impl StageParams {
    /// `α^t_{k+1}`.
    pub fn alpha(&self, k: u64) -> f64 {
        (k as f64 + 2.0) / (2.0 * self.a * self.smoothness)
    }

    /// `λ_k^t = R_t/(30·α^t_{k+1}·ln(4K_tN/β))`.
    pub fn lambda(&self, k: u64) -> f64 {
        self.radius / (30.0 * self.alpha(k) * self.log_term)
    }

    pub fn clip_policy(&self) -> ClipPolicy {
        ClipPolicy::InverseStep { numerator: self.radius / (30.0 * self.log_term) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSchedule {
    pub problem: RestartProblem,
    pub stages: Vec<StageParams>,
    /// Set when no stage is needed.
    pub warning: Option<String>,
}

impl RestartSchedule {
    pub fn n_stages(&self) -> u32 {
        self.stages.len() as u32
    }

    fn empty(problem: RestartProblem) -> Self {
        let msg = format!(
            "eps = {} >= mu R^2 / 2 = {}: no restart stage needed",
            problem.eps,
            problem.mu * problem.radius * problem.radius / 2.0
        );
        log::warn!("{msg}");
        Self { problem, stages: Vec::new(), warning: Some(msg) }
    }

    /// Same stages, radii, accuracies and smoothing radii as the theoretical
    /// schedule, but with user-chosen `K_t` and batch, and `a_t = 1/(γL_t)`.
    /// The clipping levels keep the `R_t/(30·α^t_{k+1}·ln(4K_tN/β))` form.
    pub fn practical(problem: RestartProblem, iterations: u64, batch: u64, gamma: f64) -> Result<Self> {
        problem.validate()?;
        if iterations == 0 || batch == 0 || !(gamma > 0.0 && gamma.is_finite()) {
            return Err(ZoError::invalid("practical schedule needs K, B >= 1 and gamma > 0"));
        }
        let n = problem.stages();
        if n == 0 {
            return Ok(Self::empty(problem));
        }
        let stages = (1..=n)
            .map(|t| {
                let smoothness = problem.smoothness_at(t);
                let log_term = (4.0 * iterations as f64 * n as f64 / problem.beta).ln();
                StageParams {
                    t,
                    eps: problem.eps_at(t),
                    radius_prev: problem.radius_at(t - 1),
                    radius: problem.radius_at(t),
                    tau: problem.tau_at(t),
                    smoothness,
                    iterations_exact: iterations as f64,
                    iterations,
                    batch,
                    a: 1.0 / (gamma * smoothness),
                    log_term,
                }
            })
            .collect();
        Ok(Self { problem, stages, warning: None })
    }
}

/// Theoretical restart schedule with the explicit constants of the strongly
/// convex bound.
pub fn restart_schedule(problem: RestartProblem, batch: BatchPolicy) -> Result<RestartSchedule> {
    problem.validate()?;
    let n = problem.stages();
    if n == 0 {
        return Ok(RestartSchedule::empty(problem));
    }
    let nf = n as f64;
    let beta = problem.beta;
    let alpha = problem.alpha;
    let sigma = estimator_sigma(problem.m2, problem.d);
    let expo = alpha / (alpha - 1.0);
    let mut stages = Vec::with_capacity(n as usize);
    for t in 1..=n {
        let eps_t = problem.eps_at(t);
        let r_prev = problem.radius_at(t - 1);
        let r_t = problem.radius_at(t);
        let tau_t = problem.tau_at(t);
        let l_t = problem.smoothness_at(t);
        let b_t = match batch {
            BatchPolicy::Fixed(b) if b >= 1 => b,
            BatchPolicy::Fixed(_) => return Err(ZoError::invalid("batch size must be at least 1")),
            BatchPolicy::Cap => batch_cap(problem.m2, problem.d, r_prev, eps_t, alpha)?,
        };
        let bf = b_t as f64;
        let lr2 = l_t * r_prev * r_prev;
        let first = 1080.0 * (lr2 / eps_t).sqrt() * (2160.0 * lr2.sqrt() * nf / (eps_t.sqrt() * beta)).ln();
        let second = 2.0 / bf
            * (10800.0 * sigma * r_prev / eps_t).powf(expo)
            * (4.0 * nf / (bf * beta) * (5400.0 * sigma * r_prev / eps_t).powf(expo)).ln();
        let k_exact = first.max(second).ceil().max(1.0);
        let log_term = (4.0 * k_exact * nf / beta).ln();
        if log_term < 1.0 {
            return Err(ZoError::invalid(format!("stage {t}: ln(4 K_t N / beta) = {log_term} < 1")));
        }
        let a_t = step_parameter(log_term, sigma, k_exact, alpha, bf, l_t, r_t);
        stages.push(StageParams {
            t,
            eps: eps_t,
            radius_prev: r_prev,
            radius: r_t,
            tau: tau_t,
            smoothness: l_t,
            iterations_exact: k_exact,
            iterations: if k_exact >= u64::MAX as f64 { u64::MAX } else { k_exact as u64 },
            batch: b_t,
            a: a_t,
            log_term,
        });
    }
    Ok(RestartSchedule { problem, stages, warning: None })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartConfig<T> {
    pub x0: Array1<T>,
    pub schedule: RestartSchedule,
    pub record_wall_time: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartRun<T> {
    /// `x̂^N`.
    pub x_hat: Array1<T>,
    /// All stages back to back.
    pub trace: Trace,
    /// `x̂^1, …, x̂^N`.
    pub stage_outputs: Vec<Array1<T>>,
}

/// R-ZO-clipped-SSTM: stage `t` runs ZO-clipped-SSTM from `x̂^{t−1}` with the
/// stage parameters and randomness `rng.child(t)`.
pub fn r_zo_clipped_sstm<T, O>(oracle: &O, cfg: &RestartConfig<T>, rng: &RngState) -> Result<RestartRun<T>>
where
    T: Scalar,
    O: StochasticOracle<T> + ?Sized,
{
    if !(oracle.meta().mu > T::zero()) {
        return Err(ZoError::invalid("restarts need a strongly convex problem (mu > 0)"));
    }
    let mut x_hat = cfg.x0.clone();
    let mut trace = Trace::default();
    let mut stage_outputs = Vec::with_capacity(cfg.schedule.stages.len());
    for st in &cfg.schedule.stages {
        let batch = usize::try_from(st.batch).map_err(|_| ZoError::invalid("stage batch too large"))?;
        let sc = SstmConfig {
            x0: x_hat,
            iterations: st.iterations,
            batch,
            a: st.a,
            smoothness: st.smoothness,
            tau: T::of(st.tau),
            clip: st.clip_policy(),
            record_wall_time: cfg.record_wall_time,
        };
        match zo_clipped_sstm(oracle, &sc, &rng.child(st.t as u64)) {
            Ok((y, stage_trace)) => {
                trace.extend_shifted(&stage_trace);
                x_hat = y;
                stage_outputs.push(x_hat.clone());
            }
            Err(ZoError::Diverged { trace: stage_trace, .. }) => {
                trace.extend_shifted(&stage_trace);
                let iteration = trace.last().map_or(0, |r| r.k);
                return Err(ZoError::Diverged { iteration, trace: Box::new(trace) });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(RestartRun { x_hat, trace, stage_outputs })
}
