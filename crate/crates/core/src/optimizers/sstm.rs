use ndarray::{Array1, ArrayView1};

use super::schedule::{ClipPolicy, SstmSchedule};
use super::trace::{Recorder, Trace};
use crate::error::{Result, ZoError};
use crate::gradest::{clip, estimate_gradient_batched, SmoothingParams};
use crate::oracle::StochasticOracle;
use crate::randkit::RngState;
use crate::scalar::Scalar;

/// Iterates beyond this norm count as divergence.
pub const DIVERGENCE_NORM: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct SstmConfig<T> {
    pub x0: Array1<T>,
    /// `K`.
    pub iterations: u64,
    /// `B`.
    pub batch: usize,
    pub a: f64,
    /// `L`, normally `√d·M₂/τ`. Only the product `aL` enters the steps.
    pub smoothness: f64,
    pub tau: T,
    pub clip: ClipPolicy,
    pub record_wall_time: bool,
}

impl<T: Scalar> SstmConfig<T> {
    /// Stepsize given as `γ`, i.e. `a = 1/(γL)` and `α_{k+1} = (k+2)γ/2`.
    pub fn practical(x0: Array1<T>, iterations: u64, batch: usize, gamma: f64, tau: T, clip: ClipPolicy) -> Self {
        Self {
            x0,
            iterations,
            batch,
            a: 1.0 / gamma,
            smoothness: 1.0,
            tau,
            clip,
            record_wall_time: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(ZoError::invalid("need at least one iteration"));
        }
        if self.batch == 0 {
            return Err(ZoError::invalid("batch size must be at least 1"));
        }
        SstmSchedule::new(self.a, self.smoothness)?;
        self.clip.validate(self.iterations)
    }
}

/// Iterates of the similar-triangles method.
#[derive(Debug, Clone, PartialEq)]
pub struct SstmState<T> {
    /// `x^{k}`, the point where the last gradient was estimated.
    pub x: Array1<T>,
    pub y: Array1<T>,
    pub z: Array1<T>,
    pub schedule: SstmSchedule,
}

impl<T: Scalar> SstmState<T> {
    pub fn new(x0: Array1<T>, schedule: SstmSchedule) -> Self {
        Self { x: x0.clone(), y: x0.clone(), z: x0, schedule }
    }

    /// One iteration with gradient oracle `grad(k, x^{k+1}, α_{k+1})`, which
    /// returns the (possibly clipped) direction to step along.
    pub fn step<F>(&mut self, grad: F) -> Result<()>
    where
        F: FnOnce(u64, ArrayView1<T>, f64) -> Result<Array1<T>>,
    {
        let s = self.schedule.advance();
        let wy = T::of(s.a_prev / s.a_next);
        let wz = T::of(s.alpha / s.a_next);
        self.x = &self.y * wy + &self.z * wz;
        let g = grad(s.k, self.x.view(), s.alpha)?;
        self.z = &self.z - &(g * T::of(s.alpha));
        self.y = &self.y * wy + &self.z * wz;
        Ok(())
    }

    pub(crate) fn is_finite_and_bounded(&self) -> bool {
        [&self.x, &self.y, &self.z].iter().all(|v| bounded(v))
    }
}

pub(crate) fn bounded<T: Scalar>(v: &Array1<T>) -> bool {
    v.iter().all(|c| c.is_finite()) && v.dot(v).sqrt().as_f64() <= DIVERGENCE_NORM
}

/// ZO-clipped-SSTM. Returns `y^K` and the trace of noise-free gaps at `y^k`.
///
/// Iteration `k` draws its batch from `rng.child(k)`; the run uses `2KB`
/// oracle calls.
pub fn zo_clipped_sstm<T, O>(oracle: &O, cfg: &SstmConfig<T>, rng: &RngState) -> Result<(Array1<T>, Trace)>
where
    T: Scalar,
    O: StochasticOracle<T> + ?Sized,
{
    cfg.validate()?;
    let d = oracle.dim();
    if cfg.x0.len() != d {
        return Err(ZoError::invalid(format!("x0 has dimension {}, oracle {d}", cfg.x0.len())));
    }
    let params = SmoothingParams::new(cfg.tau, d)?;
    let mut state = SstmState::new(cfg.x0.clone(), SstmSchedule::new(cfg.a, cfg.smoothness)?);
    let mut rec = Recorder::new(cfg.record_wall_time);
    let per_iter = 2 * cfg.batch as u64;
    rec.record(oracle, 0, 0, state.y.view());
    for k in 0..cfg.iterations {
        state.step(|k, x, alpha| {
            let g = estimate_gradient_batched(oracle, x, &params, cfg.batch, &rng.child(k))?.vector;
            match cfg.clip.level(k, alpha) {
                Some(lambda) => clip(&g, T::of(lambda)),
                None => Ok(g),
            }
        })?;
        let done = k + 1;
        if !state.is_finite_and_bounded() {
            rec.record(oracle, done, done * per_iter, state.y.view());
            return Err(ZoError::Diverged { iteration: done, trace: Box::new(rec.finish_diverged()) });
        }
        if rec.wants(done, cfg.iterations) {
            rec.record(oracle, done, done * per_iter, state.y.view());
        }
    }
    Ok((state.y, rec.finish()))
}

/// Unclipped ZO-SSTM: [`zo_clipped_sstm`] with the clipping step removed.
pub fn zo_sstm<T, O>(oracle: &O, cfg: &SstmConfig<T>, rng: &RngState) -> Result<(Array1<T>, Trace)>
where
    T: Scalar,
    O: StochasticOracle<T> + ?Sized,
{
    let cfg = SstmConfig { clip: ClipPolicy::Unclipped, ..cfg.clone() };
    zo_clipped_sstm(oracle, &cfg, rng)
}
