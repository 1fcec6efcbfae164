use ndarray::Array1;

use super::sstm::bounded;
use super::trace::{Recorder, Trace};
use crate::error::{Result, ZoError};
use crate::gradest::{estimate_gradient_batched, SmoothingParams};
use crate::oracle::StochasticOracle;
use crate::randkit::RngState;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct SgdConfig<T> {
    pub x0: Array1<T>,
    pub iterations: u64,
    pub batch: usize,
    pub gamma: T,
    /// Heavy-ball momentum `ω ∈ [0, 1)`.
    pub omega: T,
    pub tau: T,
    pub record_wall_time: bool,
}

impl<T: Scalar> SgdConfig<T> {
    pub fn new(x0: Array1<T>, iterations: u64, batch: usize, gamma: T, omega: T, tau: T) -> Self {
        Self { x0, iterations, batch, gamma, omega, tau, record_wall_time: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.batch == 0 {
            return Err(ZoError::invalid("iterations and batch size must be at least 1"));
        }
        if !(self.gamma > T::zero()) || !self.gamma.is_finite() {
            return Err(ZoError::invalid(format!("stepsize must be positive, got {}", self.gamma)));
        }
        if !(self.omega >= T::zero() && self.omega < T::one()) {
            return Err(ZoError::invalid(format!("momentum must lie in [0, 1), got {}", self.omega)));
        }
        Ok(())
    }
}

/// Heavy-ball SGD on batched two-point estimates:
/// `v^{k+1} = ω v^k + g^B(x^k)`, `x^{k+1} = x^k − γ v^{k+1}`.
pub fn zo_sgd<T, O>(oracle: &O, cfg: &SgdConfig<T>, rng: &RngState) -> Result<(Array1<T>, Trace)>
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
    let mut x = cfg.x0.clone();
    let mut v = Array1::<T>::zeros(d);
    let mut rec = Recorder::new(cfg.record_wall_time);
    let per_iter = 2 * cfg.batch as u64;
    rec.record(oracle, 0, 0, x.view());
    for k in 0..cfg.iterations {
        let g = estimate_gradient_batched(oracle, x.view(), &params, cfg.batch, &rng.child(k))?.vector;
        v = v * cfg.omega + g;
        x = x - &v * cfg.gamma;
        let done = k + 1;
        if !bounded(&x) || !bounded(&v) {
            rec.record(oracle, done, done * per_iter, x.view());
            return Err(ZoError::Diverged { iteration: done, trace: Box::new(rec.finish_diverged()) });
        }
        if rec.wants(done, cfg.iterations) {
            rec.record(oracle, done, done * per_iter, x.view());
        }
    }
    Ok((x, rec.finish()))
}
