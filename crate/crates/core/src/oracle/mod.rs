//! Two-point stochastic zeroth-order oracles.
//!
//! An oracle answers `eval_pair(x, y)` with `(f(x, ξ), f(y, ξ))` for one noise
//! draw `ξ` taken from the caller's noise stream. Each pair counts as two
//! function evaluations in all accounting.

mod adversarial;
mod linalg;
mod noise_level;
mod problems;
mod spec;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ZoError};
use crate::randkit::{cms_unchecked, check_stable_params, RngState};
use crate::scalar::Scalar;

pub use adversarial::{wrap_adversarial, AdversarialWrapper};
pub use noise_level::{admissible_noise_level, bias_noise_level, NoiseSetting};
pub use problems::{
    make_heavytail_lsq, make_quadratic, Constant, EuclideanNorm, HeavyTailLsq, Linear,
    LsqGeneration, Quadratic,
};
pub use spec::ProblemSpec;

/// Known constants of a problem. `None` marks a value the problem cannot
/// supply exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleMeta<T> {
    /// Bound on the α-th moment of the Lipschitz constant `M₂(ξ)`.
    pub m2: Option<T>,
    /// Moment index of the noise, in (1, 2].
    pub alpha: T,
    /// Strong convexity modulus (0 for merely convex problems).
    pub mu: T,
    pub f_star: Option<T>,
    pub x_star: Option<Array1<T>>,
}

impl<T: Scalar> OracleMeta<T> {
    pub fn convex(alpha: T) -> Self {
        Self {
            m2: None,
            alpha,
            mu: T::zero(),
            f_star: None,
            x_star: None,
        }
    }
}

pub trait StochasticOracle<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;

    fn meta(&self) -> &OracleMeta<T>;

    /// `(f(x, ξ), f(y, ξ))` for a single draw `ξ` from `noise`.
    fn eval_pair(&self, x: ArrayView1<T>, y: ArrayView1<T>, noise: &mut RngState)
        -> Result<(T, T)>;

    /// Single value `f(x, ξ)`.
    fn eval(&self, x: ArrayView1<T>, noise: &mut RngState) -> Result<T> {
        Ok(self.eval_pair(x, x, noise)?.0)
    }

    /// Noise-free objective `E_ξ f(x, ξ)`, when the problem knows it.
    fn expected_value(&self, _x: ArrayView1<T>) -> Option<T> {
        None
    }

    /// Closed-form gradient of the ball-smoothed objective, when available.
    fn smoothed_gradient(&self, _x: ArrayView1<T>, _tau: T) -> Option<Array1<T>> {
        None
    }

    /// `E f(x) - f*`.
    fn gap(&self, x: ArrayView1<T>) -> Option<T> {
        Some(self.expected_value(x)? - self.meta().f_star?)
    }

    fn dist_to_opt(&self, x: ArrayView1<T>) -> Option<T> {
        let xs = self.meta().x_star.as_ref()?;
        let diff = &x - xs;
        Some(diff.dot(&diff).sqrt())
    }
}

macro_rules! forward_oracle {
    ($($ty:ty),*) => {$(
        impl<T: Scalar, O: StochasticOracle<T> + ?Sized> StochasticOracle<T> for $ty {
            fn dim(&self) -> usize { (**self).dim() }
            fn meta(&self) -> &OracleMeta<T> { (**self).meta() }
            fn eval_pair(&self, x: ArrayView1<T>, y: ArrayView1<T>, noise: &mut RngState) -> Result<(T, T)> {
                (**self).eval_pair(x, y, noise)
            }
            fn eval(&self, x: ArrayView1<T>, noise: &mut RngState) -> Result<T> { (**self).eval(x, noise) }
            fn expected_value(&self, x: ArrayView1<T>) -> Option<T> { (**self).expected_value(x) }
            fn smoothed_gradient(&self, x: ArrayView1<T>, tau: T) -> Option<Array1<T>> {
                (**self).smoothed_gradient(x, tau)
            }
            fn gap(&self, x: ArrayView1<T>) -> Option<T> { (**self).gap(x) }
            fn dist_to_opt(&self, x: ArrayView1<T>) -> Option<T> { (**self).dist_to_opt(x) }
        }
    )*};
}

forward_oracle!(&O, Box<O>, Arc<O>);

/// Additive linear noise model `⟨ξ, x⟩`, `ξ` with i.i.d. coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    /// `ξ ≡ 0`.
    #[default]
    None,
    /// Symmetric α-stable coordinates `S(alpha, scale)`.
    SymStable { alpha: f64, scale: f64 },
    Gaussian { std: f64 },
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseSpec::None => Ok(()),
            NoiseSpec::SymStable { alpha, scale } => check_stable_params(alpha, scale),
            NoiseSpec::Gaussian { std } if std > 0.0 && std.is_finite() => Ok(()),
            NoiseSpec::Gaussian { std } => {
                Err(ZoError::invalid(format!("noise std must be positive, got {std}")))
            }
        }
    }

    /// Moment index the noise satisfies: the stability index for stable
    /// noise, 2 otherwise.
    pub fn moment_index(&self) -> f64 {
        match *self {
            NoiseSpec::SymStable { alpha, .. } => alpha,
            _ => 2.0,
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self, NoiseSpec::None)
    }

    /// Draws one `ξ ∈ R^d`; `None` for the noiseless model.
    pub fn draw<T: Scalar>(&self, d: usize, rng: &mut RngState) -> Option<Array1<T>> {
        match *self {
            NoiseSpec::None => None,
            NoiseSpec::SymStable { alpha, scale } => {
                Some((0..d).map(|_| T::of(scale * cms_unchecked(alpha, rng))).collect())
            }
            NoiseSpec::Gaussian { std } => {
                Some((0..d).map(|_| T::of(std * rng.standard_normal())).collect())
            }
        }
    }
}

/// Thread-safe oracle-call accounting with a per-phase breakdown.
#[derive(Debug, Default)]
pub struct CallCounter {
    total: AtomicU64,
    phase: Mutex<String>,
    phases: Mutex<BTreeMap<String, u64>>,
}

impl CallCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_phase(&self, name: impl Into<String>) {
        *self.phase.lock().unwrap() = name.into();
    }

    pub fn record(&self, calls: u64) {
        self.total.fetch_add(calls, Ordering::Relaxed);
        let phase = self.phase.lock().unwrap().clone();
        *self.phases.lock().unwrap().entry(phase).or_default() += calls;
    }

    pub fn total(&self) -> u64 {
        self.total.load(Ordering::Relaxed)
    }

    pub fn phases(&self) -> Vec<(String, u64)> {
        self.phases
            .lock()
            .unwrap()
            .iter()
            .map(|(k, v)| (k.clone(), *v))
            .collect()
    }
}

/// Oracle wrapper that charges two calls per `eval_pair` to a [`CallCounter`].
pub struct Counted<O> {
    inner: O,
    counter: CallCounter,
}

impl<O> Counted<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            counter: CallCounter::new(),
        }
    }

    pub fn counter(&self) -> &CallCounter {
        &self.counter
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<T: Scalar, O: StochasticOracle<T>> StochasticOracle<T> for Counted<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn meta(&self) -> &OracleMeta<T> {
        self.inner.meta()
    }

    fn eval_pair(
        &self,
        x: ArrayView1<T>,
        y: ArrayView1<T>,
        noise: &mut RngState,
    ) -> Result<(T, T)> {
        let out = self.inner.eval_pair(x, y, noise)?;
        self.counter.record(2);
        Ok(out)
    }

    fn expected_value(&self, x: ArrayView1<T>) -> Option<T> {
        self.inner.expected_value(x)
    }

    fn smoothed_gradient(&self, x: ArrayView1<T>, tau: T) -> Option<Array1<T>> {
        self.inner.smoothed_gradient(x, tau)
    }
}

pub(crate) fn check_point<T: Scalar>(dim: usize, x: &ArrayView1<T>) -> Result<()> {
    if x.len() != dim {
        return Err(ZoError::invalid(format!(
            "query point has dimension {}, oracle expects {dim}",
            x.len()
        )));
    }
    Ok(())
}
