//! Gradient-free stochastic convex optimization under heavy-tailed noise.
//!
//! The crate is built around a two-point zeroth-order oracle: a black box that
//! returns `f(x, ξ)` and `f(y, ξ)` for one shared noise draw `ξ`. On top of it
//! sit
//!
//! - [`randkit`]: seeded sphere/ball directions and symmetric α-stable noise,
//! - [`oracle`]: the oracle trait, the problem zoo and an adversarial wrapper,
//! - [`gradest`]: randomized smoothing, two-point and batched gradient
//!   estimators, and norm clipping,
//! - [`optimizers`]: ZO-clipped-SSTM, its restarted variant, the unclipped
//!   baselines and the parameter calculators,
//! - [`verify`]: Monte-Carlo checks of the moment and smoothing bounds.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`). The `*F64`
//! aliases at the crate root name the double-precision instantiations used by
//! the benchmark harness.
//!
//! ```
//! use zoclip::{clip, Vector};
//! use ndarray::array;
//!
//! let g: Vector = array![3.0, 4.0];
//! assert_eq!(clip(&g, 2.5).unwrap(), array![1.5, 2.0]);
//! ```

pub mod error;
pub mod gradest;
pub mod optimizers;
pub mod oracle;
pub mod randkit;
mod scalar;
pub mod verify;

pub use error::{Result, ZoError};
pub use gradest::{
    clip, estimate_gradient, estimate_gradient_batched, smoothed_value_mc, GradEstimate,
    MonteCarloMean, SmoothingParams,
};
pub use optimizers::{
    batch_cap, r_zo_clipped_sstm, restart_schedule, theoretical_params_convex, zo_clipped_sstm,
    zo_sgd, zo_sstm, ClipPolicy, ConvexParams, RestartConfig, RestartRun, RestartSchedule,
    SgdConfig, SstmConfig, SstmSchedule, SstmState, StageParams, Trace, TraceRecord,
};
pub use oracle::{
    admissible_noise_level, CallCounter, HeavyTailLsq, NoiseSetting, NoiseSpec, OracleMeta,
    ProblemSpec, Quadratic, StochasticOracle,
};
pub use randkit::{RngState, Stream};
pub use scalar::Scalar;

/// Dense vector of the optimization variable.
pub type Vector<T = f64> = ndarray::Array1<T>;

pub type HeavyTailLsqF64 = HeavyTailLsq<f64>;
pub type HeavyTailLsqF32 = HeavyTailLsq<f32>;
pub type QuadraticF64 = Quadratic<f64>;
pub type QuadraticF32 = Quadratic<f32>;
pub type SstmConfigF64 = SstmConfig<f64>;
pub type SgdConfigF64 = SgdConfig<f64>;
pub type RestartConfigF64 = RestartConfig<f64>;
