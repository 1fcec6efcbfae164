//! ZO-clipped-SSTM, its restarted variant, unclipped baselines and parameter
//! calculators.

mod params;
mod restart;
mod schedule;
mod sgd;
mod sstm;
mod trace;

pub use params::{batch_cap, estimator_sigma, theoretical_params_convex, ConvexParams};
pub use restart::{
    r_zo_clipped_sstm, restart_schedule, BatchPolicy, RestartConfig, RestartProblem, RestartRun,
    RestartSchedule, StageParams,
};
pub use schedule::{ClipPolicy, SstmSchedule, Step};
pub use sgd::{zo_sgd, SgdConfig};
pub use sstm::{zo_clipped_sstm, zo_sstm, SstmConfig, SstmState, DIVERGENCE_NORM};
pub use trace::{Trace, TraceRecord};
