//! Optimization stages: affine prealignment, coarse initialization,
//! surface-regularized pseudo-labels and the tune fit.

pub mod adam;
pub mod config;
pub mod objective;
pub mod prealign;
pub mod tune;

pub use adam::{adam_step, AdamConfig, OptimState};
pub use config::{Regularizer, TuneConfig};
pub use objective::{build_lattices, Evaluation, FitProblem, LossParts};
pub use prealign::{prealign_affine, Affine, PrealignResult};
pub use tune::{
    coarse_init, flexfit_pseudolabels, initialize, optimize, tune, AttachmentSummary, CoarseResult, FitOutcome, FlexFitResult,
    InitResult, RunReport, TuneResult,
};
