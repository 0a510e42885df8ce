//! Redistribution of pruned-drafter probability mass for speculative decoding.
//!
//! A drafter whose vocabulary was pruned cannot propose the removed tokens.
//! This crate provides the schemes that move its mass back onto the target
//! vocabulary (token-level intersection, affinity-matrix redistribution and a
//! linear-time first-order variant), the acceptance metrics used to compare
//! them, a toy speculative decoder, and Monte-Carlo verification suites.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`.

pub mod affinity;
pub mod error;
pub mod frequency;
pub mod metrics;
pub mod prob;
pub mod rng;
pub mod samplers;
pub mod scalar;
pub mod specdec;
pub mod verify;

pub use affinity::{
    apply_exact, build_affinity, build_structured_affinity, compute_theta, estimate_covariance,
    taylor_redistribute, AffinityMatrix, CovarianceEstimate, ThetaValue,
};
pub use error::{Error, Result};
pub use frequency::{CoveragePoint, TokenFrequencyTable};
pub use metrics::{acceptance_rate, drafter_kernel, l1_distance, total_variation, KernelVector};
pub use prob::{
    draw_token, renormalize, restrict, softmax, Covariance, LogitVector, MassKind, ProbVector,
    SupportSet, VocabSpace,
};
pub use rng::RandomSource;
pub use samplers::{
    fr_prune, masked_only, rdk_redistribute, rdk_taylor_redistribute, tli_redistribute,
    top_prob_prune, PrunedDrafter, SchemeId,
};
pub use scalar::Scalar;
pub use specdec::{
    residual_distribution, run_session, speculative_decode_step, SessionStats, StepOutcome,
    ToyConditionalModel,
};
pub use verify::{Suite, VerificationReport};

pub type ProbVec = ProbVector<f64>;
pub type Logits = LogitVector<f64>;
pub type Affinity = AffinityMatrix<f64>;
pub type Covariance64 = CovarianceEstimate<f64>;
pub type ToyModel = ToyConditionalModel<f64>;
