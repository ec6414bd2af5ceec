//! Streaming functional SGD for additive nonparametric regression over a
//! centered trigonometric basis, with adaptive smoothness selection, a
//! Sieve-SGD baseline and a simulation harness.

pub mod basis;
pub mod checkpoint;
pub mod cli;
pub mod data;
pub mod error;
pub mod estimator;
pub mod learner;
pub mod lepski;
pub mod schedule;
pub mod sieve;
pub mod simlab;

pub use basis::{BasisFamily, BasisKind, CoefficientVector};
pub use error::{FsgdError, Result};
pub use estimator::{fit_stream, LossGradient, ModelState, Sample, Snapshot, SquaredLoss};
pub use learner::{EstimatorKind, EstimatorSpec, OnlineLearner};
pub use lepski::LepskiConfig;
pub use schedule::{Schedule, StepParams};
pub use sieve::{SieveRule, SieveState};
