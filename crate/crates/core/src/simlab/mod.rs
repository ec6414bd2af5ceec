//! Synthetic designs, ground truth and error curves.

pub mod experiment;
pub mod mse;
pub mod presets;
pub mod scenario;

pub use experiment::{
    log_grid, loglog_slope, run_experiment, window_slope, EvalReport, Evaluator, ExperimentConfig,
    ReportRow, SlopeWindow,
};
pub use presets::{preset, Preset};
pub use mse::{mse_monte_carlo, mse_quadrature, EvalPoints, McEstimate};
pub use scenario::{bernoulli4, moving_average, substream, Dgp, Scenario, Stream, Target, Truth};
