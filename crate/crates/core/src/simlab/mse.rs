//! Squared `L2(P_X)` distance between a fitted model and the target.

use rand::Rng;

use super::scenario::{Dgp, Scenario, Truth};
use crate::error::{FsgdError, Result};
use crate::estimator::{BasisRows, ModelState};

/// Exact coefficient-space MSE under the uniform cube.
///
/// By Parseval and centering, `||f_hat - f||^2 = (alpha_hat - alpha)^2 +
/// sum_k sum_j (beta_kj - theta_kj)^2`. Coefficients past the truth's cut are
/// accounted for by the stored tail mass of each component.
pub fn mse_quadrature(state: &ModelState, scenario: &Scenario, truth: &Truth) -> Result<f64> {
    if scenario.dgp != Dgp::UniformCube {
        return Err(FsgdError::Config(
            "coefficient-space MSE needs uniform covariates; use the Monte Carlo evaluator".into(),
        ));
    }
    if state.p() != truth.components.len() {
        return Err(FsgdError::DimensionMismatch {
            expected: truth.components.len(),
            got: state.p(),
        });
    }
    let cut = truth.tail_cut();
    if state.max_len() > cut {
        return Err(FsgdError::Config(format!(
            "model stores {} coefficients per component but the truth is cut at {cut}",
            state.max_len()
        )));
    }
    let da = state.alpha() - truth.alpha;
    let mut total = da * da;
    for ((fitted, theta), tail) in state.beta().iter().zip(&truth.components).zip(&truth.tails) {
        for (j, t) in theta.iter().enumerate() {
            let d = fitted.get(j).copied().unwrap_or(0.0) - t;
            total += d * d;
        }
        total += tail;
    }
    Ok(total)
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// A fixed set of covariate draws with their target values, reusable across
/// many models.
#[derive(Debug, Clone)]
pub struct EvalPoints {
    points: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl EvalPoints {
    pub fn draw<R: Rng + ?Sized>(scenario: &Scenario, m: usize, rng: &mut R) -> Self {
        let points: Vec<Vec<f64>> = (0..m).map(|_| scenario.draw_x(rng)).collect();
        let targets = points.iter().map(|x| scenario.target_value(x)).collect();
        Self { points, targets }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sample mean of `(f_hat(x) - f(x))^2` and `sd / sqrt(m)`.
    pub fn mse(&self, state: &ModelState) -> Result<McEstimate> {
        let m = self.points.len();
        if m < 2 {
            return Err(FsgdError::Config("Monte Carlo MSE needs at least 2 points".into()));
        }
        if let Some(x) = self.points.first() {
            if x.len() != state.p() {
                return Err(FsgdError::DimensionMismatch {
                    expected: state.p(),
                    got: x.len(),
                });
            }
        }
        let mut rows = BasisRows::default();
        // Welford accumulation keeps the variance stable for tiny errors.
        let mut mean = 0.0;
        let mut m2 = 0.0;
        for (k, (x, f)) in self.points.iter().zip(&self.targets).enumerate() {
            let d = state.predict_with(x, &mut rows) - f;
            let v = d * d;
            let delta = v - mean;
            mean += delta / (k + 1) as f64;
            m2 += delta * (v - mean);
        }
        let var = m2 / (m - 1) as f64;
        Ok(McEstimate {
            estimate: mean,
            stderr: (var / m as f64).sqrt(),
        })
    }
}

/// Monte Carlo MSE over `m` fresh covariate draws.
pub fn mse_monte_carlo<R: Rng + ?Sized>(
    state: &ModelState,
    scenario: &Scenario,
    m: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    EvalPoints::draw(scenario, m, rng).mse(state)
}
