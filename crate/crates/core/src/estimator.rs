//! F-SGD model state and the coefficient-space form of the functional update.
//!
//! A step with learning rate `gamma` and truncation `J` moves the estimate by
//! `gamma * r * (1 + sum_k sum_{j<=J} psi_j(x_k) psi_j(.))`, where `r` is the
//! negative loss gradient at the current prediction. In coefficient space
//! that is `alpha += gamma r` and `beta[k][j] += gamma r psi_j(x_k)`.

use std::fmt;
use std::sync::Arc;

use crate::basis::{check_unit, BasisFamily};
use crate::error::{FsgdError, Result};
use crate::schedule::Schedule;

/// One observation `(x, y)` with `x` in `[0, 1]^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    x: Vec<f64>,
    y: f64,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: f64) -> Result<Self> {
        for &xi in &x {
            check_unit(xi)?;
        }
        if !y.is_finite() {
            return Err(FsgdError::Domain(format!("response {y} is not finite")));
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// Derivative of a convex loss `l(u, v)` in its second argument.
pub trait LossGradient: Send + Sync {
    fn name(&self) -> &str;

    /// `d l(u, v) / d v` evaluated at response `u` and prediction `v`.
    fn gradient(&self, u: f64, v: f64) -> f64;
}

/// `l(u, v) = (u - v)^2 / 2`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SquaredLoss;

impl LossGradient for SquaredLoss {
    fn name(&self) -> &str {
        "squared"
    }

    fn gradient(&self, u: f64, v: f64) -> f64 {
        -(u - v)
    }
}

/// Basis values `psi_j(x_k)` laid out row-major, one row of `width` per coordinate.
#[derive(Default, Clone)]
pub(crate) struct BasisRows {
    width: usize,
    values: Vec<f64>,
}

impl BasisRows {
    pub(crate) fn fill(&mut self, basis: &BasisFamily, x: &[f64], width: usize) {
        self.width = width;
        self.values.clear();
        self.values.resize(width * x.len(), 0.0);
        for (row, &xk) in self.values.chunks_mut(width.max(1)).zip(x) {
            basis.fill_prefix(xk, &mut row[..width]);
        }
    }

    #[inline]
    pub(crate) fn row(&self, k: usize, len: usize) -> &[f64] {
        let start = k * self.width;
        &self.values[start..start + len]
    }
}

/// Intercept, per-component coefficient arrays and step counter.
#[derive(Clone)]
pub struct ModelState {
    basis: BasisFamily,
    include_intercept: bool,
    alpha: f64,
    beta: Vec<Vec<f64>>,
    step: u64,
    scratch: BasisRows,
}

impl PartialEq for ModelState {
    fn eq(&self, other: &Self) -> bool {
        self.basis == other.basis
            && self.include_intercept == other.include_intercept
            && self.alpha.to_bits() == other.alpha.to_bits()
            && self.step == other.step
            && self.beta.len() == other.beta.len()
            && self.beta.iter().zip(&other.beta).all(|(a, b)| {
                a.len() == b.len() && a.iter().zip(b).all(|(u, v)| u.to_bits() == v.to_bits())
            })
    }
}

impl fmt::Debug for ModelState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelState")
            .field("basis", &self.basis.kind())
            .field("p", &self.p())
            .field("include_intercept", &self.include_intercept)
            .field("alpha", &self.alpha)
            .field("beta", &self.beta)
            .field("step", &self.step)
            .finish()
    }
}

impl ModelState {
    /// Zero model `f_0 = 0` over `p` covariates.
    pub fn new(p: usize, include_intercept: bool, basis: BasisFamily) -> Result<Self> {
        if p == 0 {
            return Err(FsgdError::Config("number of covariates must be >= 1".into()));
        }
        Ok(Self {
            basis,
            include_intercept,
            alpha: 0.0,
            beta: vec![Vec::new(); p],
            step: 0,
            scratch: BasisRows::default(),
        })
    }

    /// Rebuilds a state from stored parts, checking every invariant.
    pub fn from_parts(
        basis: BasisFamily,
        include_intercept: bool,
        alpha: f64,
        beta: Vec<Vec<f64>>,
        step: u64,
    ) -> Result<Self> {
        if beta.is_empty() {
            return Err(FsgdError::Config("number of covariates must be >= 1".into()));
        }
        if !alpha.is_finite() || beta.iter().flatten().any(|b| !b.is_finite()) {
            return Err(FsgdError::Domain("coefficients must be finite".into()));
        }
        if !include_intercept && alpha != 0.0 {
            return Err(FsgdError::Domain(
                "intercept must be zero when the intercept is disabled".into(),
            ));
        }
        Ok(Self {
            basis,
            include_intercept,
            alpha,
            beta,
            step,
            scratch: BasisRows::default(),
        })
    }

    pub fn basis(&self) -> &BasisFamily {
        &self.basis
    }

    pub fn p(&self) -> usize {
        self.beta.len()
    }

    pub fn include_intercept(&self) -> bool {
        self.include_intercept
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> &[Vec<f64>] {
        &self.beta
    }

    /// Number of observations consumed.
    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Longest stored coefficient array.
    pub fn max_len(&self) -> usize {
        self.beta.iter().map(Vec::len).max().unwrap_or(0)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.p() {
            return Err(FsgdError::DimensionMismatch {
                expected: self.p(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `alpha + sum_k sum_j beta[k][j] psi_j(x_k)` over the stored coefficients.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        for &xk in x {
            check_unit(xk)?;
        }
        let mut rows = BasisRows::default();
        Ok(self.predict_with(x, &mut rows))
    }

    /// Prediction for an already validated `x`, reusing `rows` as workspace.
    pub(crate) fn predict_with(&self, x: &[f64], rows: &mut BasisRows) -> f64 {
        rows.fill(&self.basis, x, self.max_len());
        self.value_from_rows(rows)
    }

    fn value_from_rows(&self, rows: &BasisRows) -> f64 {
        let mut total = self.alpha;
        for (k, coeffs) in self.beta.iter().enumerate() {
            let psi = rows.row(k, coeffs.len());
            total += coeffs.iter().zip(psi).map(|(b, p)| b * p).sum::<f64>();
        }
        total
    }

    /// One F-SGD update with learning rate `gamma` and truncation `trunc`.
    ///
    /// Returns the residual `r = -g(y, f(x))` computed before the update. On
    /// divergence the state is left untouched.
    pub fn step(
        &mut self,
        sample: &Sample,
        gamma: f64,
        trunc: usize,
        loss: &dyn LossGradient,
    ) -> Result<f64> {
        self.step_weighted(sample, gamma, trunc, loss, |_| 1.0)
    }

    /// Update where the increment of basis index `j` is scaled by `weight(j)`.
    pub(crate) fn step_weighted<W: Fn(usize) -> f64>(
        &mut self,
        sample: &Sample,
        gamma: f64,
        trunc: usize,
        loss: &dyn LossGradient,
        weight: W,
    ) -> Result<f64> {
        self.check_dim(sample.x())?;
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(FsgdError::Domain(format!("learning rate {gamma} must be finite and >= 0")));
        }
        let next = self.step + 1;
        let width = self.max_len().max(trunc);
        let mut rows = std::mem::take(&mut self.scratch);
        rows.fill(&self.basis, sample.x(), width);
        let fitted = self.value_from_rows(&rows);
        let r = -loss.gradient(sample.y(), fitted);
        let scale = gamma * r;

        let diverged = !r.is_finite()
            || !scale.is_finite()
            || (self.include_intercept && !(self.alpha + scale).is_finite())
            || self.beta.iter().enumerate().any(|(k, coeffs)| {
                let psi = rows.row(k, trunc);
                psi.iter().enumerate().any(|(j, p)| {
                    let old = coeffs.get(j).copied().unwrap_or(0.0);
                    !(old + scale * weight(j + 1) * p).is_finite()
                })
            });
        if diverged {
            self.scratch = rows;
            return Err(FsgdError::Divergence { step: next });
        }

        if self.include_intercept {
            self.alpha += scale;
        }
        for (k, coeffs) in self.beta.iter_mut().enumerate() {
            if coeffs.len() < trunc {
                coeffs.resize(trunc, 0.0);
            }
            let psi = rows.row(k, trunc);
            for (j, (b, p)) in coeffs.iter_mut().zip(psi).enumerate() {
                *b += scale * weight(j + 1) * p;
            }
        }
        self.step = next;
        self.scratch = rows;
        Ok(r)
    }

    /// Sets the step counter; used when an outer rule owns the iteration count.
    pub(crate) fn set_step(&mut self, step: u64) {
        self.step = step;
    }

    /// Coefficientwise `self = a * self + b * other`, growing arrays as needed.
    pub(crate) fn blend(&mut self, a: f64, other: &ModelState, b: f64) {
        self.alpha = a * self.alpha + b * other.alpha;
        for (mine, theirs) in self.beta.iter_mut().zip(&other.beta) {
            if mine.len() < theirs.len() {
                mine.resize(theirs.len(), 0.0);
            }
            for (j, m) in mine.iter_mut().enumerate() {
                *m = a * *m + b * theirs.get(j).copied().unwrap_or(0.0);
            }
        }
    }
}

/// Deep copy of the model taken after a given number of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: u64,
    pub state: ModelState,
}

/// Folds [`ModelState::step`] over `stream` with `(gamma_i, J_i)` taken from
/// `schedule` at `i = state.step + 1, state.step + 2, ...`.
///
/// `snapshot_steps` must be sorted; a snapshot is recorded whenever the step
/// counter reaches one of its values.
pub fn fit_stream<I>(
    state: &mut ModelState,
    stream: I,
    schedule: &Schedule,
    loss: &dyn LossGradient,
    snapshot_steps: &[u64],
) -> Result<Vec<Snapshot>>
where
    I: IntoIterator<Item = Sample>,
{
    let mut snapshots = Vec::new();
    let start = state.step_count();
    let mut pending = snapshot_steps.iter().copied().skip_while(|&s| s <= start).peekable();
    for sample in stream {
        let i = state.step_count() + 1;
        let params = schedule.at(i);
        state.step(&sample, params.gamma, params.trunc, loss)?;
        while let Some(&want) = pending.peek() {
            if want > state.step_count() {
                break;
            }
            if want == state.step_count() {
                snapshots.push(Snapshot {
                    step: want,
                    state: state.clone(),
                });
            }
            pending.next();
        }
    }
    Ok(snapshots)
}

/// Shared handle to a loss; the squared loss is the default everywhere.
pub fn squared_loss() -> Arc<dyn LossGradient> {
    Arc::new(SquaredLoss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::SQRT_2;

    fn trig() -> BasisFamily {
        BasisFamily::trigonometric()
    }

    #[test]
    fn zero_state_predicts_zero() {
        let s = ModelState::new(3, true, trig()).unwrap();
        assert_eq!(s.predict(&[0.1, 0.5, 0.9]).unwrap(), 0.0);
    }

    #[test]
    fn predict_example() {
        let s = ModelState::from_parts(trig(), true, 0.5, vec![vec![SQRT_2 / 2.0]], 0).unwrap();
        assert_abs_diff_eq!(s.predict(&[0.25]).unwrap(), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn predict_dimension_mismatch() {
        let s = ModelState::new(2, true, trig()).unwrap();
        assert_eq!(
            s.predict(&[0.1]),
            Err(FsgdError::DimensionMismatch { expected: 2, got: 1 })
        );
        assert!(matches!(s.predict(&[0.1, 1.5]), Err(FsgdError::Domain(_))));
    }

    #[test]
    fn single_step_example() {
        let mut s = ModelState::new(1, true, trig()).unwrap();
        let sample = Sample::new(vec![0.25], 1.0).unwrap();
        let r = s.step(&sample, 0.5, 1, &SquaredLoss).unwrap();
        assert_eq!(r, 1.0);
        assert_eq!(s.alpha(), 0.5);
        assert_abs_diff_eq!(s.beta()[0][0], 0.5 * SQRT_2, epsilon = 1e-15);
        assert_eq!(s.step_count(), 1);
    }

    #[test]
    fn one_step_prediction_matches_closed_form() {
        // f_1(x) = gamma * y * (1 + psi_1(x_1) psi_1(x)); at x = x_1 that is gamma y (1 + psi_1(x_1)^2).
        let mut s = ModelState::new(1, true, trig()).unwrap();
        let x1 = 0.37;
        let sample = Sample::new(vec![x1], 0.8).unwrap();
        s.step(&sample, 0.3, 1, &SquaredLoss).unwrap();
        let psi = (std::f64::consts::TAU * x1).sin() * SQRT_2;
        let want = 0.3 * 0.8 * (1.0 + psi * psi);
        assert_abs_diff_eq!(s.predict(&[x1]).unwrap(), want, epsilon = 1e-12);
    }

    #[test]
    fn zero_rate_only_advances_counter() {
        let mut s = ModelState::from_parts(trig(), false, 0.0, vec![vec![0.3, -0.1]], 7).unwrap();
        let before = s.clone();
        s.step(&Sample::new(vec![0.4], 2.0).unwrap(), 0.0, 0, &SquaredLoss).unwrap();
        assert_eq!(s.step_count(), 8);
        assert_eq!(s.beta(), before.beta());
        assert_eq!(s.alpha(), before.alpha());
    }

    #[test]
    fn intercept_disabled_keeps_alpha_zero() {
        let mut s = ModelState::new(2, false, trig()).unwrap();
        for i in 0..20 {
            let x = vec![(i as f64 * 0.07) % 1.0, 0.3];
            s.step(&Sample::new(x, 1.0).unwrap(), 0.1, 3, &SquaredLoss).unwrap();
        }
        assert_eq!(s.alpha(), 0.0);
    }

    #[test]
    fn divergence_is_reported_and_state_kept() {
        let mut s = ModelState::new(1, true, trig()).unwrap();
        let sample = Sample::new(vec![0.25], 1e308).unwrap();
        let before = s.clone();
        let err = s.step(&sample, 1e10, 2, &SquaredLoss).unwrap_err();
        assert_eq!(err, FsgdError::Divergence { step: 1 });
        assert_eq!(s, before);
    }

    #[test]
    fn negative_rate_rejected() {
        let mut s = ModelState::new(1, true, trig()).unwrap();
        let sample = Sample::new(vec![0.25], 1.0).unwrap();
        assert!(s.step(&sample, -0.1, 1, &SquaredLoss).is_err());
    }

    #[test]
    fn sample_validation() {
        assert!(Sample::new(vec![1.5], 0.0).is_err());
        assert!(Sample::new(vec![0.5], f64::INFINITY).is_err());
        assert!(Sample::new(vec![0.0, 1.0], -3.0).is_ok());
    }

    #[test]
    fn from_parts_validation() {
        assert!(ModelState::from_parts(trig(), false, 1.0, vec![vec![]], 0).is_err());
        assert!(ModelState::from_parts(trig(), true, f64::NAN, vec![vec![]], 0).is_err());
        assert!(ModelState::from_parts(trig(), true, 0.0, vec![], 0).is_err());
        assert!(ModelState::new(0, true, trig()).is_err());
    }

    #[test]
    fn truncation_discipline() {
        let mut s = ModelState::new(2, true, trig()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..50u64 {
            let trunc = (i % 4) as usize;
            let x = vec![rng.random::<f64>(), rng.random::<f64>()];
            s.step(&Sample::new(x, rng.random()).unwrap(), 0.05, trunc, &SquaredLoss)
                .unwrap();
        }
        for row in s.beta() {
            assert_eq!(row.len(), 3);
        }
        // Nothing beyond the largest truncation was ever touched.
        let mut t = ModelState::new(1, true, trig()).unwrap();
        t.step(&Sample::new(vec![0.3], 1.0).unwrap(), 0.1, 5, &SquaredLoss).unwrap();
        t.step(&Sample::new(vec![0.6], 1.0).unwrap(), 0.1, 2, &SquaredLoss).unwrap();
        assert_eq!(t.beta()[0].len(), 5);
    }

    #[test]
    fn one_step_homogeneity_from_zero() {
        let sample = Sample::new(vec![0.2, 0.7], 0.9).unwrap();
        let scaled = Sample::new(vec![0.2, 0.7], 0.9 * 4.0).unwrap();
        let mut a = ModelState::new(2, true, trig()).unwrap();
        let mut b = a.clone();
        a.step(&sample, 0.25, 4, &SquaredLoss).unwrap();
        b.step(&scaled, 0.25, 4, &SquaredLoss).unwrap();
        assert_eq!(b.alpha(), 4.0 * a.alpha());
        for (ra, rb) in a.beta().iter().zip(b.beta()) {
            for (ca, cb) in ra.iter().zip(rb) {
                assert_eq!(*cb, 4.0 * ca);
            }
        }
    }

    #[test]
    fn fit_stream_empty_and_single() {
        let mut s = ModelState::new(1, true, trig()).unwrap();
        let snaps = fit_stream(&mut s, Vec::new(), &Schedule::constant(0.5, 1), &SquaredLoss, &[1, 2]).unwrap();
        assert!(snaps.is_empty());
        assert_eq!(s, ModelState::new(1, true, trig()).unwrap());

        let sample = Sample::new(vec![0.25], 1.0).unwrap();
        let mut direct = ModelState::new(1, true, trig()).unwrap();
        direct.step(&sample, 0.5, 1, &SquaredLoss).unwrap();
        let snaps =
            fit_stream(&mut s, vec![sample], &Schedule::constant(0.5, 1), &SquaredLoss, &[1]).unwrap();
        assert_eq!(s, direct);
        assert_eq!(snaps.len(), 1);
        assert_eq!(snaps[0].state, direct);
    }

    #[test]
    fn fit_stream_snapshots_at_requested_steps() {
        let mut s = ModelState::new(1, true, trig()).unwrap();
        let samples: Vec<Sample> = (0..10)
            .map(|i| Sample::new(vec![i as f64 / 10.0], 1.0).unwrap())
            .collect();
        let snaps = fit_stream(&mut s, samples, &Schedule::fixed_p(1.0, 1.0, 2.0), &SquaredLoss, &[0, 3, 7, 10, 12])
            .unwrap();
        let steps: Vec<u64> = snaps.iter().map(|s| s.step).collect();
        assert_eq!(steps, vec![3, 7, 10]);
        assert_eq!(snaps[2].state, s);
    }
}
