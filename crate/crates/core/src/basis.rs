//! Centered orthonormal basis families on `[0, 1]`.
//!
//! The constant function is not part of any family here: every basis function
//! integrates to zero, and the model carries its intercept separately.
//! The trigonometric family is indexed from 1 as
//!
//! ```text
//! psi_{2k-1}(x) = sqrt(2) sin(2 pi k x)
//! psi_{2k}(x)   = sqrt(2) cos(2 pi k x)
//! ```

use std::f64::consts::{SQRT_2, TAU};
use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use crate::error::{FsgdError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BasisKind {
    /// Sine/cosine pairs with the constant excluded.
    #[default]
    Trigonometric,
}

impl BasisKind {
    pub fn name(self) -> &'static str {
        match self {
            BasisKind::Trigonometric => "trig",
        }
    }
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BasisKind {
    type Err = FsgdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trig" | "trigonometric" => Ok(BasisKind::Trigonometric),
            other => Err(FsgdError::Config(format!("unknown basis '{other}'"))),
        }
    }
}

/// A centered, uniformly bounded orthonormal family `psi_1, psi_2, ...`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BasisFamily {
    kind: BasisKind,
}

impl BasisFamily {
    pub fn new(kind: BasisKind) -> Self {
        Self { kind }
    }

    pub fn trigonometric() -> Self {
        Self::new(BasisKind::Trigonometric)
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    /// Uniform bound `M >= 1` on `|psi_j(x)|`.
    pub fn bound(&self) -> f64 {
        match self.kind {
            BasisKind::Trigonometric => SQRT_2,
        }
    }

    /// Evaluates `psi_j(x)`.
    pub fn eval(&self, j: usize, x: f64) -> Result<f64> {
        if j == 0 {
            return Err(FsgdError::Domain(
                "basis index must be >= 1 (the constant is modelled as the intercept)".into(),
            ));
        }
        check_unit(x)?;
        Ok(self.eval_unchecked(j, x))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, j: usize, x: f64) -> f64 {
        match self.kind {
            BasisKind::Trigonometric => {
                let k = j.div_ceil(2) as f64;
                let arg = TAU * k * x;
                if j % 2 == 1 {
                    SQRT_2 * arg.sin()
                } else {
                    SQRT_2 * arg.cos()
                }
            }
        }
    }

    /// `[psi_1(x), ..., psi_J(x)]`.
    pub fn eval_prefix(&self, x: f64, len: usize) -> Result<Vec<f64>> {
        check_unit(x)?;
        let mut out = vec![0.0; len];
        self.fill_prefix(x, &mut out);
        Ok(out)
    }

    /// Writes `psi_1(x), ..., psi_{out.len()}(x)` into `out`. `x` is assumed valid.
    #[inline]
    pub(crate) fn fill_prefix(&self, x: f64, out: &mut [f64]) {
        match self.kind {
            BasisKind::Trigonometric => {
                for (pair_idx, pair) in out.chunks_mut(2).enumerate() {
                    let arg = TAU * (pair_idx + 1) as f64 * x;
                    pair[0] = SQRT_2 * arg.sin();
                    if let Some(c) = pair.get_mut(1) {
                        *c = SQRT_2 * arg.cos();
                    }
                }
            }
        }
    }

    /// `sum_{j <= len} psi_j(x)^2` without evaluating every term.
    ///
    /// Each full sine/cosine pair contributes exactly 2.
    pub fn squared_prefix_sum(&self, x: f64, len: usize) -> f64 {
        match self.kind {
            BasisKind::Trigonometric => {
                let pairs = len / 2;
                let mut total = 2.0 * pairs as f64;
                if len % 2 == 1 {
                    let s = (TAU * (pairs + 1) as f64 * x).sin();
                    total += 2.0 * s * s;
                }
                total
            }
        }
    }
}

pub(crate) fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(FsgdError::Domain(format!("covariate {x} outside [0, 1]")))
    }
}

/// Finite coefficient sequence `theta_1, ..., theta_J`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoefficientVector(Vec<f64>);

impl CoefficientVector {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if let Some(bad) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(FsgdError::Domain(format!(
                "coefficient {} is not finite",
                bad + 1
            )));
        }
        Ok(Self(coeffs))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for CoefficientVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// `sum_j (j^s theta_j)^2`.
pub fn sobolev_norm_sq(theta: &[f64], s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(FsgdError::Domain(format!("smoothness must be > 0, got {s}")));
    }
    Ok(theta
        .iter()
        .enumerate()
        .map(|(idx, t)| {
            let w = ((idx + 1) as f64).powf(s);
            (w * t) * (w * t)
        })
        .sum())
}

/// Composite Simpson rule for `int_0^1 f(x) dx` on `intervals` subintervals
/// (rounded up to an even count).
pub fn integrate_unit<F: Fn(f64) -> f64>(f: F, intervals: usize) -> f64 {
    let n = intervals.max(2).next_multiple_of(2);
    let h = 1.0 / n as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..n {
        let v = f(i as f64 * h);
        if i % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / 3.0 * (f(0.0) + f(1.0) + 4.0 * odd + 2.0 * even)
}

/// Expansion coefficients `theta_j = int_0^1 f psi_j` for `j = 1..=len`, by
/// composite Simpson quadrature.
pub fn project_coeffs<F: Fn(f64) -> f64>(
    f: F,
    family: &BasisFamily,
    len: usize,
    quadrature_points: usize,
) -> CoefficientVector {
    let n = quadrature_points.max(2).next_multiple_of(2);
    let h = 1.0 / n as f64;
    let mut acc = vec![0.0; len];
    let mut psi = vec![0.0; len];
    for i in 0..=n {
        let x = i as f64 * h;
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let fx = w * f(x);
        if fx == 0.0 {
            continue;
        }
        family.fill_prefix(x, &mut psi);
        for (a, p) in acc.iter_mut().zip(&psi) {
            *a += fx * p;
        }
    }
    CoefficientVector(acc.into_iter().map(|a| a * h / 3.0).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bernoulli4(x: f64) -> f64 {
        x.powi(4) - 2.0 * x.powi(3) + x * x - 1.0 / 30.0
    }

    #[test]
    fn eval_examples() {
        let b = BasisFamily::trigonometric();
        assert_abs_diff_eq!(b.eval(1, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(b.eval(2, 0.0).unwrap(), SQRT_2);
        assert_abs_diff_eq!(b.eval(1, 0.25).unwrap(), SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn eval_rejects_bad_input() {
        let b = BasisFamily::trigonometric();
        assert!(matches!(b.eval(0, 0.5), Err(FsgdError::Domain(_))));
        assert!(matches!(b.eval(1, -0.1), Err(FsgdError::Domain(_))));
        assert!(matches!(b.eval(1, 1.0 + 1e-12), Err(FsgdError::Domain(_))));
        assert!(b.eval(1, f64::NAN).is_err());
        assert!(b.eval_prefix(2.0, 3).is_err());
    }

    #[test]
    fn prefix_examples() {
        let b = BasisFamily::trigonometric();
        assert!(b.eval_prefix(0.25, 0).unwrap().is_empty());
        let v = b.eval_prefix(0.25, 2).unwrap();
        assert_abs_diff_eq!(v[0], SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1], 0.0, epsilon = 1e-15);
        assert_eq!(b.eval_prefix(0.0, 4).unwrap(), vec![0.0, SQRT_2, 0.0, SQRT_2]);
    }

    #[test]
    fn prefix_matches_pointwise_eval() {
        let b = BasisFamily::trigonometric();
        for &x in &[0.0, 0.1, 0.333, 0.5, 0.9, 1.0] {
            let v = b.eval_prefix(x, 21).unwrap();
            for (idx, val) in v.iter().enumerate() {
                assert_eq!(*val, b.eval(idx + 1, x).unwrap());
            }
        }
    }

    #[test]
    fn squared_prefix_sum_matches_direct() {
        let b = BasisFamily::trigonometric();
        for &x in &[0.0, 0.013, 0.25, 0.6, 0.999] {
            for len in 0..40 {
                let direct: f64 = b.eval_prefix(x, len).unwrap().iter().map(|p| p * p).sum();
                assert_abs_diff_eq!(b.squared_prefix_sum(x, len), direct, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sobolev_examples() {
        assert_eq!(sobolev_norm_sq(&[1.0], 2.0).unwrap(), 1.0);
        assert_eq!(sobolev_norm_sq(&[0.0, 0.5], 2.0).unwrap(), 4.0);
        assert_eq!(sobolev_norm_sq(&[], 2.0).unwrap(), 0.0);
        assert!(sobolev_norm_sq(&[1.0], 0.0).is_err());
    }

    #[test]
    fn projection_examples() {
        let b = BasisFamily::trigonometric();
        let c = project_coeffs(|x| b.eval_unchecked(1, x), &b, 2, 10_000);
        assert_abs_diff_eq!(c[0], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(c[1], 0.0, epsilon = 1e-8);

        let z = project_coeffs(|_| 0.0, &b, 3, 10_000);
        assert_eq!(&*z, &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn bernoulli4_projection_matches_fourier_series() {
        // Classical series: B4(x) = -3/pi^4 sum_k cos(2 pi k x)/k^4.
        let b = BasisFamily::trigonometric();
        let c = project_coeffs(bernoulli4, &b, 8, 100_000);
        let pi4 = std::f64::consts::PI.powi(4);
        for k in 1..=4usize {
            let cos_coeff = -3.0 / (SQRT_2 * pi4 * (k as f64).powi(4));
            assert_abs_diff_eq!(c[2 * k - 1], cos_coeff, epsilon = 1e-10);
            assert_abs_diff_eq!(c[2 * k - 2], 0.0, epsilon = 1e-10);
        }
        // Frozen from the quadrature oracle.
        assert_abs_diff_eq!(c[1], -0.021_777_4, epsilon = 1e-7);
    }

    #[test]
    fn centering_and_orthonormality_by_quadrature() {
        let b = BasisFamily::trigonometric();
        for j in 1..=20 {
            let mean = integrate_unit(|x| b.eval_unchecked(j, x), 100_000);
            assert!(mean.abs() <= 1e-10, "j={j} mean={mean}");
            for i in 1..=20 {
                let ip = integrate_unit(|x| b.eval_unchecked(i, x) * b.eval_unchecked(j, x), 100_000);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - want).abs() <= 1e-8, "({i},{j}) -> {ip}");
            }
        }
    }

    #[test]
    fn uniform_bound_on_grid() {
        let b = BasisFamily::trigonometric();
        let m = b.bound();
        for i in 0..=10_000 {
            let x = i as f64 / 10_000.0;
            for p in b.eval_prefix(x, 40).unwrap() {
                assert!(p.abs() <= m + 1e-12);
            }
        }
    }

    #[test]
    fn basis_name_round_trip() {
        assert_eq!("trig".parse::<BasisKind>().unwrap(), BasisKind::Trigonometric);
        assert!("wavelet".parse::<BasisKind>().is_err());
    }

    #[test]
    fn coefficient_vector_rejects_nan() {
        assert!(CoefficientVector::new(vec![1.0, f64::NAN]).is_err());
        assert_eq!(CoefficientVector::zeros(2).len(), 2);
    }
}
