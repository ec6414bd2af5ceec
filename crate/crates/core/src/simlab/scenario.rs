use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::basis::{integrate_unit, project_coeffs, BasisFamily, CoefficientVector};
use crate::error::{FsgdError, Result};
use crate::estimator::Sample;

/// Covariate distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dgp {
    /// Independent uniform coordinates on `[0, 1]`.
    UniformCube,
    /// `X_k = (U_{k-1} + U_k) / 2` with `U_0 = U_p`.
    MovingAverage,
    /// Independent uniform coordinates on `[a, b]`.
    UniformInterval { a: f64, b: f64 },
}

/// Ground-truth regression function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// `5 + sum_k B4(x_k)`.
    Bernoulli4Additive,
    /// `B4(x)`, one covariate.
    Bernoulli4Univariate,
}

impl Target {
    /// Sobolev smoothness of each component.
    pub fn smoothness(self) -> f64 {
        2.0
    }

    /// `-2s/(2s+1)`.
    pub fn minimax_slope(self) -> f64 {
        let s = self.smoothness();
        -2.0 * s / (2.0 * s + 1.0)
    }
}

/// Fourth Bernoulli polynomial `x^4 - 2x^3 + x^2 - 1/30`.
pub fn bernoulli4(x: f64) -> f64 {
    let x2 = x * x;
    x2 * x2 - 2.0 * x2 * x + x2 - 1.0 / 30.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub p: usize,
    pub dgp: Dgp,
    pub target: Target,
    pub noise_halfwidth: f64,
    pub n: u64,
    pub reps: u64,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(FsgdError::Config("p must be >= 1".into()));
        }
        if let Dgp::UniformInterval { a, b } = self.dgp {
            if !(0.0 <= a && a < b && b <= 1.0) {
                return Err(FsgdError::Config(format!(
                    "interval [{a}, {b}] must satisfy 0 <= a < b <= 1"
                )));
            }
        }
        if self.target == Target::Bernoulli4Univariate && self.p != 1 {
            return Err(FsgdError::Config("the univariate target needs p = 1".into()));
        }
        if !(self.noise_halfwidth >= 0.0) || !self.noise_halfwidth.is_finite() {
            return Err(FsgdError::Config("noise half-width must be finite and >= 0".into()));
        }
        if self.n == 0 || self.reps == 0 {
            return Err(FsgdError::Config("n and reps must be >= 1".into()));
        }
        Ok(())
    }

    pub fn draw_x<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self.dgp {
            Dgp::UniformCube => (0..self.p).map(|_| rng.random::<f64>()).collect(),
            Dgp::UniformInterval { a, b } => {
                (0..self.p).map(|_| a + (b - a) * rng.random::<f64>()).collect()
            }
            Dgp::MovingAverage => {
                let u: Vec<f64> = (0..self.p).map(|_| rng.random::<f64>()).collect();
                moving_average(&u)
            }
        }
    }

    /// `eps ~ Uniform[-w, w]`.
    pub fn draw_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.noise_halfwidth * (2.0 * rng.random::<f64>() - 1.0)
    }

    pub fn target_value(&self, x: &[f64]) -> f64 {
        match self.target {
            Target::Bernoulli4Additive => 5.0 + x.iter().map(|&v| bernoulli4(v)).sum::<f64>(),
            Target::Bernoulli4Univariate => bernoulli4(x[0]),
        }
    }

    pub fn draw_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Sample {
        let x = self.draw_x(rng);
        let y = self.target_value(&x) + self.draw_noise(rng);
        Sample::new(x, y).expect("generated covariates lie in the unit cube")
    }

    /// Intercept and per-component expansion of the target.
    pub fn truth(&self, basis: &BasisFamily, tail_cut: usize, quadrature_points: usize) -> Truth {
        let (alpha, component): (f64, fn(f64) -> f64) = match self.target {
            Target::Bernoulli4Additive => (5.0, bernoulli4),
            Target::Bernoulli4Univariate => (0.0, bernoulli4),
        };
        let theta = project_coeffs(component, basis, tail_cut, quadrature_points);
        let norm_sq = integrate_unit(|x| component(x) * component(x), quadrature_points);
        let captured: f64 = theta.iter().map(|t| t * t).sum();
        let tail = (norm_sq - captured).max(0.0);
        Truth {
            alpha,
            components: vec![theta; self.p],
            tails: vec![tail; self.p],
        }
    }
}

/// Circular moving average of independent uniforms.
pub fn moving_average(u: &[f64]) -> Vec<f64> {
    let p = u.len();
    (0..p)
        .map(|k| {
            let prev = if k == 0 { u[p - 1] } else { u[k - 1] };
            (prev + u[k]) / 2.0
        })
        .collect()
}

/// Target expansion: `f = alpha + sum_k sum_j theta[k][j] psi_j(x_k)`, truncated at
/// `tail_cut` with the discarded squared mass per component kept in `tails`.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub alpha: f64,
    pub components: Vec<CoefficientVector>,
    pub tails: Vec<f64>,
}

impl Truth {
    pub fn tail_cut(&self) -> usize {
        self.components.iter().map(|c| c.len()).min().unwrap_or(0)
    }

    /// `||f||^2` under the uniform distribution.
    pub fn norm_sq(&self) -> f64 {
        self.alpha * self.alpha
            + self
                .components
                .iter()
                .zip(&self.tails)
                .map(|(c, t)| c.iter().map(|v| v * v).sum::<f64>() + t)
                .sum::<f64>()
    }
}

/// Purpose of a random stream within one replication.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Data = 0,
    Evaluation = 1,
}

/// Independent ChaCha8 substream for `(seed, replication, purpose)`.
///
/// Streams are addressed by counter, so a replication draws the same numbers
/// no matter which thread runs it or in what order.
pub fn substream(seed: u64, rep: u64, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep.wrapping_mul(2).wrapping_add(purpose as u64));
    rng
}
