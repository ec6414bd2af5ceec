//! Sieve-SGD baseline: an inner SGD iterate with per-basis learning-rate
//! factors `t_j = j^{-2 omega}`, and its Polyak running average used for
//! prediction.

use crate::basis::BasisFamily;
use crate::error::{FsgdError, Result};
use crate::estimator::{LossGradient, ModelState, Sample};
use crate::schedule::{Schedule, StepParams};

#[derive(Debug, Clone, PartialEq)]
pub struct SieveState {
    inner: ModelState,
    average: ModelState,
    omega: f64,
    averaging: bool,
}

impl SieveState {
    pub fn new(p: usize, include_intercept: bool, basis: BasisFamily, omega: f64) -> Result<Self> {
        if !(omega >= 0.0) || !omega.is_finite() {
            return Err(FsgdError::Config(format!("omega must be finite and >= 0, got {omega}")));
        }
        let inner = ModelState::new(p, include_intercept, basis)?;
        Ok(Self {
            average: inner.clone(),
            inner,
            omega,
            averaging: true,
        })
    }

    /// Turns Polyak averaging off; the average then tracks the inner iterate.
    pub fn without_averaging(mut self) -> Self {
        self.averaging = false;
        self
    }

    /// The inner iterate `g_i`.
    pub fn inner(&self) -> &ModelState {
        &self.inner
    }

    /// The averaged estimate `f_i` used for prediction.
    pub fn average(&self) -> &ModelState {
        &self.average
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn step_count(&self) -> u64 {
        self.inner.step_count()
    }

    /// `t_j = j^{-2 omega}`.
    pub fn rate_factor(&self, j: usize) -> f64 {
        (j as f64).powf(-2.0 * self.omega)
    }

    /// Updates `g` with the weighted rule, then sets
    /// `f_i = i/(i+1) f_{i-1} + 1/(i+1) g_i` coefficientwise.
    pub fn step(
        &mut self,
        sample: &Sample,
        gamma: f64,
        trunc: usize,
        loss: &dyn LossGradient,
    ) -> Result<f64> {
        let omega = self.omega;
        let r = self
            .inner
            .step_weighted(sample, gamma, trunc, loss, |j| (j as f64).powf(-2.0 * omega))?;
        let i = self.inner.step_count() as f64;
        if self.averaging {
            self.average.blend(i / (i + 1.0), &self.inner, 1.0 / (i + 1.0));
        } else {
            self.average = self.inner.clone();
        }
        self.average.set_step(self.inner.step_count());
        Ok(r)
    }
}

/// Parameter rule used for the comparison runs: `gamma_i = A / i`,
/// `J_i = floor(i^{exponent})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SieveRule {
    pub a: f64,
    pub exponent: f64,
}

impl Default for SieveRule {
    fn default() -> Self {
        Self { a: 3.0, exponent: 0.21 }
    }
}

impl SieveRule {
    pub fn at(&self, i: u64) -> StepParams {
        let fi = i as f64;
        StepParams {
            gamma: self.a / fi,
            trunc: fi.powf(self.exponent).floor() as usize,
        }
    }

    pub fn schedule(self) -> Schedule {
        Schedule::custom("sieve", move |i| self.at(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::SquaredLoss;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn trig() -> BasisFamily {
        BasisFamily::trigonometric()
    }

    fn random_sample(rng: &mut ChaCha8Rng, p: usize) -> Sample {
        let x: Vec<f64> = (0..p).map(|_| rng.random()).collect();
        let y = x.iter().map(|v| (5.0 * v).cos()).sum::<f64>() + 0.1 * (rng.random::<f64>() - 0.5);
        Sample::new(x, y).unwrap()
    }

    #[test]
    fn first_step_average_is_half_inner() {
        let mut s = SieveState::new(1, true, trig(), 2.0).unwrap();
        s.step(&Sample::new(vec![0.3], 1.0).unwrap(), 0.5, 3, &SquaredLoss).unwrap();
        assert_eq!(s.average().alpha(), 0.5 * s.inner().alpha());
        for (a, g) in s.average().beta()[0].iter().zip(&s.inner().beta()[0]) {
            assert_eq!(*a, 0.5 * g);
        }
    }

    #[test]
    fn unit_factor_for_first_basis_function() {
        let s = SieveState::new(1, true, trig(), 2.0).unwrap();
        assert_eq!(s.rate_factor(1), 1.0);
        assert_eq!(s.rate_factor(2), 1.0 / 16.0);

        let sample = Sample::new(vec![0.3], 1.0).unwrap();
        let mut sieve = SieveState::new(1, true, trig(), 2.0).unwrap();
        let mut plain = ModelState::new(1, true, trig()).unwrap();
        sieve.step(&sample, 0.5, 1, &SquaredLoss).unwrap();
        plain.step(&sample, 0.5, 1, &SquaredLoss).unwrap();
        assert_eq!(sieve.inner().beta(), plain.beta());
    }

    #[test]
    fn polyak_identity() {
        // f_n = (sum_{i=1}^n g_i) / (n + 1), checked by unrolling.
        for &p in &[1usize, 3] {
            let mut rng = ChaCha8Rng::seed_from_u64(p as u64);
            let mut s = SieveState::new(p, true, trig(), 1.5).unwrap();
            let n = 100;
            let mut alpha_sum = 0.0;
            let mut beta_sum: Vec<Vec<f64>> = vec![Vec::new(); p];
            for i in 1..=n {
                let sample = random_sample(&mut rng, p);
                let rule = SieveRule::default().at(i);
                s.step(&sample, rule.gamma, rule.trunc + 1, &SquaredLoss).unwrap();
                alpha_sum += s.inner().alpha();
                for (acc, row) in beta_sum.iter_mut().zip(s.inner().beta()) {
                    acc.resize(row.len().max(acc.len()), 0.0);
                    for (a, b) in acc.iter_mut().zip(row) {
                        *a += b;
                    }
                }
                let denom = (i + 1) as f64;
                assert!((s.average().alpha() - alpha_sum / denom).abs() <= 1e-10);
                for (acc, row) in beta_sum.iter().zip(s.average().beta()) {
                    for (a, b) in acc.iter().zip(row) {
                        assert!((a / denom - b).abs() <= 1e-10);
                    }
                }
                assert_eq!(s.average().step_count(), s.inner().step_count());
            }
        }
    }

    #[test]
    fn unit_rates_without_averaging_reproduce_fsgd() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut sieve = SieveState::new(2, true, trig(), 0.0).unwrap().without_averaging();
        let mut plain = ModelState::new(2, true, trig()).unwrap();
        let sched = Schedule::fixed_p(2.0, 1.0, 1.0);
        for i in 1..=200 {
            let sample = random_sample(&mut rng, 2);
            let at = sched.at(i);
            sieve.step(&sample, at.gamma, at.trunc, &SquaredLoss).unwrap();
            plain.step(&sample, at.gamma, at.trunc, &SquaredLoss).unwrap();
            assert_eq!(sieve.inner(), &plain);
            assert_eq!(sieve.average(), &plain);
        }
    }

    #[test]
    fn average_lengths_cover_inner() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = SieveState::new(1, false, trig(), 2.0).unwrap();
        for i in 1..=64u64 {
            let rule = SieveRule::default().at(i);
            s.step(&random_sample(&mut rng, 1), rule.gamma, rule.trunc, &SquaredLoss).unwrap();
            assert!(s.average().beta()[0].len() >= s.inner().beta()[0].len());
        }
    }

    #[test]
    fn rule_values() {
        let r = SieveRule::default();
        assert_eq!(r.at(1), StepParams { gamma: 3.0, trunc: 1 });
        assert_eq!(r.at(100_000).trunc, 11);
        assert!(SieveState::new(1, true, trig(), -1.0).is_err());
    }
}
