//! Uniform streaming interface over the three estimators.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::basis::BasisFamily;
use crate::error::{FsgdError, Result};
use crate::estimator::{squared_loss, LossGradient, ModelState, Sample};
use crate::lepski::{self, LepskiConfig};
use crate::schedule::Schedule;
use crate::sieve::SieveState;

/// Something that consumes one sample at a time and exposes a predictive model.
pub trait OnlineLearner: Send {
    fn observe(&mut self, sample: &Sample) -> Result<()>;

    /// The estimate used for prediction and evaluation.
    fn model(&self) -> &ModelState;

    fn steps(&self) -> u64 {
        self.model().step_count()
    }

    /// Smoothness selected at each step, for learners that record it.
    fn chosen_smoothness(&self) -> Option<&[f64]> {
        None
    }
}

pub struct FsgdLearner {
    state: ModelState,
    schedule: Schedule,
    loss: Arc<dyn LossGradient>,
}

impl FsgdLearner {
    pub fn new(state: ModelState, schedule: Schedule) -> Self {
        Self {
            state,
            schedule,
            loss: squared_loss(),
        }
    }

    pub fn with_loss(mut self, loss: Arc<dyn LossGradient>) -> Self {
        self.loss = loss;
        self
    }

    pub fn into_state(self) -> ModelState {
        self.state
    }
}

impl OnlineLearner for FsgdLearner {
    fn observe(&mut self, sample: &Sample) -> Result<()> {
        let at = self.schedule.at(self.state.step_count() + 1);
        self.state.step(sample, at.gamma, at.trunc, self.loss.as_ref())?;
        Ok(())
    }

    fn model(&self) -> &ModelState {
        &self.state
    }
}

pub struct SieveLearner {
    state: SieveState,
    schedule: Schedule,
    loss: Arc<dyn LossGradient>,
}

impl SieveLearner {
    pub fn new(state: SieveState, schedule: Schedule) -> Self {
        Self {
            state,
            schedule,
            loss: squared_loss(),
        }
    }

    pub fn state(&self) -> &SieveState {
        &self.state
    }
}

impl OnlineLearner for SieveLearner {
    fn observe(&mut self, sample: &Sample) -> Result<()> {
        let at = self.schedule.at(self.state.step_count() + 1);
        self.state.step(sample, at.gamma, at.trunc, self.loss.as_ref())?;
        Ok(())
    }

    fn model(&self) -> &ModelState {
        self.state.average()
    }
}

pub struct LepskiLearner {
    state: ModelState,
    cfg: LepskiConfig,
    loss: Arc<dyn LossGradient>,
    chosen: Option<Vec<f64>>,
}

impl LepskiLearner {
    pub fn new(state: ModelState, cfg: LepskiConfig) -> Self {
        Self {
            state,
            cfg,
            loss: squared_loss(),
            chosen: None,
        }
    }

    /// Keep the selected smoothness of every step.
    pub fn recording(mut self) -> Self {
        self.chosen = Some(Vec::new());
        self
    }

    pub fn chosen(&self) -> Option<&[f64]> {
        self.chosen.as_deref()
    }

    pub fn into_state(self) -> ModelState {
        self.state
    }
}

impl OnlineLearner for LepskiLearner {
    fn observe(&mut self, sample: &Sample) -> Result<()> {
        let sel = lepski::select_and_step(&mut self.state, sample, &self.cfg, self.loss.as_ref())?;
        if let Some(log) = self.chosen.as_mut() {
            log.push(sel.s);
        }
        Ok(())
    }

    fn model(&self) -> &ModelState {
        &self.state
    }

    fn chosen_smoothness(&self) -> Option<&[f64]> {
        self.chosen()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Fsgd,
    Sieve,
    Lepski,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Fsgd => "fsgd",
            EstimatorKind::Sieve => "sieve",
            EstimatorKind::Lepski => "lepski",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = FsgdError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fsgd" => Ok(EstimatorKind::Fsgd),
            "sieve" => Ok(EstimatorKind::Sieve),
            "lepski" => Ok(EstimatorKind::Lepski),
            other => Err(FsgdError::Config(format!("unknown estimator '{other}'"))),
        }
    }
}

/// Everything needed to build a fresh learner for one replication.
#[derive(Debug, Clone)]
pub enum EstimatorSpec {
    Fsgd {
        schedule: Schedule,
    },
    Sieve {
        schedule: Schedule,
        omega: f64,
        averaging: bool,
    },
    Lepski {
        cfg: LepskiConfig,
    },
}

impl EstimatorSpec {
    pub fn kind(&self) -> EstimatorKind {
        match self {
            EstimatorSpec::Fsgd { .. } => EstimatorKind::Fsgd,
            EstimatorSpec::Sieve { .. } => EstimatorKind::Sieve,
            EstimatorSpec::Lepski { .. } => EstimatorKind::Lepski,
        }
    }

    pub fn build(
        &self,
        p: usize,
        include_intercept: bool,
        basis: BasisFamily,
    ) -> Result<Box<dyn OnlineLearner>> {
        let state = ModelState::new(p, include_intercept, basis)?;
        Ok(match self {
            EstimatorSpec::Fsgd { schedule } => Box::new(FsgdLearner::new(state, schedule.clone())),
            EstimatorSpec::Sieve {
                schedule,
                omega,
                averaging,
            } => {
                let mut sieve = SieveState::new(p, include_intercept, basis, *omega)?;
                if !averaging {
                    sieve = sieve.without_averaging();
                }
                Box::new(SieveLearner::new(sieve, schedule.clone()))
            }
            EstimatorSpec::Lepski { cfg } => {
                cfg.check()?;
                Box::new(LepskiLearner::new(state, *cfg))
            }
        })
    }
}
