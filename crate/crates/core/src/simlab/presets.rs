//! Named scenarios with their estimator settings.

use super::scenario::{Dgp, Scenario, Target};
use crate::error::{FsgdError, Result};
use crate::learner::{EstimatorKind, EstimatorSpec};
use crate::lepski::LepskiConfig;
use crate::schedule::Schedule;
use crate::sieve::SieveRule;

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: String,
    pub scenario: Scenario,
    pub include_intercept: bool,
    pub estimator: EstimatorKind,
    pub fsgd: Schedule,
    pub sieve: Schedule,
    pub omega: f64,
    pub lepski: LepskiConfig,
}

impl Preset {
    pub fn spec(&self, kind: EstimatorKind) -> EstimatorSpec {
        match kind {
            EstimatorKind::Fsgd => EstimatorSpec::Fsgd {
                schedule: self.fsgd.clone(),
            },
            EstimatorKind::Sieve => EstimatorSpec::Sieve {
                schedule: self.sieve.clone(),
                omega: self.omega,
                averaging: true,
            },
            EstimatorKind::Lepski => EstimatorSpec::Lepski { cfg: self.lepski },
        }
    }
}

pub const NAMES: &[&str] = &[
    "fig1a-p<N>",
    "fig1b-p5",
    "fig1b-p30",
    "fig1b-p80",
    "fig2",
    "fig2-p<N>",
    "fig3a",
    "fig3b",
    "fig4a",
    "fig4b",
];

const SMOOTHNESS: f64 = 2.0;

fn base(name: &str, scenario: Scenario, intercept: bool, fsgd: Schedule) -> Preset {
    Preset {
        name: name.to_string(),
        scenario,
        include_intercept: intercept,
        estimator: EstimatorKind::Fsgd,
        fsgd,
        sieve: SieveRule::default().schedule(),
        omega: SMOOTHNESS,
        lepski: LepskiConfig {
            s0: 0.5,
            s1: 8.0,
            a: 3.0,
            b: 3.0,
        },
    }
}

fn additive(p: usize, dgp: Dgp, reps: u64) -> Scenario {
    Scenario {
        p,
        dgp,
        target: Target::Bernoulli4Additive,
        noise_halfwidth: 0.02,
        n: 100_000,
        reps,
        seed: 0,
    }
}

fn univariate(dgp: Dgp, noise: f64, reps: u64) -> Scenario {
    Scenario {
        p: 1,
        dgp,
        target: Target::Bernoulli4Univariate,
        noise_halfwidth: noise,
        n: 100_000,
        reps,
        seed: 0,
    }
}

fn suffix_p(name: &str, prefix: &str) -> Option<Result<usize>> {
    name.strip_prefix(prefix).map(|rest| {
        rest.parse::<usize>()
            .ok()
            .filter(|&p| p >= 1)
            .ok_or_else(|| FsgdError::Config(format!("preset '{name}': bad dimension '{rest}'")))
    })
}

const HALF: Dgp = Dgp::UniformInterval { a: 0.25, b: 0.75 };

pub fn preset(name: &str) -> Result<Preset> {
    if let Some(p) = suffix_p(name, "fig1a-p") {
        let p = p?;
        return Ok(base(
            name,
            additive(p, Dgp::UniformCube, 20),
            true,
            Schedule::fixed_p(1.0, 0.5, SMOOTHNESS),
        ));
    }
    if let Some(p) = suffix_p(name, "fig1b-p") {
        let p = p?;
        let (a, b) = match p {
            5 => (3.0, 0.4),
            30 => (7.0, 0.4),
            80 => (15.0, 0.3),
            other => {
                return Err(FsgdError::Config(format!(
                    "preset fig1b is defined for p in {{5, 30, 80}}, got {other}"
                )))
            }
        };
        return Ok(base(
            name,
            additive(p, Dgp::MovingAverage, 20),
            true,
            Schedule::fixed_p(a, b, SMOOTHNESS),
        ));
    }
    let fig2 = |p: usize| {
        base(
            name,
            additive(p, Dgp::UniformCube, 20),
            true,
            Schedule::three_stage(p, 1.0, 5.0, 0.5, SMOOTHNESS),
        )
    };
    if name == "fig2" {
        return Ok(fig2(30));
    }
    if let Some(p) = suffix_p(name, "fig2-p") {
        return Ok(fig2(p?));
    }
    let mut out = match name {
        "fig3a" => base(
            name,
            univariate(Dgp::UniformCube, 0.02, 100),
            false,
            Schedule::fixed_p(3.0, 1.0, SMOOTHNESS),
        ),
        "fig3b" => base(name, univariate(HALF, 0.2, 100), false, Schedule::fixed_p(3.0, 0.8, SMOOTHNESS)),
        "fig4a" => {
            let mut p = base(
                name,
                univariate(Dgp::UniformCube, 0.02, 30),
                false,
                Schedule::fixed_p(3.0, 1.0, SMOOTHNESS),
            );
            p.estimator = EstimatorKind::Lepski;
            p
        }
        "fig4b" => {
            let mut p = base(name, univariate(HALF, 0.2, 30), false, Schedule::fixed_p(3.0, 0.8, SMOOTHNESS));
            p.estimator = EstimatorKind::Lepski;
            p.lepski.a = 4.0;
            p.lepski.b = 2.0;
            p
        }
        other => {
            return Err(FsgdError::Config(format!(
                "unknown scenario '{other}' (known: {})",
                NAMES.join(", ")
            )))
        }
    };
    out.name = name.to_string();
    Ok(out)
}
