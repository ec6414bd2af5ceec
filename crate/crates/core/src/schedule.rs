//! Learning-rate and truncation rules `i -> (gamma_i, J_i)`.

use std::fmt;
use std::sync::Arc;

/// `(gamma_i, J_i)` for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub gamma: f64,
    pub trunc: usize,
}

pub type CustomRule = Arc<dyn Fn(u64) -> StepParams + Send + Sync>;

#[derive(Clone)]
pub enum Schedule {
    /// `gamma = A / i`, `J = floor(B i^{1/(2s+1)})`.
    FixedP { a: f64, b: f64, s: f64 },
    /// Frozen start, then a transient stage, then the fixed-p style rule with `ceil`.
    ThreeStage { p: usize, a1: f64, a2: f64, b: f64, s: f64 },
    /// `gamma = A i^{-(4s+1)/(6s+1)}`, `J = ceil(i^{1/(6s+1)})`.
    Polynomial { a: f64, s: f64 },
    Constant { gamma: f64, trunc: usize },
    Custom { name: String, rule: CustomRule },
}

impl fmt::Debug for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::FixedP { a, b, s } => write!(f, "FixedP {{ a: {a}, b: {b}, s: {s} }}"),
            Schedule::ThreeStage { p, a1, a2, b, s } => {
                write!(f, "ThreeStage {{ p: {p}, a1: {a1}, a2: {a2}, b: {b}, s: {s} }}")
            }
            Schedule::Polynomial { a, s } => write!(f, "Polynomial {{ a: {a}, s: {s} }}"),
            Schedule::Constant { gamma, trunc } => {
                write!(f, "Constant {{ gamma: {gamma}, trunc: {trunc} }}")
            }
            Schedule::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

fn floor_to_usize(v: f64) -> usize {
    if v.is_finite() && v > 0.0 {
        v.floor() as usize
    } else {
        0
    }
}

fn ceil_to_usize(v: f64) -> usize {
    if v.is_finite() && v > 0.0 {
        v.ceil() as usize
    } else {
        0
    }
}

/// Which of the three training stages step `i` falls in (1, 2 or 3).
///
/// Stages are tested in order, so when `p/B` exceeds `p^{1+1/(2s)}` the
/// frozen stage wins and the transient stage is empty.
pub fn three_stage_index(i: u64, p: usize, b: f64, s: f64) -> u8 {
    let i = i as f64;
    let p = p as f64;
    if i <= p / b {
        1
    } else if i <= p.powf(1.0 + 1.0 / (2.0 * s)) {
        2
    } else {
        3
    }
}

impl Schedule {
    pub fn fixed_p(a: f64, b: f64, s: f64) -> Self {
        Schedule::FixedP { a, b, s }
    }

    pub fn three_stage(p: usize, a1: f64, a2: f64, b: f64, s: f64) -> Self {
        Schedule::ThreeStage { p, a1, a2, b, s }
    }

    pub fn polynomial(a: f64, s: f64) -> Self {
        Schedule::Polynomial { a, s }
    }

    pub fn constant(gamma: f64, trunc: usize) -> Self {
        Schedule::Constant { gamma, trunc }
    }

    pub fn custom<F>(name: impl Into<String>, rule: F) -> Self
    where
        F: Fn(u64) -> StepParams + Send + Sync + 'static,
    {
        Schedule::Custom {
            name: name.into(),
            rule: Arc::new(rule),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Schedule::FixedP { .. } => "fixed",
            Schedule::ThreeStage { .. } => "three-stage",
            Schedule::Polynomial { .. } => "poly",
            Schedule::Constant { .. } => "constant",
            Schedule::Custom { name, .. } => name,
        }
    }

    /// Parameters for step `i >= 1`.
    pub fn at(&self, i: u64) -> StepParams {
        debug_assert!(i >= 1, "steps are 1-based");
        let fi = i as f64;
        match *self {
            Schedule::FixedP { a, b, s } => StepParams {
                gamma: a / fi,
                trunc: floor_to_usize(b * fi.powf(1.0 / (2.0 * s + 1.0))),
            },
            Schedule::ThreeStage { p, a1, a2, b, s } => match three_stage_index(i, p, b, s) {
                1 => StepParams { gamma: 0.0, trunc: 0 },
                2 => StepParams {
                    gamma: a1 / fi,
                    trunc: ceil_to_usize(b * fi / p as f64),
                },
                _ => StepParams {
                    gamma: a2 / fi,
                    trunc: ceil_to_usize(b * fi.powf(1.0 / (2.0 * s + 1.0))),
                },
            },
            Schedule::Polynomial { a, s } => StepParams {
                gamma: a * fi.powf(-(4.0 * s + 1.0) / (6.0 * s + 1.0)),
                trunc: ceil_to_usize(fi.powf(1.0 / (6.0 * s + 1.0))),
            },
            Schedule::Constant { gamma, trunc } => StepParams { gamma, trunc },
            Schedule::Custom { ref rule, .. } => rule(i),
        }
    }

    /// Checks the hypotheses under which each rule is known to attain its rate.
    ///
    /// Violations are returned as warnings and never block a run.
    pub fn validate(&self, ctx: &ValidationContext) -> Vec<ScheduleWarning> {
        let mut out = Vec::new();
        let ValidationContext { p, c1, c2, m, n } = *ctx;
        let m2 = m * m;
        match *self {
            Schedule::FixedP { a, b, s } => {
                if !(a > 0.0 && b > 0.0 && s > 0.0) {
                    out.push(ScheduleWarning::NonPositive);
                }
                if a < 2.0 / c1 {
                    out.push(ScheduleWarning::RateTooSmall { a, min: 2.0 / c1 });
                }
                let bmax = 1.0 / (2.0 * p as f64 * c2 * m2 * a * a);
                if b > bmax {
                    out.push(ScheduleWarning::TruncationTooLarge { b, max: bmax });
                }
            }
            Schedule::ThreeStage { p, a1, a2, b, s } => {
                if !(a1 > 0.0 && a2 > 0.0 && b > 0.0 && s > 0.0) {
                    out.push(ScheduleWarning::NonPositive);
                }
                let want = (2.0 * s + 1.0) * a2;
                if (a1 - want).abs() > 1e-9 * want.abs().max(1.0) {
                    out.push(ScheduleWarning::StageRateRelation { a1, expected: want });
                }
                if a2 < 2.0 / c1 {
                    out.push(ScheduleWarning::RateTooSmall { a: a2, min: 2.0 / c1 });
                }
                let bmax = 1.0 / (4.0 * c2 * m2 * a2 * a2);
                if b > bmax {
                    out.push(ScheduleWarning::TruncationTooLarge { b, max: bmax });
                }
                let pmin = 1.0 / b.powf(2.0 * s);
                if (p as f64) < pmin {
                    out.push(ScheduleWarning::DimensionTooSmall { p, min: pmin });
                }
                let nmin = (p as f64).powf(1.0 + 1.0 / (2.0 * s));
                if (n as f64) < nmin {
                    out.push(ScheduleWarning::SampleTooSmall { n, min: nmin });
                }
            }
            Schedule::Polynomial { a, s } => {
                if !(a > 0.0) {
                    out.push(ScheduleWarning::NonPositive);
                }
                if s <= 0.5 {
                    out.push(ScheduleWarning::SmoothnessTooLow { s });
                }
            }
            Schedule::Constant { .. } | Schedule::Custom { .. } => {}
        }
        out
    }
}

/// Assumed problem constants: dimension, density bounds `C1 <= p_X <= C2`,
/// basis bound `M`, and planned sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationContext {
    pub p: usize,
    pub c1: f64,
    pub c2: f64,
    pub m: f64,
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleWarning {
    NonPositive,
    RateTooSmall { a: f64, min: f64 },
    TruncationTooLarge { b: f64, max: f64 },
    StageRateRelation { a1: f64, expected: f64 },
    DimensionTooSmall { p: usize, min: f64 },
    SampleTooSmall { n: u64, min: f64 },
    SmoothnessTooLow { s: f64 },
}

impl fmt::Display for ScheduleWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleWarning::NonPositive => f.write_str("schedule constants should be positive"),
            ScheduleWarning::RateTooSmall { a, min } => {
                write!(f, "rate constant {a} is below 2/C1 = {min}")
            }
            ScheduleWarning::TruncationTooLarge { b, max } => {
                write!(f, "truncation constant B = {b} exceeds the bound {max:.6}")
            }
            ScheduleWarning::StageRateRelation { a1, expected } => {
                write!(f, "A1 = {a1} differs from (2s+1)A2 = {expected}")
            }
            ScheduleWarning::DimensionTooSmall { p, min } => {
                write!(f, "p = {p} is below 1/B^(2s) = {min:.3}; the transient stage is empty")
            }
            ScheduleWarning::SampleTooSmall { n, min } => {
                write!(f, "n = {n} does not reach p^(1+1/(2s)) = {min:.1}")
            }
            ScheduleWarning::SmoothnessTooLow { s } => {
                write!(f, "polynomial schedule needs s > 1/2, got {s}")
            }
        }
    }
}
