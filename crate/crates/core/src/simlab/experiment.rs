//! Replicated streaming runs, MSE curves and log-log slope fits.

use std::io::Write;

use rayon::prelude::*;

use super::mse::{mse_quadrature, EvalPoints};
use super::scenario::{substream, Dgp, Scenario, Stream, Truth};
use crate::basis::BasisFamily;
use crate::error::{FsgdError, Result};
use crate::estimator::ModelState;
use crate::learner::{EstimatorSpec, LepskiLearner, OnlineLearner};

pub const DEFAULT_MC_POINTS: usize = 100_000;
pub const DEFAULT_TAIL_CUT: usize = 512;
pub const QUADRATURE_INTERVALS: usize = 100_000;

/// How snapshot errors are measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evaluator {
    /// Coefficient-space quadrature for the uniform cube, Monte Carlo otherwise.
    Auto { mc_points: usize },
    Quadrature,
    MonteCarlo { points: usize },
}

impl Default for Evaluator {
    fn default() -> Self {
        Evaluator::Auto {
            mc_points: DEFAULT_MC_POINTS,
        }
    }
}

/// Range of `n` used by the slope fit. `None` bounds default to the last
/// decade below the largest evaluation point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SlopeWindow {
    pub lo: Option<u64>,
    pub hi: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub estimator: EstimatorSpec,
    pub include_intercept: bool,
    pub basis: BasisFamily,
    pub evaluator: Evaluator,
    pub window: SlopeWindow,
    pub threads: Option<usize>,
    pub record_lepski: bool,
}

impl ExperimentConfig {
    pub fn new(estimator: EstimatorSpec) -> Self {
        Self {
            estimator,
            include_intercept: false,
            basis: BasisFamily::trigonometric(),
            evaluator: Evaluator::default(),
            window: SlopeWindow::default(),
            threads: None,
            record_lepski: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub n: u64,
    pub mse_mean: f64,
    pub mse_stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<ReportRow>,
    /// `raw[rep][k]` is the error of replication `rep` at `rows[k].n`.
    pub raw: Vec<Vec<f64>>,
    pub slope: f64,
    pub target_slope: f64,
    /// Selected smoothness per step and replication, when recorded.
    pub lepski_choices: Option<Vec<Vec<f64>>>,
}

impl EvalReport {
    pub fn final_mse(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.mse_mean)
    }

    pub fn mse_at(&self, n: u64) -> Option<f64> {
        self.rows.iter().find(|r| r.n == n).map(|r| r.mse_mean)
    }
}

/// `round(10^{k/per_decade})` for `k = 0, 1, ...` up to `n`, deduplicated, with
/// `n` itself always last.
pub fn log_grid(n: u64, per_decade: u32) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    let per = per_decade.max(1) as f64;
    for k in 0.. {
        let v = 10f64.powf(k as f64 / per).round() as u64;
        if v >= n {
            break;
        }
        if out.last() != Some(&v) {
            out.push(v);
        }
    }
    out.push(n);
    out
}

/// Ordinary least-squares slope of `log10(mse)` on `log10(n)`.
pub fn loglog_slope(points: &[(u64, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .map(|&(n, m)| ((n as f64).log10(), m.log10()))
        .collect();
    if pts.len() < 2 {
        return Err(FsgdError::Config("slope fit needs at least two points".into()));
    }
    if pts.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(FsgdError::Config("slope fit needs positive n and MSE".into()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(FsgdError::Config("slope fit needs at least two distinct n".into()));
    }
    Ok(sxy / sxx)
}

/// Slope over the rows whose `n` falls inside `window`.
pub fn window_slope(rows: &[ReportRow], window: SlopeWindow) -> Result<f64> {
    let top = rows.last().map_or(0, |r| r.n);
    let hi = window.hi.unwrap_or(top);
    let lo = window.lo.unwrap_or(top / 10);
    let pts: Vec<(u64, f64)> = rows
        .iter()
        .filter(|r| r.n >= lo && r.n <= hi)
        .map(|r| (r.n, r.mse_mean))
        .collect();
    loglog_slope(&pts)
}

enum Measure {
    Quadrature(Truth),
    MonteCarlo(usize),
}

fn largest_truncation(spec: &EstimatorSpec, n: u64) -> usize {
    match spec {
        EstimatorSpec::Fsgd { schedule } | EstimatorSpec::Sieve { schedule, .. } => {
            (1..=n).map(|i| schedule.at(i).trunc).max().unwrap_or(0)
        }
        EstimatorSpec::Lepski { cfg } => (1..=n).map(|i| cfg.truncation(i, cfg.s0)).max().unwrap_or(0),
    }
}

fn measure_for(scenario: &Scenario, cfg: &ExperimentConfig) -> Result<Measure> {
    let quadrature = match cfg.evaluator {
        Evaluator::Quadrature => true,
        Evaluator::Auto { .. } => scenario.dgp == Dgp::UniformCube,
        Evaluator::MonteCarlo { .. } => false,
    };
    if quadrature {
        if scenario.dgp != Dgp::UniformCube {
            return Err(FsgdError::Config(
                "quadrature evaluation needs the uniform_cube design".into(),
            ));
        }
        let cut = DEFAULT_TAIL_CUT.max(largest_truncation(&cfg.estimator, scenario.n));
        let intervals = QUADRATURE_INTERVALS.max(200 * cut);
        Ok(Measure::Quadrature(scenario.truth(&cfg.basis, cut, intervals)))
    } else {
        let m = match cfg.evaluator {
            Evaluator::Auto { mc_points } => mc_points,
            Evaluator::MonteCarlo { points } => points,
            Evaluator::Quadrature => unreachable!(),
        };
        Ok(Measure::MonteCarlo(m))
    }
}

struct RepOutcome {
    mses: Vec<f64>,
    choices: Option<Vec<f64>>,
}

fn run_replication(
    scenario: &Scenario,
    cfg: &ExperimentConfig,
    measure: &Measure,
    eval_points: &[u64],
    rep: u64,
) -> Result<RepOutcome> {
    let mut data = substream(scenario.seed, rep, Stream::Data);
    let mc = match measure {
        Measure::MonteCarlo(m) => {
            let mut eval_rng = substream(scenario.seed, rep, Stream::Evaluation);
            Some(EvalPoints::draw(scenario, *m, &mut eval_rng))
        }
        Measure::Quadrature(_) => None,
    };
    let score = |model: &ModelState| -> Result<f64> {
        match (measure, &mc) {
            (Measure::Quadrature(truth), _) => mse_quadrature(model, scenario, truth),
            (Measure::MonteCarlo(_), Some(points)) => Ok(points.mse(model)?.estimate),
            (Measure::MonteCarlo(_), None) => unreachable!(),
        }
    };

    let mut learner: Box<dyn OnlineLearner> = match (&cfg.estimator, cfg.record_lepski) {
        (EstimatorSpec::Lepski { cfg: lcfg }, true) => {
            lcfg.check()?;
            let state = ModelState::new(scenario.p, cfg.include_intercept, cfg.basis)?;
            Box::new(LepskiLearner::new(state, *lcfg).recording())
        }
        (spec, _) => spec.build(scenario.p, cfg.include_intercept, cfg.basis)?,
    };

    let mut mses = Vec::with_capacity(eval_points.len());
    let mut next = eval_points.iter().copied().peekable();
    while next.peek() == Some(&0) {
        mses.push(score(learner.model())?);
        next.next();
    }
    for i in 1..=scenario.n {
        if next.peek().is_none() {
            break;
        }
        let sample = scenario.draw_sample(&mut data);
        learner.observe(&sample)?;
        while next.peek() == Some(&i) {
            mses.push(score(learner.model())?);
            next.next();
        }
    }
    let choices = learner.chosen_smoothness().map(<[f64]>::to_vec);
    Ok(RepOutcome { mses, choices })
}

/// Streams `scenario.n` samples through a fresh estimator per replication and
/// records the error at each of `eval_points` (sorted, each `<= n`).
pub fn run_experiment(
    scenario: &Scenario,
    cfg: &ExperimentConfig,
    eval_points: &[u64],
) -> Result<EvalReport> {
    scenario.validate()?;
    if eval_points.is_empty() {
        return Err(FsgdError::Config("no evaluation points".into()));
    }
    if eval_points.windows(2).any(|w| w[0] >= w[1]) {
        return Err(FsgdError::Config("evaluation points must be strictly increasing".into()));
    }
    if eval_points.last().copied().unwrap_or(0) > scenario.n {
        return Err(FsgdError::Config(format!(
            "evaluation point {} exceeds n = {}",
            eval_points.last().copied().unwrap_or(0),
            scenario.n
        )));
    }
    let measure = measure_for(scenario, cfg)?;
    let job = || -> Vec<Result<RepOutcome>> {
        (0..scenario.reps)
            .into_par_iter()
            .map(|rep| {
                run_replication(scenario, cfg, &measure, eval_points, rep).map_err(|e| {
                    FsgdError::Replication {
                        rep,
                        source: Box::new(e),
                    }
                })
            })
            .collect()
    };
    let outcomes = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| FsgdError::Config(format!("thread pool: {e}")))?
            .install(job),
        None => job(),
    };
    let outcomes: Vec<RepOutcome> = outcomes.into_iter().collect::<Result<_>>()?;

    let reps = outcomes.len() as f64;
    let rows: Vec<ReportRow> = eval_points
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let vals: Vec<f64> = outcomes.iter().map(|o| o.mses[k]).collect();
            let mean = vals.iter().sum::<f64>() / reps;
            let stderr = if vals.len() > 1 {
                let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1.0);
                (var / reps).sqrt()
            } else {
                0.0
            };
            ReportRow {
                n,
                mse_mean: mean,
                mse_stderr: stderr,
            }
        })
        .collect();
    let slope = if rows.len() >= 2 {
        window_slope(&rows, cfg.window).unwrap_or(f64::NAN)
    } else {
        f64::NAN
    };
    let lepski_choices = if cfg.record_lepski {
        outcomes.iter().map(|o| o.choices.clone()).collect()
    } else {
        None
    };
    Ok(EvalReport {
        rows,
        raw: outcomes.into_iter().map(|o| o.mses).collect(),
        slope,
        target_slope: scenario.target.minimax_slope(),
        lepski_choices,
    })
}

/// `rep,n,mse` rows.
pub fn write_results<W: Write>(out: &mut W, report: &EvalReport) -> Result<()> {
    writeln!(out, "rep,n,mse")?;
    for (rep, vals) in report.raw.iter().enumerate() {
        for (row, v) in report.rows.iter().zip(vals) {
            writeln!(out, "{rep},{},{v:e}", row.n)?;
        }
    }
    Ok(())
}

/// `n,mse_mean,mse_stderr` rows and a `slope=..,target=..` trailer.
pub fn write_summary<W: Write>(out: &mut W, report: &EvalReport) -> Result<()> {
    writeln!(out, "n,mse_mean,mse_stderr")?;
    for r in &report.rows {
        writeln!(out, "{},{:e},{:e}", r.n, r.mse_mean, r.mse_stderr)?;
    }
    writeln!(out, "slope={},target={}", report.slope, report.target_slope)?;
    Ok(())
}

/// `estimator,rep,n,mse` rows for several labelled reports.
pub fn write_compare<W: Write>(out: &mut W, reports: &[(&str, &EvalReport)]) -> Result<()> {
    writeln!(out, "estimator,rep,n,mse")?;
    for (name, report) in reports {
        for (rep, vals) in report.raw.iter().enumerate() {
            for (row, v) in report.rows.iter().zip(vals) {
                writeln!(out, "{name},{rep},{},{v:e}", row.n)?;
            }
        }
    }
    Ok(())
}

/// `rep,step,s` rows of the selected smoothness.
pub fn write_lepski_log<W: Write>(out: &mut W, report: &EvalReport) -> Result<()> {
    writeln!(out, "rep,step,s")?;
    if let Some(all) = &report.lepski_choices {
        for (rep, choices) in all.iter().enumerate() {
            for (i, s) in choices.iter().enumerate() {
                writeln!(out, "{rep},{},{s}", i + 1)?;
            }
        }
    }
    Ok(())
}
