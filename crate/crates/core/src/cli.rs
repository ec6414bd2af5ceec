//! The `fsgd` command-line tool.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::basis::{BasisFamily, BasisKind};
use crate::checkpoint;
use crate::data::{read_table, Table};
use crate::error::{FsgdError, Result};
use crate::estimator::{ModelState, Sample};
use crate::learner::{EstimatorKind, EstimatorSpec, FsgdLearner, LepskiLearner, OnlineLearner, SieveLearner};
use crate::lepski::LepskiConfig;
use crate::schedule::{Schedule, ValidationContext};
use crate::sieve::{SieveRule, SieveState};
use crate::simlab::experiment::{write_compare, write_lepski_log, write_results, write_summary};
use crate::simlab::{
    log_grid, mse_monte_carlo, mse_quadrature, preset, run_experiment, substream, Dgp, EvalReport, Evaluator,
    ExperimentConfig, Preset, SlopeWindow, Stream,
};

pub const SEED_ENV: &str = "FSGD_SEED";

#[derive(Debug, Parser)]
#[command(name = "fsgd", version, about = "Streaming functional SGD for additive regression")]
pub struct Cli {
    /// Random seed; falls back to the config file, then $FSGD_SEED, then the preset.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for replications. Output does not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// TOML file with default settings; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a replicated experiment and write per-replication and summary curves.
    Simulate(SimulateArgs),
    /// Stream a labelled CSV through an estimator and save a checkpoint.
    Fit(FitArgs),
    /// Predict covariate rows with a saved checkpoint.
    Predict(PredictArgs),
    /// Score a checkpoint on labelled data or against a scenario's truth.
    Eval(EvalArgs),
    /// Run several estimators on one scenario with shared seeds.
    Compare(CompareArgs),
}

/// Settings shared by flags and the config file. Every field is optional so
/// that the two layers can be merged over a preset.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    /// Named scenario (fig1a-p<N>, fig1b-p5|30|80, fig2, fig2-p<N>, fig3a, fig3b, fig4a, fig4b).
    #[arg(long)]
    pub scenario: Option<String>,
    /// fsgd, sieve or lepski.
    #[arg(long)]
    pub estimator: Option<String>,
    /// fixed, three-stage, poly, constant or lepski.
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long = "A")]
    #[serde(rename = "A")]
    pub a: Option<f64>,
    #[arg(long = "A1")]
    #[serde(rename = "A1")]
    pub a1: Option<f64>,
    #[arg(long = "A2")]
    #[serde(rename = "A2")]
    pub a2: Option<f64>,
    #[arg(long = "B")]
    #[serde(rename = "B")]
    pub b: Option<f64>,
    /// Assumed smoothness.
    #[arg(long)]
    pub s: Option<f64>,
    /// Number of covariates.
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub s0: Option<f64>,
    #[arg(long)]
    pub s1: Option<f64>,
    /// Sieve rate exponent: t_j = j^{-2 omega}.
    #[arg(long)]
    pub omega: Option<f64>,
    /// Polyak averaging for the sieve estimator.
    #[arg(long)]
    pub averaging: Option<bool>,
    /// Constant schedule learning rate.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Constant schedule truncation.
    #[arg(long = "J")]
    #[serde(rename = "J")]
    pub j: Option<usize>,
    #[arg(long)]
    pub basis: Option<String>,
    #[arg(long)]
    pub intercept: Option<bool>,
    #[arg(long)]
    pub reps: Option<u64>,
    #[arg(long)]
    pub n: Option<u64>,
    /// Half-width of the uniform noise.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Evaluation points per decade of n.
    #[arg(long)]
    pub per_decade: Option<u32>,
    /// Explicit comma-separated evaluation points.
    #[arg(long)]
    pub eval_points: Option<String>,
    /// Monte Carlo points for non-uniform designs.
    #[arg(long)]
    pub mc_points: Option<usize>,
    #[arg(long)]
    pub slope_lo: Option<u64>,
    #[arg(long)]
    pub slope_hi: Option<u64>,
    #[arg(skip)]
    pub seed: Option<u64>,
    #[arg(skip)]
    pub threads: Option<usize>,
}

macro_rules! merge_fields {
    ($hi:expr, $lo:expr, $($f:ident),*) => {
        Settings { $($f: $hi.$f.clone().or_else(|| $lo.$f.clone()),)* }
    };
}

impl Settings {
    /// Field-wise `self` over `lower`.
    pub fn over(&self, lower: &Settings) -> Settings {
        merge_fields!(
            self, lower, scenario, estimator, schedule, a, a1, a2, b, s, p, s0, s1, omega, averaging, gamma, j,
            basis, intercept, reps, n, noise, per_decade, eval_points, mc_points, slope_lo, slope_hi, seed, threads
        )
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub settings: Settings,
    /// Directory for results.csv and summary.csv.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Also write the selected smoothness per step to this file (lepski only).
    #[arg(long)]
    pub lepski_log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub settings: Settings,
    /// CSV with header x1,...,xp,y.
    #[arg(long)]
    pub input: PathBuf,
    /// Checkpoint to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Checkpoint to continue from (fsgd and lepski).
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// CSV with header x1,...,xp (a trailing y column is ignored).
    #[arg(long)]
    pub input: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub settings: Settings,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Labelled CSV; when omitted the model is scored against --scenario.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub settings: Settings,
    /// Comma-separated estimators to run.
    #[arg(long, default_value = "fsgd,sieve,lepski")]
    pub estimators: String,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

fn config_error(msg: impl Into<String>) -> FsgdError {
    FsgdError::Config(msg.into())
}

fn load_config(path: Option<&Path>) -> Result<Settings> {
    let Some(path) = path else {
        return Ok(Settings::default());
    };
    let text = fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| config_error(format!("{}: {e}", path.display())))
}

fn seed_from_env() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| config_error(format!("{SEED_ENV}='{v}' is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// Flags over config file, with the seed also falling back to the environment.
fn layered(cli: &Cli, flags: &Settings) -> Result<Settings> {
    let file = load_config(cli.config.as_deref())?;
    let mut top = flags.clone();
    top.seed = cli.seed;
    top.threads = cli.threads;
    let mut merged = top.over(&file);
    if merged.seed.is_none() {
        merged.seed = seed_from_env()?;
    }
    Ok(merged)
}

fn parse_estimator(s: &str) -> Result<EstimatorKind> {
    s.parse()
}

fn schedule_kind(name: &str) -> Result<&'static str> {
    match name {
        "fixed" => Ok("fixed"),
        "three-stage" => Ok("three-stage"),
        "poly" => Ok("poly"),
        "constant" => Ok("constant"),
        "lepski" => Ok("lepski"),
        other => Err(config_error(format!(
            "unknown schedule '{other}' (fixed, three-stage, poly, constant, lepski)"
        ))),
    }
}

/// Builds a schedule of `kind`, taking each parameter from the settings, then
/// from `base` when it is of the same kind, then from built-in defaults.
fn build_schedule(kind: &str, st: &Settings, base: Option<&Schedule>, p: usize) -> Result<Schedule> {
    let (mut a, mut b, mut s, mut a1, mut a2) = (3.0, 1.0, 2.0, None, 1.0);
    let mut gamma_trunc = (None, None);
    match base {
        Some(Schedule::FixedP { a: pa, b: pb, s: ps }) if kind == "fixed" => (a, b, s) = (*pa, *pb, *ps),
        Some(Schedule::ThreeStage { a1: pa1, a2: pa2, b: pb, s: ps, .. }) if kind == "three-stage" => {
            (a1, a2, b, s) = (Some(*pa1), *pa2, *pb, *ps)
        }
        Some(Schedule::Polynomial { a: pa, s: ps }) if kind == "poly" => (a, s) = (*pa, *ps),
        Some(Schedule::Constant { gamma, trunc }) if kind == "constant" => gamma_trunc = (Some(*gamma), Some(*trunc)),
        _ => {
            if kind == "three-stage" {
                b = 0.5;
            }
            if kind == "poly" {
                a = 1.0;
            }
        }
    }
    let a = st.a.unwrap_or(a);
    let b = st.b.unwrap_or(b);
    let s = st.s.unwrap_or(s);
    let sched = match kind {
        "fixed" => Schedule::fixed_p(a, b, s),
        "three-stage" => {
            let a2 = st.a2.unwrap_or(a2);
            let a1 = st.a1.or(a1).unwrap_or((2.0 * s + 1.0) * a2);
            Schedule::three_stage(p, a1, a2, b, s)
        }
        "poly" => Schedule::polynomial(a, s),
        "constant" => {
            let gamma = st
                .gamma
                .or(gamma_trunc.0)
                .ok_or_else(|| config_error("the constant schedule needs --gamma"))?;
            let trunc = st.j.or(gamma_trunc.1).ok_or_else(|| config_error("the constant schedule needs --J"))?;
            Schedule::constant(gamma, trunc)
        }
        other => return Err(config_error(format!("schedule '{other}' is not a fixed rule"))),
    };
    let positive = [a, b, s].iter().all(|v| v.is_finite() && *v > 0.0);
    if !positive && kind != "constant" {
        return Err(config_error("schedule constants A, B and s must be finite and > 0"));
    }
    if kind == "constant" {
        if let Schedule::Constant { gamma, .. } = sched {
            if !(gamma >= 0.0 && gamma.is_finite()) {
                return Err(config_error("--gamma must be finite and >= 0"));
            }
        }
    }
    Ok(sched)
}

/// Resolves the estimator from the merged settings over an optional preset.
fn build_spec(st: &Settings, preset: Option<&Preset>, p: usize) -> Result<EstimatorSpec> {
    let schedule = st.schedule.as_deref().map(schedule_kind).transpose()?;
    let kind = match st.estimator.as_deref().map(parse_estimator).transpose()? {
        Some(k) => k,
        None if schedule == Some("lepski") => EstimatorKind::Lepski,
        None => preset.map_or(EstimatorKind::Fsgd, |pr| pr.estimator),
    };
    match (kind, schedule) {
        (EstimatorKind::Lepski, Some(s)) if s != "lepski" => {
            return Err(config_error(format!(
                "the lepski estimator chooses its own truncation; --schedule {s} is not allowed"
            )))
        }
        (k, Some("lepski")) if k != EstimatorKind::Lepski => {
            return Err(config_error(format!("--schedule lepski requires --estimator lepski, not {k}")))
        }
        _ => {}
    }
    Ok(match kind {
        EstimatorKind::Fsgd => {
            let base = preset.map(|pr| &pr.fsgd);
            let name = match schedule {
                Some(s) => s,
                None => match base.map(Schedule::name) {
                    Some("three-stage") => "three-stage",
                    Some("poly") => "poly",
                    Some("constant") => "constant",
                    _ => "fixed",
                },
            };
            EstimatorSpec::Fsgd {
                schedule: build_schedule(name, st, base, p)?,
            }
        }
        EstimatorKind::Sieve => {
            let schedule = match schedule {
                Some(name) => build_schedule(name, st, None, p)?,
                None => {
                    let base = preset.map_or_else(|| SieveRule::default().schedule(), |pr| pr.sieve.clone());
                    if st.a.is_some() || st.b.is_some() {
                        let rule = SieveRule {
                            a: st.a.unwrap_or(SieveRule::default().a),
                            exponent: SieveRule::default().exponent,
                        };
                        if st.b.is_some() {
                            return Err(config_error("the sieve rule has no B; pass --schedule to use another rule"));
                        }
                        rule.schedule()
                    } else {
                        base
                    }
                }
            };
            let omega = st.omega.or(preset.map(|pr| pr.omega)).unwrap_or(2.0);
            if !(omega >= 0.0 && omega.is_finite()) {
                return Err(config_error("--omega must be finite and >= 0"));
            }
            EstimatorSpec::Sieve {
                schedule,
                omega,
                averaging: st.averaging.unwrap_or(true),
            }
        }
        EstimatorKind::Lepski => {
            let base = preset.map_or(
                LepskiConfig {
                    s0: 0.5,
                    s1: 8.0,
                    a: 3.0,
                    b: 3.0,
                },
                |pr| pr.lepski,
            );
            let cfg = LepskiConfig {
                s0: st.s0.unwrap_or(base.s0),
                s1: st.s1.unwrap_or(base.s1),
                a: st.a.unwrap_or(base.a),
                b: st.b.unwrap_or(base.b),
            };
            cfg.check()?;
            EstimatorSpec::Lepski { cfg }
        }
    })
}

fn basis_of(st: &Settings) -> Result<BasisFamily> {
    Ok(BasisFamily::new(match st.basis.as_deref() {
        Some(name) => name.parse::<BasisKind>()?,
        None => BasisKind::Trigonometric,
    }))
}

struct Resolved {
    preset: Preset,
    cfg: ExperimentConfig,
    eval_points: Vec<u64>,
}

fn resolve_experiment(st: &Settings) -> Result<Resolved> {
    let name = st
        .scenario
        .as_deref()
        .ok_or_else(|| config_error("--scenario is required"))?;
    let mut pr = preset(name)?;
    let sc = &mut pr.scenario;
    if let Some(p) = st.p {
        sc.p = p;
        if let Schedule::ThreeStage { a1, a2, b, s, .. } = pr.fsgd {
            pr.fsgd = Schedule::three_stage(p, a1, a2, b, s);
        }
    }
    if let Some(v) = st.reps {
        sc.reps = v;
    }
    if let Some(v) = st.n {
        sc.n = v;
    }
    if let Some(v) = st.noise {
        sc.noise_halfwidth = v;
    }
    if let Some(v) = st.seed {
        sc.seed = v;
    }
    sc.validate()?;
    let p = sc.p;
    let n = sc.n;
    let spec = build_spec(st, Some(&pr), p)?;
    let mut cfg = ExperimentConfig::new(spec);
    cfg.include_intercept = st.intercept.unwrap_or(pr.include_intercept);
    cfg.basis = basis_of(st)?;
    if let Some(m) = st.mc_points {
        cfg.evaluator = Evaluator::Auto { mc_points: m };
    }
    cfg.window = SlopeWindow {
        lo: st.slope_lo,
        hi: st.slope_hi,
    };
    cfg.threads = st.threads;
    let eval_points = match st.eval_points.as_deref() {
        Some(list) => list
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<u64>()
                    .map_err(|_| config_error(format!("bad evaluation point '{v}'")))
            })
            .collect::<Result<Vec<u64>>>()?,
        None => log_grid(n, st.per_decade.unwrap_or(8)),
    };
    Ok(Resolved {
        preset: pr,
        cfg,
        eval_points,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| FsgdError::Io(format!("{}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| FsgdError::Io(format!("{}: {e}", path.display())))
}

fn write_file<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let mut w = create(path)?;
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

fn summary_line(label: &str, r: &EvalReport) -> String {
    format!(
        "{label}: n={} mse={:e} slope={} target={}",
        r.rows.last().map_or(0, |row| row.n),
        r.final_mse(),
        r.slope,
        r.target_slope
    )
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs) -> Result<()> {
    let st = layered(cli, &args.settings)?;
    let mut res = resolve_experiment(&st)?;
    if args.lepski_log.is_some() {
        if res.cfg.estimator.kind() != EstimatorKind::Lepski {
            return Err(config_error("--lepski-log needs the lepski estimator"));
        }
        res.cfg.record_lepski = true;
    }
    let report = run_experiment(&res.preset.scenario, &res.cfg, &res.eval_points)?;
    write_file(&args.out_dir.join("results.csv"), |w| write_results(w, &report))?;
    write_file(&args.out_dir.join("summary.csv"), |w| write_summary(w, &report))?;
    if let Some(path) = &args.lepski_log {
        write_file(path, |w| write_lepski_log(w, &report))?;
    }
    println!("{}", summary_line(&res.preset.name, &report));
    Ok(())
}

fn cmd_compare(cli: &Cli, args: &CompareArgs) -> Result<()> {
    let st = layered(cli, &args.settings)?;
    if st.estimator.is_some() {
        return Err(config_error("compare takes --estimators, not --estimator"));
    }
    let kinds: Vec<EstimatorKind> = args
        .estimators
        .split(',')
        .map(|s| parse_estimator(s.trim()))
        .collect::<Result<_>>()?;
    if kinds.is_empty() {
        return Err(config_error("no estimators to compare"));
    }
    let mut reports = Vec::new();
    for kind in &kinds {
        let mut per = st.clone();
        per.estimator = Some(kind.name().to_string());
        if *kind == EstimatorKind::Lepski {
            per.schedule = None;
        }
        let res = resolve_experiment(&per)?;
        let report = run_experiment(&res.preset.scenario, &res.cfg, &res.eval_points)?;
        println!("{}", summary_line(kind.name(), &report));
        reports.push((kind.name(), report));
    }
    let refs: Vec<(&str, &EvalReport)> = reports.iter().map(|(k, r)| (*k, r)).collect();
    write_file(&args.out_dir.join("compare.csv"), |w| write_compare(w, &refs))?;
    for (name, report) in &reports {
        write_file(&args.out_dir.join(format!("summary_{name}.csv")), |w| write_summary(w, report))?;
    }
    Ok(())
}

fn open_table(path: &Path, p: Option<usize>) -> Result<Table> {
    let file = File::open(path).map_err(|e| FsgdError::Io(format!("{}: {e}", path.display())))?;
    read_table(BufReader::new(file), p)
}

fn cmd_fit(cli: &Cli, args: &FitArgs) -> Result<()> {
    let st = layered(cli, &args.settings)?;
    let resumed = args.resume.as_deref().map(checkpoint::load).transpose()?;
    let want_p = st.p.or(resumed.as_ref().map(ModelState::p));
    let table = open_table(&args.input, want_p)?;
    if table.ys.is_none() && !table.is_empty() {
        return Err(FsgdError::Parse {
            line: 1,
            message: "fit needs a y column".into(),
        });
    }
    let samples = if table.is_empty() { Vec::new() } else { table.samples()? };
    let p = table.p;
    let spec = build_spec(&st, None, p)?;
    let basis = basis_of(&st)?;
    let intercept = st.intercept.unwrap_or(true);
    let state = match resumed {
        Some(s) => {
            if st.intercept.is_some_and(|v| v != s.include_intercept()) {
                return Err(config_error("--intercept disagrees with the resumed checkpoint"));
            }
            s
        }
        None => ModelState::new(p, intercept, basis)?,
    };
    if let EstimatorSpec::Fsgd { schedule } | EstimatorSpec::Sieve { schedule, .. } = &spec {
        let ctx = ValidationContext {
            p,
            c1: 1.0,
            c2: 1.0,
            m: basis.bound(),
            n: state.step_count() + samples.len() as u64,
        };
        for w in schedule.validate(&ctx) {
            log::warn!("{w}");
        }
    }
    let fitted = match spec {
        EstimatorSpec::Fsgd { schedule } => {
            let mut l = FsgdLearner::new(state, schedule);
            feed(&mut l, &samples)?;
            l.into_state()
        }
        EstimatorSpec::Lepski { cfg } => {
            let mut l = LepskiLearner::new(state, cfg);
            feed(&mut l, &samples)?;
            l.into_state()
        }
        EstimatorSpec::Sieve {
            schedule,
            omega,
            averaging,
        } => {
            if args.resume.is_some() {
                return Err(config_error(
                    "sieve checkpoints hold only the averaged model and cannot be resumed",
                ));
            }
            let mut sieve = SieveState::new(p, intercept, basis, omega)?;
            if !averaging {
                sieve = sieve.without_averaging();
            }
            let mut l = SieveLearner::new(sieve, schedule);
            feed(&mut l, &samples)?;
            l.model().clone()
        }
    };
    checkpoint::save(&fitted, &args.out)?;
    eprintln!(
        "fitted {} rows; step={} p={} -> {}",
        samples.len(),
        fitted.step_count(),
        fitted.p(),
        args.out.display()
    );
    Ok(())
}

fn feed<L: OnlineLearner>(learner: &mut L, samples: &[Sample]) -> Result<()> {
    for s in samples {
        learner.observe(s)?;
    }
    Ok(())
}

fn cmd_predict(args: &PredictArgs) -> Result<()> {
    let state = checkpoint::load(&args.checkpoint)?;
    let table = open_table(&args.input, Some(state.p()))?;
    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(create(path)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    writeln!(out, "y_hat")?;
    for x in &table.xs {
        writeln!(out, "{}", state.predict(x)?)?;
    }
    out.flush()?;
    Ok(())
}

fn cmd_eval(cli: &Cli, args: &EvalArgs) -> Result<()> {
    let st = layered(cli, &args.settings)?;
    let state = checkpoint::load(&args.checkpoint)?;
    if let Some(input) = &args.input {
        let table = open_table(input, Some(state.p()))?;
        let samples = table.samples()?;
        if samples.is_empty() {
            return Err(FsgdError::Parse {
                line: 1,
                message: "no rows to evaluate".into(),
            });
        }
        let mse = samples
            .iter()
            .map(|s| state.predict(s.x()).map(|v| (v - s.y()).powi(2)))
            .sum::<Result<f64>>()?
            / samples.len() as f64;
        println!("rows={} mse={mse:e}", samples.len());
        return Ok(());
    }
    let res = resolve_experiment(&st)?;
    let sc = &res.preset.scenario;
    if sc.p != state.p() {
        return Err(FsgdError::DimensionMismatch {
            expected: sc.p,
            got: state.p(),
        });
    }
    if sc.dgp == Dgp::UniformCube {
        let cut = 512.max(state.max_len());
        let truth = sc.truth(state.basis(), cut, 100_000.max(200 * cut));
        println!("mse={:e} method=quadrature", mse_quadrature(&state, sc, &truth)?);
    } else {
        let m = st.mc_points.unwrap_or(crate::simlab::experiment::DEFAULT_MC_POINTS);
        let mut rng = substream(sc.seed, 0, Stream::Evaluation);
        let est = mse_monte_carlo(&state, sc, m, &mut rng)?;
        println!("mse={:e} stderr={:e} method=monte-carlo", est.estimate, est.stderr);
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(cli, a),
        Command::Fit(a) => cmd_fit(cli, a),
        Command::Predict(a) => cmd_predict(a),
        Command::Eval(a) => cmd_eval(cli, a),
        Command::Compare(a) => cmd_compare(cli, a),
    }
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings() -> Settings {
        Settings::default()
    }

    #[test]
    fn merge_prefers_upper_layer() {
        let hi = Settings {
            a: Some(2.0),
            ..settings()
        };
        let lo = Settings {
            a: Some(5.0),
            b: Some(0.5),
            ..settings()
        };
        let m = hi.over(&lo);
        assert_eq!((m.a, m.b), (Some(2.0), Some(0.5)));
    }

    #[test]
    fn config_keys_match_flags() {
        let st: Settings = toml::from_str("scenario = \"fig3a\"\nA = 2.5\nA1 = 1\nJ = 4\nper-decade = 4\n").unwrap();
        assert_eq!(st.scenario.as_deref(), Some("fig3a"));
        assert_eq!((st.a, st.a1, st.j, st.per_decade), (Some(2.5), Some(1.0), Some(4), Some(4)));
        assert!(toml::from_str::<Settings>("bogus = 1\n").is_err());
    }

    #[test]
    fn lepski_rejects_fixed_schedule() {
        let st = Settings {
            estimator: Some("lepski".into()),
            schedule: Some("fixed".into()),
            ..settings()
        };
        assert!(matches!(build_spec(&st, None, 1), Err(FsgdError::Config(_))));
        let st = Settings {
            estimator: Some("fsgd".into()),
            schedule: Some("lepski".into()),
            ..settings()
        };
        assert!(build_spec(&st, None, 1).is_err());
        let st = Settings {
            schedule: Some("lepski".into()),
            ..settings()
        };
        assert_eq!(build_spec(&st, None, 1).unwrap().kind(), EstimatorKind::Lepski);
    }

    #[test]
    fn preset_parameters_flow_through() {
        let st = Settings {
            scenario: Some("fig2".into()),
            p: Some(8),
            ..settings()
        };
        let res = resolve_experiment(&st).unwrap();
        assert_eq!(res.preset.scenario.p, 8);
        match res.cfg.estimator {
            EstimatorSpec::Fsgd {
                schedule: Schedule::ThreeStage { p, a1, a2, b, .. },
            } => assert_eq!((p, a1, a2, b), (8, 1.0, 5.0, 0.5)),
            other => panic!("{other:?}"),
        }
        let st = Settings {
            scenario: Some("fig3a".into()),
            a: Some(2.0),
            ..settings()
        };
        match resolve_experiment(&st).unwrap().cfg.estimator {
            EstimatorSpec::Fsgd {
                schedule: Schedule::FixedP { a, b, s },
            } => assert_eq!((a, b, s), (2.0, 1.0, 2.0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn constant_schedule_needs_parameters() {
        let st = Settings {
            schedule: Some("constant".into()),
            ..settings()
        };
        assert!(build_spec(&st, None, 1).is_err());
        let st = Settings {
            schedule: Some("constant".into()),
            gamma: Some(0.1),
            j: Some(3),
            ..settings()
        };
        assert!(matches!(
            build_spec(&st, None, 1).unwrap(),
            EstimatorSpec::Fsgd {
                schedule: Schedule::Constant { trunc: 3, .. }
            }
        ));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["fsgd", "simulate", "--scenario", "nope"]), 2);
        assert_eq!(run(["fsgd", "frobnicate"]), 2);
        assert_eq!(run(["fsgd", "--help"]), 0);
    }
}
