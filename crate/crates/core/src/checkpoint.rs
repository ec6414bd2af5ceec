//! Plain-text model checkpoints.
//!
//! ```text
//! fsgd-ckpt v1
//! basis=trig
//! p=2
//! include_intercept=true
//! step=10
//! alpha=0.25
//! beta1=0.1,-0.02
//! beta2=
//! ```
//!
//! Floats are written in shortest round-trip form, so a save/load cycle is
//! value-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::basis::{BasisFamily, BasisKind};
use crate::error::{FsgdError, Result};
use crate::estimator::ModelState;

pub const MAGIC: &str = "fsgd-ckpt";
pub const VERSION: u32 = 1;

pub fn to_string(state: &ModelState) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} v{VERSION}");
    let _ = writeln!(out, "basis={}", state.basis().kind().name());
    let _ = writeln!(out, "p={}", state.p());
    let _ = writeln!(out, "include_intercept={}", state.include_intercept());
    let _ = writeln!(out, "step={}", state.step_count());
    let _ = writeln!(out, "alpha={}", state.alpha());
    for (k, row) in state.beta().iter().enumerate() {
        let joined: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "beta{}={}", k + 1, joined.join(","));
    }
    out
}

fn bad(message: impl Into<String>) -> FsgdError {
    FsgdError::Checkpoint(message.into())
}

fn parse_f64(raw: &str, what: &str) -> Result<f64> {
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| bad(format!("{what}: cannot parse '{raw}' as a number")))?;
    if !v.is_finite() {
        return Err(bad(format!("{what}: non-finite value '{raw}'")));
    }
    Ok(v)
}

pub fn from_str(text: &str) -> Result<ModelState> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| bad("empty checkpoint"))?;
    let version = header
        .trim()
        .strip_prefix(MAGIC)
        .and_then(|rest| rest.trim().strip_prefix('v'))
        .ok_or_else(|| bad(format!("not a checkpoint (header '{header}')")))?;
    if version != VERSION.to_string() {
        return Err(bad(format!(
            "unsupported checkpoint version v{version}, expected v{VERSION}"
        )));
    }

    let mut basis = None;
    let mut p = None;
    let mut intercept = None;
    let mut step = None;
    let mut alpha = None;
    let mut rows: Vec<Option<Vec<f64>>> = Vec::new();
    for line in lines {
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("malformed line '{line}'")))?;
        let key = key.trim();
        match key {
            "basis" => {
                basis = Some(
                    value
                        .trim()
                        .parse::<BasisKind>()
                        .map_err(|_| bad(format!("unknown basis '{value}'")))?,
                )
            }
            "p" => {
                let v: usize = value.trim().parse().map_err(|_| bad(format!("bad p '{value}'")))?;
                rows.resize(v, None);
                p = Some(v);
            }
            "include_intercept" => {
                intercept = Some(
                    value
                        .trim()
                        .parse::<bool>()
                        .map_err(|_| bad(format!("bad include_intercept '{value}'")))?,
                )
            }
            "step" => step = Some(value.trim().parse::<u64>().map_err(|_| bad(format!("bad step '{value}'")))?),
            "alpha" => alpha = Some(parse_f64(value, "alpha")?),
            _ => {
                let idx: usize = key
                    .strip_prefix("beta")
                    .and_then(|d| d.parse().ok())
                    .ok_or_else(|| bad(format!("unknown key '{key}'")))?;
                let p = p.ok_or_else(|| bad("p must precede the coefficient rows"))?;
                if idx == 0 || idx > p {
                    return Err(bad(format!("component index {idx} outside 1..={p}")));
                }
                let coeffs = if value.trim().is_empty() {
                    Vec::new()
                } else {
                    value
                        .split(',')
                        .map(|v| parse_f64(v, key))
                        .collect::<Result<Vec<f64>>>()?
                };
                rows[idx - 1] = Some(coeffs);
            }
        }
    }
    let kind = basis.ok_or_else(|| bad("missing basis"))?;
    let p = p.ok_or_else(|| bad("missing p"))?;
    let beta = rows
        .into_iter()
        .enumerate()
        .map(|(k, r)| r.ok_or_else(|| bad(format!("missing beta{}", k + 1))))
        .collect::<Result<Vec<_>>>()?;
    debug_assert_eq!(beta.len(), p);
    ModelState::from_parts(
        BasisFamily::new(kind),
        intercept.ok_or_else(|| bad("missing include_intercept"))?,
        alpha.ok_or_else(|| bad("missing alpha"))?,
        beta,
        step.ok_or_else(|| bad("missing step"))?,
    )
}

pub fn save(state: &ModelState, path: &Path) -> Result<()> {
    fs::write(path, to_string(state)).map_err(|e| FsgdError::Io(format!("{}: {e}", path.display())))
}

pub fn load(path: &Path) -> Result<ModelState> {
    let text = fs::read_to_string(path).map_err(|e| FsgdError::Io(format!("{}: {e}", path.display())))?;
    from_str(&text)
}
