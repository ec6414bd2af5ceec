//! Online smoothness selection for F-SGD.
//!
//! At step `i` every candidate smoothness `s` on the grid maps to a
//! truncation `J(s) = floor(B i^{1/(2s+1)})`, which is non-increasing in `s`.
//! A candidate `s_a` is admissible when, for every rougher candidate
//! `s_b < s_a`,
//!
//! ```text
//! gamma_i^2 r^2 sum_k sum_{J(s_a) < j <= J(s_b)} psi_j(x_k)^2 <= (i / ln i)^{-2 s_b / (2 s_b + 1)}
//! ```
//!
//! with `gamma_i = A / i` and `r` the residual of the current model. The
//! largest admissible candidate is used for the update. The grid minimum is
//! always admissible.

use crate::error::{FsgdError, Result};
use crate::estimator::{LossGradient, ModelState, Sample, SquaredLoss};

/// Selection is inactive before this step: every candidate counts as
/// admissible, so the smoothest one is used.
pub const ACTIVATION_STEP: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LepskiConfig {
    pub s0: f64,
    pub s1: f64,
    pub a: f64,
    pub b: f64,
}

impl LepskiConfig {
    pub fn new(s0: f64, s1: f64, a: f64, b: f64) -> Result<Self> {
        let cfg = Self { s0, s1, a, b };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.s0 > 0.0 && self.s1 > self.s0 && self.s1.is_finite()) {
            return Err(FsgdError::Config(format!(
                "smoothness grid needs 0 < s0 < s1, got [{}, {}]",
                self.s0, self.s1
            )));
        }
        if !(self.a > 0.0 && self.b > 0.0) {
            return Err(FsgdError::Config("lepski constants A and B must be > 0".into()));
        }
        Ok(())
    }

    pub fn gamma(&self, i: u64) -> f64 {
        self.a / i as f64
    }

    /// `floor(B i^{1/(2s+1)})`.
    pub fn truncation(&self, i: u64, s: f64) -> usize {
        let v = self.b * (i as f64).powf(1.0 / (2.0 * s + 1.0));
        if v.is_finite() && v > 0.0 {
            v.floor() as usize
        } else {
            0
        }
    }

    /// Right-hand side of the selection inequality for rougher candidate `s_b`;
    /// infinite before [`ACTIVATION_STEP`].
    pub fn threshold(&self, i: u64, s_b: f64) -> f64 {
        if i < ACTIVATION_STEP {
            return f64::INFINITY;
        }
        let fi = i as f64;
        (fi / fi.ln()).powf(-2.0 * s_b / (2.0 * s_b + 1.0))
    }
}

/// Candidate grid `{s0, s0 + 1/ln i, s0 + 2/ln i, ...}` capped at `s1`.
///
/// For `i <= 2` the spacing is undefined or wider than most grids, so the
/// two endpoints are returned.
pub fn grid(i: u64, cfg: &LepskiConfig) -> Vec<f64> {
    if i <= 2 {
        return vec![cfg.s0, cfg.s1];
    }
    let ln_i = (i as f64).ln();
    let step = 1.0 / ln_i;
    let count = ((cfg.s1 - cfg.s0) * ln_i).floor() as usize + 1;
    (0..count)
        .map(|k| cfg.s0 + k as f64 * step)
        .filter(|&s| s <= cfg.s1)
        .collect()
}

/// Result of one selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub s: f64,
    pub trunc: usize,
    pub gamma: f64,
    pub residual: f64,
}

/// Picks the smoothness for step `i = state.step_count() + 1` without updating.
pub fn select(
    state: &ModelState,
    sample: &Sample,
    cfg: &LepskiConfig,
    loss: &dyn LossGradient,
) -> Result<Selection> {
    let i = state.step_count() + 1;
    let fitted = state.predict(sample.x())?;
    let residual = -loss.gradient(sample.y(), fitted);
    let gamma = cfg.gamma(i);
    let grid = grid(i, cfg);
    let truncs: Vec<usize> = grid.iter().map(|&s| cfg.truncation(i, s)).collect();

    // Grid points sharing a truncation form contiguous blocks; within a block
    // the binding threshold belongs to the block's last (smoothest) member
    // that is still rougher than the candidate.
    let basis = state.basis();
    let sq_sum = |len: usize| -> f64 {
        sample
            .x()
            .iter()
            .map(|&xk| basis.squared_prefix_sum(xk, len))
            .sum()
    };
    let mut blocks: Vec<(usize, usize, f64)> = Vec::new(); // (trunc, last index, prefix sum)
    for (idx, &t) in truncs.iter().enumerate() {
        match blocks.last_mut() {
            Some(last) if last.0 == t => last.1 = idx,
            _ => blocks.push((t, idx, sq_sum(t))),
        }
    }
    let weight = gamma * gamma * residual * residual;

    let admissible = |a_block: usize| -> bool {
        let (_, _, sum_a) = blocks[a_block];
        blocks[..a_block].iter().all(|&(_, last_b, sum_b)| {
            weight * (sum_b - sum_a) <= cfg.threshold(i, grid[last_b])
        })
    };
    // Walk candidates from the smoothest down. A candidate's rougher set is
    // every earlier block plus the earlier members of its own block; the
    // latter share its truncation so they contribute empty sums.
    let chosen_block = (0..blocks.len()).rev().find(|&blk| admissible(blk)).unwrap_or(0);
    let chosen_idx = blocks[chosen_block].1;
    Ok(Selection {
        s: grid[chosen_idx],
        trunc: truncs[chosen_idx],
        gamma,
        residual,
    })
}

/// Selects the smoothness, then applies one F-SGD step at its truncation.
pub fn select_and_step(
    state: &mut ModelState,
    sample: &Sample,
    cfg: &LepskiConfig,
    loss: &dyn LossGradient,
) -> Result<Selection> {
    let sel = select(state, sample, cfg, loss)?;
    state.step(sample, sel.gamma, sel.trunc, loss)?;
    Ok(sel)
}

/// Convenience wrapper with the squared loss.
pub fn select_and_step_squared(
    state: &mut ModelState,
    sample: &Sample,
    cfg: &LepskiConfig,
) -> Result<Selection> {
    select_and_step(state, sample, cfg, &SquaredLoss)
}
