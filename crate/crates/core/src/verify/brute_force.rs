use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scan::{decode, objective_scale, SCAN_EVAL_TOL};
use crate::anneal::{certify, continuation_value, Thresholds};
use crate::model::{ModelSpec, RelaxedPolicy};
use crate::{Error, Mode, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BruteForceConfig {
    pub max_nodes: usize,
    pub max_states: usize,
    /// Mixture weights `0, 1/(levels−1), …, 1`.
    pub levels: usize,
    /// Relative argmax tolerance, as in the standard scan.
    pub tol: f64,
    pub include_mixed: bool,
    pub cap: usize,
}

impl Default for BruteForceConfig {
    fn default() -> Self {
        BruteForceConfig {
            max_nodes: 5,
            max_states: 3,
            levels: 11,
            tol: 1e-9,
            include_mixed: true,
            cap: 1_000_000,
        }
    }
}

/// Per-state choice of a search candidate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Choice {
    Node { index: usize },
    /// Weight `weight` on `high`, the rest on `low`.
    Mix { low: usize, high: usize, weight: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate {
    pub choices: Vec<Choice>,
    pub deviation_gap: f64,
    /// Mixture-resolution allowance added to the thresholds.
    pub resolution: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BruteForceResult {
    /// Standard policies passing certification, in lexicographic node order.
    pub standard: Vec<Vec<usize>>,
    /// Candidates with at least one two-node mixture passing certification.
    pub mixed: Vec<Candidate>,
    pub searched: usize,
}

fn choices_per_state(n: usize, levels: usize, mixed: bool) -> Vec<Choice> {
    let mut out: Vec<Choice> = (0..n).map(|index| Choice::Node { index }).collect();
    if mixed {
        for low in 0..n {
            for high in low + 1..n {
                for l in 1..levels - 1 {
                    out.push(Choice::Mix {
                        low,
                        high,
                        weight: l as f64 / (levels - 1) as f64,
                    });
                }
            }
        }
    }
    out
}

fn build_policy(model: &ModelSpec, choices: &[Choice]) -> RelaxedPolicy {
    let w = model.grid.weights();
    RelaxedPolicy::new(
        choices
            .iter()
            .map(|c| {
                let mut row = vec![0.0; w.len()];
                match *c {
                    Choice::Node { index } => row[index] = 1.0 / w[index],
                    Choice::Mix { low, high, weight } => {
                        row[low] = (1.0 - weight) / w[low];
                        row[high] = weight / w[high];
                    }
                }
                row
            })
            .collect(),
    )
}

/// Exhaustive search over standard policies and two-node mixtures on a tiny
/// discrete-time model. A candidate is kept when [`certify`] passes at its own
/// continuation value with gap and support width `tol · (1 + max|a|)`; mixed
/// candidates get an extra allowance of half a mixture level times the
/// finite-difference slope of their indifference gap, since an exact mixed
/// equilibrium generally falls between levels.
pub fn brute_force_oracle(model: &ModelSpec, cfg: &BruteForceConfig) -> Result<BruteForceResult> {
    model.require_mode(Mode::Discrete)?;
    let n = model.grid.len();
    let d = model.states;
    if n > cfg.max_nodes.min(5) || d > cfg.max_states.min(3) || cfg.levels > 11 || cfg.levels < 2 {
        return Err(Error::ScanTooLarge {
            candidates: n.saturating_pow(d as u32),
            cap: cfg.max_nodes.min(5).saturating_pow(cfg.max_states.min(3) as u32),
        });
    }
    let per_state = choices_per_state(n, cfg.levels, cfg.include_mixed);
    let c = per_state.len();
    let total = (0..d)
        .try_fold(1usize, |acc, _| acc.checked_mul(c))
        .filter(|&t| t <= cfg.cap)
        .ok_or(Error::ScanTooLarge {
            candidates: c.saturating_pow(d as u32),
            cap: cfg.cap,
        })?;
    let step = 1.0 / (cfg.levels - 1) as f64;
    let kept = (0..total)
        .into_par_iter()
        .map(|idx| {
            let choices: Vec<Choice> = decode(idx, c, d).into_iter().map(|j| per_state[j]).collect();
            let policy = build_policy(model, &choices);
            let y = continuation_value(&policy, model, Mode::Discrete, SCAN_EVAL_TOL)?;
            let objectives: Vec<Vec<f64>> = (0..d).map(|i| model.objective(i, &y)).collect();
            let slack = cfg.tol * (1.0 + objective_scale(&objectives));
            let mut resolution = 0.0_f64;
            for (i, ch) in choices.iter().enumerate() {
                if let Choice::Mix { low, high, weight } = *ch {
                    let slope = indifference_slope(model, &choices, i, low, high, weight, step)?;
                    resolution = resolution.max(slope * step / 2.0);
                }
            }
            let thresholds = Thresholds {
                deviation_gap: slack + resolution,
                off_support_mass: 0.0,
                self_consistency: 1e-9,
                support_tol: Some(slack + resolution),
            };
            let cert = certify(&policy, &y, model, Mode::Discrete, &thresholds)?;
            Ok(cert.passed.then_some(Candidate {
                choices,
                deviation_gap: cert.deviation_gap,
                resolution,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut standard = Vec::new();
    let mut mixed = Vec::new();
    for cand in kept.into_iter().flatten() {
        let nodes: Option<Vec<usize>> = cand
            .choices
            .iter()
            .map(|c| match c {
                Choice::Node { index } => Some(*index),
                Choice::Mix { .. } => None,
            })
            .collect();
        match nodes {
            Some(n) => standard.push(n),
            None => mixed.push(cand),
        }
    }
    Ok(BruteForceResult {
        standard,
        mixed,
        searched: total,
    })
}

/// `|∂/∂p (a_high − a_low)|` in state `i` by central differences over the
/// neighbouring mixture levels, other states held fixed.
fn indifference_slope(
    model: &ModelSpec,
    choices: &[Choice],
    i: usize,
    low: usize,
    high: usize,
    weight: f64,
    step: f64,
) -> Result<f64> {
    let gap_at = |p: f64| -> Result<f64> {
        let mut ch = choices.to_vec();
        ch[i] = Choice::Mix { low, high, weight: p };
        let policy = build_policy(model, &ch);
        let y = continuation_value(&policy, model, Mode::Discrete, SCAN_EVAL_TOL)?;
        let a = model.objective(i, &y);
        Ok(a[high] - a[low])
    };
    let (p0, p1) = ((weight - step).max(0.0), (weight + step).min(1.0));
    Ok(((gap_at(p1)? - gap_at(p0)?) / (p1 - p0)).abs())
}
