use serde::Serialize;

use crate::entropy::{entropy_unchecked, soft_max_value};
use crate::model::{ModelSpec, RelaxedPolicy};
use crate::{Mode, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WorstDeviation {
    /// Best grid node (`λ = 0`).
    Node { index: usize },
    /// The Gibbs density attains the supremum (`λ > 0`); its objective value.
    Gibbs { value: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviationResult {
    pub gaps: Vec<f64>,
    pub max_gap: f64,
    pub worst: Vec<WorstDeviation>,
}

/// Best one-step deviation gain per state: the supremum over deviations of
/// `∫ a dπ' + λ H(π')` minus its value at `π(i)`, with
/// `a(u) = f(0, i, u) + row(u)·y` (the first-order criterion in continuous time).
pub fn deviation_test(
    policy: &RelaxedPolicy,
    y: &[f64],
    lambda: f64,
    model: &ModelSpec,
    mode: Mode,
) -> Result<DeviationResult> {
    model.require_mode(mode)?;
    policy.check(&model.grid)?;
    if !(lambda >= 0.0) {
        return Err(crate::Error::InvalidArgument(format!("entropy weight must be >= 0, got {lambda}")));
    }
    let w = model.grid.weights();
    let mut gaps = Vec::with_capacity(model.states);
    let mut worst = Vec::with_capacity(model.states);
    for i in 0..model.states {
        let a = model.objective(i, y);
        let row = policy.row(i);
        let mut current: f64 = row.iter().zip(w).zip(&a).map(|((r, w), a)| r * w * a).sum();
        let best = if lambda > 0.0 {
            current += lambda * entropy_unchecked(row, &model.grid);
            let v = soft_max_value(&a, lambda, &model.grid);
            worst.push(WorstDeviation::Gibbs { value: v });
            v
        } else {
            let (k, v) = a
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |b, (k, v)| if v > b.1 { (k, v) } else { b });
            worst.push(WorstDeviation::Node { index: k });
            v
        };
        gaps.push(best - current);
    }
    let max_gap = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(DeviationResult { gaps, max_gap, worst })
}
