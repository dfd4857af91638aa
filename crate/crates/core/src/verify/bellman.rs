use serde::Serialize;

use crate::anneal::AnnealReport;
use crate::linalg::dot;
use crate::model::{ModelSpec, RewardSpec};
use crate::{sup_dist, sup_norm, Error, Mode, Result};

const MAX_SWEEPS: usize = 1_000_000;
const VI_TOL: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BellmanReport {
    /// Optimal value of the time-consistent problem.
    pub optimum: Vec<f64>,
    pub annealed: Vec<f64>,
    pub diff: f64,
    pub passed: bool,
}

/// Optimal value under exponential discounting: value iteration on
/// `J(i) = max_u g(i,u) + β p^u_i·J` (discrete), or on the uniformized
/// `J(i) = max_u (g(i,u) + (Λ e_i + q^u_i)·J) / (r + Λ)` (continuous, rate `r`).
pub fn bellman_optimum(model: &ModelSpec) -> Result<Vec<f64>> {
    let rate = model.discount.exponential_rate().ok_or(Error::NotExponential)?;
    let g = match &model.reward {
        RewardSpec::Separable { g } => g,
        RewardSpec::Tabulated { .. } => {
            return Err(Error::StructureMismatch("Bellman check needs a separable reward".into()))
        }
    };
    let d = model.states;
    let n = model.grid.len();
    let (shift, denom, factor) = match model.mode() {
        Mode::Discrete => (0.0, 1.0, (-rate).exp()),
        Mode::Continuous => {
            let lam = model
                .kernel
                .matrices()
                .iter()
                .flat_map(|q| (0..d).map(move |i| -q[(i, i)]))
                .fold(0.0, f64::max);
            (lam, rate + lam, 1.0)
        }
    };
    let contraction = match model.mode() {
        Mode::Discrete => factor,
        Mode::Continuous => shift / denom,
    };
    let mut j = vec![0.0; d];
    for _ in 0..MAX_SWEEPS {
        let next: Vec<f64> = (0..d)
            .map(|i| {
                (0..n)
                    .map(|k| (g[i][k] + shift * j[i] + factor * dot(model.kernel_row(k, i), &j)) / denom)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let change = sup_dist(&next, &j);
        j = next;
        // distance to the fixed point is at most change · c / (1 − c)
        if change * contraction / (1.0 - contraction) <= VI_TOL * (1.0 + sup_norm(&j)) {
            break;
        }
    }
    Ok(j)
}

/// Compares the annealed final value with the Bellman optimum.
pub fn bellman_consistency(model: &ModelSpec, anneal: &AnnealReport, tol: f64) -> Result<BellmanReport> {
    let optimum = bellman_optimum(model)?;
    let diff = sup_dist(&optimum, &anneal.final_value);
    Ok(BellmanReport {
        passed: diff <= tol * (1.0 + sup_norm(&optimum)),
        optimum,
        annealed: anneal.final_value.clone(),
        diff,
    })
}
