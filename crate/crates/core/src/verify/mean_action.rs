use serde::Serialize;

use crate::eval_dt::value_dt;
use crate::model::{truncation_horizon, ActionGrid, ModelSpec, RelaxedPolicy, RewardSpec};
use crate::linalg::Matrix;
use crate::{Error, Mode, Result};

const STRUCTURE_TOL: f64 = 1e-12;

/// `ᾱ(i) = Σ_k w_k ρ[i][k] u_k`.
pub fn mean_action_policy(policy: &RelaxedPolicy, grid: &ActionGrid) -> Vec<Vec<f64>> {
    policy
        .densities
        .iter()
        .map(|row| {
            let mut m = vec![0.0; grid.dims()];
            for (k, (r, w)) in row.iter().zip(grid.weights()).enumerate() {
                for (mj, uj) in m.iter_mut().zip(grid.node(k)) {
                    *mj += r * w * uj;
                }
            }
            m
        })
        .collect()
}

/// Checks that `p^u_i = (1 − Σ_m u_m, u_1, …, u_{d−1})` for every node and state.
pub fn direct_choice_check(model: &ModelSpec) -> Result<()> {
    model
        .require_mode(Mode::Discrete)
        .map_err(|_| Error::StructureMismatch("direct choice is a discrete-time structure".into()))?;
    let d = model.states;
    if model.grid.dims() + 1 != d {
        return Err(Error::StructureMismatch(format!(
            "direct choice needs {} action dimensions for {d} states, found {}",
            d.saturating_sub(1),
            model.grid.dims()
        )));
    }
    for k in 0..model.grid.len() {
        let u = model.grid.node(k);
        let head = 1.0 - u.iter().sum::<f64>();
        for i in 0..d {
            let row = model.kernel_row(k, i);
            let ok = (row[0] - head).abs() <= STRUCTURE_TOL
                && row[1..].iter().zip(u).all(|(p, x)| (p - x).abs() <= STRUCTURE_TOL);
            if !ok {
                return Err(Error::StructureMismatch(format!(
                    "transition row of state {i} at node {k} is not the chosen action"
                )));
            }
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeanActionCheck {
    pub mean_actions: Vec<Vec<f64>>,
    /// `J^π`.
    pub relaxed_value: Vec<f64>,
    /// `J^ᾱ` of the standard policy using the mean actions.
    pub mean_value: Vec<f64>,
    pub max_diff: f64,
    pub matched: bool,
}

/// Compares `J^π` with the value of the standard policy `ᾱ` on a direct-choice
/// model with separable reward. Off-grid mean actions use the exact kernel row
/// (a per-dimension blend of neighbouring nodes with matched mean) and the
/// reward interpolated between nodes.
pub fn mean_action_value_check(policy: &RelaxedPolicy, model: &ModelSpec, tol: f64) -> Result<MeanActionCheck> {
    direct_choice_check(model)?;
    let g = match &model.reward {
        RewardSpec::Separable { g } => g,
        RewardSpec::Tabulated { .. } => {
            return Err(Error::StructureMismatch("mean-action check needs a separable reward".into()))
        }
    };
    let eval_tol = (tol * 1e-3).max(1e-14);
    let relaxed_value = value_dt(policy, 0.0, 0, model, eval_tol)?;
    let means = mean_action_policy(policy, &model.grid);
    let d = model.states;
    let mut p = Matrix::zeros(d, d);
    let mut r = vec![0.0; d];
    for i in 0..d {
        let (corners, weights) = blend(&model.grid, &means[i]);
        for (&k, &c) in corners.iter().zip(&weights) {
            r[i] += c * g[i][k];
            for (o, x) in p.row_mut(i).iter_mut().zip(model.kernel_row(k, i)) {
                *o += c * x;
            }
        }
    }
    let horizon = truncation_horizon(model, 0.0, eval_tol, Mode::Discrete)? as usize;
    let mut v = vec![0.0; d];
    let mut pv = vec![0.0; d];
    for t in (0..=horizon).rev() {
        let delta = model.discount.eval(t as f64);
        p.mul_vec_into(&v, &mut pv);
        for ((vi, ri), pvi) in v.iter_mut().zip(&r).zip(&pv) {
            *vi = delta * ri + pvi;
        }
    }
    let max_diff = crate::sup_dist(&relaxed_value, &v);
    let scale = 1.0 + crate::sup_norm(&relaxed_value);
    Ok(MeanActionCheck {
        mean_actions: means,
        relaxed_value,
        mean_value: v,
        max_diff,
        matched: max_diff <= tol * scale,
    })
}

/// Multilinear interpolation weights of `x` over the surrounding grid nodes.
fn blend(grid: &ActionGrid, x: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let ell = grid.dims();
    let mut lo = Vec::with_capacity(ell);
    let mut frac = Vec::with_capacity(ell);
    for (m, &xm) in x.iter().enumerate() {
        let axis = grid.axis(m);
        let n = axis.len();
        let j = axis.partition_point(|&a| a <= xm).clamp(1, n - 1) - 1;
        let t = ((xm - axis[j]) / (axis[j + 1] - axis[j])).clamp(0.0, 1.0);
        lo.push(j);
        frac.push(t);
    }
    let mut corners = Vec::with_capacity(1 << ell);
    let mut weights = Vec::with_capacity(1 << ell);
    for mask in 0..(1usize << ell) {
        let mut idx = Vec::with_capacity(ell);
        let mut w = 1.0;
        for m in 0..ell {
            if mask >> m & 1 == 1 {
                idx.push(lo[m] + 1);
                w *= frac[m];
            } else {
                idx.push(lo[m]);
                w *= 1.0 - frac[m];
            }
        }
        if w > 0.0 {
            corners.push(grid.flat_index(&idx));
            weights.push(w);
        }
    }
    (corners, weights)
}
