use rayon::prelude::*;

use crate::anneal::continuation_value;
use crate::model::{ModelSpec, RelaxedPolicy};
use crate::{Error, Mode, Result};

pub const DEFAULT_SCAN_CAP: usize = 1_000_000;

/// Accuracy of the value evaluations inside the scan.
pub(crate) const SCAN_EVAL_TOL: f64 = 1e-12;

/// Every standard policy (one node per state) whose chosen node lies in the
/// near-argmax of `u ↦ f(0,i,u) + row(u)·V^α` in every state, where `V^α` is
/// the policy's own continuation value. Near means within
/// `tol · (1 + max_{i,u} |objective|)`. Results are in lexicographic node order.
pub fn standard_equilibrium_scan(model: &ModelSpec, mode: Mode, tol: f64) -> Result<Vec<Vec<usize>>> {
    standard_equilibrium_scan_with_cap(model, mode, tol, DEFAULT_SCAN_CAP)
}

pub fn standard_equilibrium_scan_with_cap(
    model: &ModelSpec,
    mode: Mode,
    tol: f64,
    cap: usize,
) -> Result<Vec<Vec<usize>>> {
    model.require_mode(mode)?;
    let n = model.grid.len();
    let d = model.states;
    let total = (0..d)
        .try_fold(1usize, |acc, _| acc.checked_mul(n))
        .filter(|&c| c <= cap)
        .ok_or(Error::ScanTooLarge {
            candidates: n.saturating_pow(d as u32),
            cap,
        })?;
    let found = (0..total)
        .into_par_iter()
        .map(|c| {
            let nodes = decode(c, n, d);
            let policy = RelaxedPolicy::standard(&model.grid, &nodes);
            let y = continuation_value(&policy, model, mode, SCAN_EVAL_TOL)?;
            let objectives: Vec<Vec<f64>> = (0..d).map(|i| model.objective(i, &y)).collect();
            let slack = tol * (1.0 + objective_scale(&objectives));
            let ok = objectives.iter().zip(&nodes).all(|(a, &k)| {
                let max = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                a[k] >= max - slack
            });
            Ok(ok.then_some(nodes))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(found.into_iter().flatten().collect())
}

/// `max_{i,k} |a_ik|`, the scale of relative argmax tolerances.
pub(crate) fn objective_scale(objectives: &[Vec<f64>]) -> f64 {
    objectives.iter().flatten().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Node lists in lexicographic order: state 0 varies slowest.
pub(crate) fn decode(mut c: usize, n: usize, d: usize) -> Vec<usize> {
    let mut out = vec![0; d];
    for i in (0..d).rev() {
        out[i] = c % n;
        c /= n;
    }
    out
}
