//! Continuous-time policy evaluation by uniformization.

use crate::eval_dt::{mix_kernel, RunningReward};
use crate::linalg::Matrix;
use crate::model::{truncation_horizon_for, ModelSpec, RelaxedPolicy};
use crate::{Error, Mode, Result};

/// Largest `γ s` handled by one Poisson series; longer times are split.
const MAX_POISSON_MEAN: f64 = 32.0;
const MIN_PANELS: usize = 64;
const MAX_PANELS: usize = 1 << 20;
/// Truncation of each step's Poisson series in the time integration.
const STEP_TOL: f64 = 1e-16;

/// `Q[i][j] = Σ_k w_k ρ[i][k] q[k][i][j]`; slightly negative off-diagonal
/// rates from rounding are clamped to zero and the diagonal is rebuilt.
pub fn policy_generator(policy: &RelaxedPolicy, model: &ModelSpec) -> Result<Matrix> {
    model.require_mode(Mode::Continuous)?;
    policy.check(&model.grid)?;
    let mut q = mix_kernel(policy, model);
    for i in 0..model.states {
        let row = q.row_mut(i);
        let mut off = 0.0;
        for (j, x) in row.iter_mut().enumerate() {
            if j != i {
                if *x < 0.0 && *x >= -1e-12 {
                    *x = 0.0;
                }
                off += *x;
            }
        }
        row[i] = -off;
    }
    Ok(q)
}

fn check_generator(q: &Matrix) -> Result<f64> {
    if q.rows() != q.cols() {
        return Err(Error::InvalidGenerator(format!(
            "matrix is {}x{}, not square",
            q.rows(),
            q.cols()
        )));
    }
    let mut gamma = 0.0_f64;
    for i in 0..q.rows() {
        let row = q.row(i);
        let mut sum = 0.0;
        let mut scale = 0.0_f64;
        for (j, &x) in row.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::InvalidGenerator(format!("entry ({i}, {j}) is not finite")));
            }
            if j != i && x < -1e-12 {
                return Err(Error::InvalidGenerator(format!("negative rate {x} at ({i}, {j})")));
            }
            sum += x;
            scale = scale.max(x.abs());
        }
        if sum.abs() > 1e-9 * scale.max(1.0) {
            return Err(Error::InvalidGenerator(format!("row {i} sums to {sum}")));
        }
        gamma = gamma.max(-row[i]);
    }
    Ok(gamma)
}

/// `e^{sQ}` by uniformization with Poisson truncation error at most `tol`.
pub fn transition_matrix(q: &Matrix, s: f64, tol: f64) -> Result<Matrix> {
    let gamma = check_generator(q)?;
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!("time must be finite and >= 0, got {s}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let d = q.rows();
    if gamma == 0.0 || s == 0.0 {
        return Ok(Matrix::identity(d));
    }
    // e^{sQ} = (e^{(s/2^m)Q})^{2^m}
    let mut halvings = 0;
    while gamma * s / f64::powi(2.0, halvings) > MAX_POISSON_MEAN {
        halvings += 1;
    }
    let pieces = f64::powi(2.0, halvings);
    let mut e = uniformized(q, gamma, s / pieces, tol / pieces);
    for _ in 0..halvings {
        e = e.matmul(&e);
    }
    Ok(e)
}

fn uniformized(q: &Matrix, gamma: f64, s: f64, tol: f64) -> Matrix {
    let d = q.rows();
    let mut pt = q.scale(1.0 / gamma);
    for i in 0..d {
        pt[(i, i)] += 1.0;
    }
    let mean = gamma * s;
    let mut weight = (-mean).exp();
    let mut covered = weight;
    let mut power = Matrix::identity(d);
    let mut out = Matrix::identity(d).scale(weight);
    let mut n = 0usize;
    while 1.0 - covered > tol && n < 10_000 {
        n += 1;
        weight *= mean / n as f64;
        covered += weight;
        power = power.matmul(&pt);
        out.axpy(weight, &power);
    }
    out
}

/// `Ṽ(t0, i) = ∫_0^∞ Σ_j [e^{sQ}]_{ij} r(t0 + s, j) ds` with the running reward
/// `r` of the policy (entropy weighted by `λ δ`), truncated at a horizon whose
/// tail is at most `tol/2` and integrated by composite Simpson refined until
/// successive estimates differ by at most `tol/2`.
///
/// `λ = 0, t0 = 0` gives the unregularized value `J̃^π`.
pub fn value_ct(
    policy: &RelaxedPolicy,
    lambda: f64,
    t0: f64,
    model: &ModelSpec,
    tol: f64,
) -> Result<Vec<f64>> {
    let q = policy_generator(policy, model)?;
    if !(t0 >= 0.0 && t0.is_finite()) {
        return Err(Error::InvalidArgument(format!("start time must be finite and >= 0, got {t0}")));
    }
    let reward = RunningReward::new(model, policy, lambda)?;
    let horizon = truncation_horizon_for(model, lambda, reward.entropy_cap(), tol / 2.0, Mode::Continuous)?;
    let span = (horizon - t0).max(0.0);
    let d = model.states;
    if span == 0.0 {
        return Ok(vec![0.0; d]);
    }
    let mut panels = MIN_PANELS;
    let mut prev = simpson(&q, &reward, model, t0, span, panels)?;
    while panels < MAX_PANELS {
        panels *= 2;
        let next = simpson(&q, &reward, model, t0, span, panels)?;
        let diff = crate::sup_dist(&next, &prev);
        prev = next;
        if diff <= tol / 2.0 {
            break;
        }
    }
    Ok(prev)
}

fn simpson(
    q: &Matrix,
    reward: &RunningReward,
    model: &ModelSpec,
    t0: f64,
    span: f64,
    panels: usize,
) -> Result<Vec<f64>> {
    let h = span / panels as f64;
    let step = transition_matrix(q, h, STEP_TOL)?;
    let d = q.rows();
    let coef = |j: usize| -> f64 {
        if j == 0 || j == panels {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        }
    };
    let mut acc = vec![0.0; d];
    if let Some(shape) = reward.separable_shape() {
        // r(t) = δ(t)·shape, so e^{sQ} r(t0+s) = δ(t0+s) e^{sQ} shape
        let mut m = shape;
        let mut next = vec![0.0; d];
        for j in 0..=panels {
            let c = coef(j) * model.discount.eval(t0 + j as f64 * h);
            for (a, x) in acc.iter_mut().zip(&m) {
                *a += c * x;
            }
            if j < panels {
                step.mul_vec_into(&m, &mut next);
                std::mem::swap(&mut m, &mut next);
            }
        }
    } else {
        let mut e = Matrix::identity(d);
        let mut r = vec![0.0; d];
        let mut er = vec![0.0; d];
        for j in 0..=panels {
            reward.at(t0 + j as f64 * h, &mut r);
            e.mul_vec_into(&r, &mut er);
            let c = coef(j);
            for (a, x) in acc.iter_mut().zip(&er) {
                *a += c * x;
            }
            if j < panels {
                e = e.matmul(&step);
            }
        }
    }
    for a in &mut acc {
        *a *= h / 3.0;
    }
    Ok(acc)
}
