//! The maps `Ψ_λ` / `Ψ̃_λ` and a damped fixed-point solver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::entropy::{gibbs_policy, BoundConstants};
use crate::eval_ct::value_ct;
use crate::eval_dt::value_dt;
use crate::linalg::{dot, norm2, solve, Matrix};
use crate::model::ModelSpec;
use crate::{sup_dist, sup_norm, Error, Mode, Result};

/// Smallest damping the backoff will use.
const MIN_DAMPING: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Initial damping `θ ∈ (0, 1]`.
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Halve the damping whenever the residual grows.
    pub backoff: bool,
    pub anderson: bool,
    pub anderson_window: usize,
    /// Number of starting points tried by [`solve_multistart`].
    pub multistart: usize,
    pub seed: u64,
    /// Count iterates leaving the a priori ball `|Ψ(y)| ≤ (1 + λφ(|y|))M`.
    pub check_confinement: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            damping: 0.5,
            tol: 1e-10,
            max_iter: 500,
            backoff: true,
            anderson: false,
            anderson_window: 3,
            multistart: 1,
            seed: 0,
            check_confinement: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixedPointReport {
    pub y: Vec<f64>,
    /// `‖Ψ(y) − y‖∞` at the returned `y`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<(usize, f64)>,
    pub final_damping: f64,
    pub confinement_violations: usize,
    /// Index into the multistart sequence that produced this report.
    pub start: usize,
}

/// Accuracy requested from the evaluator inside `Ψ`, relative to the solver tolerance.
pub fn eval_tol(tol: f64) -> f64 {
    (0.1 * tol).max(1e-15)
}

/// `Ψ_λ(y) = V^{Γ_λ(y)}_λ` (discrete) or `Ψ̃_λ(y) = Ṽ^{Γ̃_λ(y)}_λ(0)` (continuous).
pub fn psi(y: &[f64], lambda: f64, model: &ModelSpec, mode: Mode, tol: f64) -> Result<Vec<f64>> {
    model.require_mode(mode)?;
    if y.len() != model.states {
        return Err(Error::InvalidArgument(format!(
            "value vector has {} entries, model has {} states",
            y.len(),
            model.states
        )));
    }
    let policy = gibbs_policy(y, lambda, model)?;
    match mode {
        Mode::Discrete => value_dt(&policy, lambda, 1, model, tol),
        Mode::Continuous => value_ct(&policy, lambda, 0.0, model, tol),
    }
}

/// Radius `α*` of the ball `{|y|∞ ≤ α}` that `Ψ_λ` maps into itself:
/// the largest `α` with `α ≤ (1 + λ φ(√d α)) M`.
pub fn brouwer_radius(model: &ModelSpec, lambda: f64) -> Result<f64> {
    let c = BoundConstants::for_model(model);
    let m = model.summability_constant()?;
    let sd = (model.states as f64).sqrt();
    largest_crossing(|a| (1.0 + lambda * c.phi(lambda, sd * a)) * m)
}

/// Largest `α ≥ 0` with `α ≤ bound(α)` for a sublinear nondecreasing `bound`.
pub(crate) fn largest_crossing(bound: impl Fn(f64) -> f64) -> Result<f64> {
    let mut hi = bound(0.0).max(1.0);
    let mut n = 0;
    while hi <= bound(hi) {
        hi *= 2.0;
        n += 1;
        if n > 1000 || !hi.is_finite() {
            return Err(Error::InvalidModel("a priori value bound does not close".into()));
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= bound(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Damped Picard iteration `y ← (1−θ) y + θ Ψ(y)`, optionally Anderson-accelerated.
///
/// Stops when `‖Ψ(y) − y‖∞ ≤ tol` holds despite the evaluation error in `Ψ`;
/// running out of iterations is reported, not an error.
pub fn solve_fixed_point(
    y0: &[f64],
    lambda: f64,
    model: &ModelSpec,
    mode: Mode,
    cfg: &SolverConfig,
) -> Result<FixedPointReport> {
    if cfg.max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", cfg.tol)));
    }
    if !(cfg.damping > 0.0 && cfg.damping <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "damping must lie in (0, 1], got {}",
            cfg.damping
        )));
    }
    if !(lambda > 0.0) {
        return Err(Error::NonpositiveLambda(lambda));
    }
    model.require_mode(mode)?;
    let etol = eval_tol(cfg.tol);
    let confinement = if cfg.check_confinement {
        Some((BoundConstants::for_model(model), model.summability_constant()?))
    } else {
        None
    };

    let mut y = y0.to_vec();
    let mut theta = cfg.damping;
    let mut trace = Vec::new();
    let mut violations = 0;
    let mut history: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let mut last: Option<(Vec<f64>, Vec<f64>, f64)> = None;

    for it in 0..cfg.max_iter {
        let g = psi(&y, lambda, model, mode, etol)?;
        let f: Vec<f64> = g.iter().zip(&y).map(|(a, b)| a - b).collect();
        let res = sup_norm(&f);
        trace.push((it, res));
        if let Some((c, m)) = &confinement {
            let bound = (1.0 + lambda * c.phi(lambda, norm2(&y))) * m;
            if sup_norm(&g) > bound * (1.0 + 1e-9) {
                violations += 1;
            }
        }
        // Ψ is only known to within etol, so leave room for it
        if res + etol <= cfg.tol {
            return Ok(FixedPointReport {
                y,
                residual: res,
                iterations: it + 1,
                converged: true,
                trace,
                final_damping: theta,
                confinement_violations: violations,
                start: 0,
            });
        }
        if !res.is_finite() {
            break;
        }
        if let Some((py, _, pres)) = &last {
            if res > *pres {
                if cfg.backoff {
                    theta = (theta * 0.5).max(MIN_DAMPING);
                }
                if cfg.anderson {
                    history.clear();
                    // retreat to the better previous point along a shorter step
                    let py = py.clone();
                    let (_, pf, pres) = last.clone().unwrap();
                    y = py.iter().zip(&pf).map(|(a, b)| a + theta * b).collect();
                    last = Some((py, pf, pres));
                    continue;
                }
            }
        }
        let next = if cfg.anderson {
            if let Some((py, pf, _)) = &last {
                history.push((
                    y.iter().zip(py).map(|(a, b)| a - b).collect(),
                    f.iter().zip(pf).map(|(a, b)| a - b).collect(),
                ));
                if history.len() > cfg.anderson_window.max(1) {
                    history.remove(0);
                }
            }
            anderson_step(&y, &f, &history, theta)
        } else {
            y.iter().zip(&f).map(|(a, b)| a + theta * b).collect()
        };
        last = Some((y, f, res));
        y = next;
    }
    let (y, residual) = match last {
        // report the point whose residual was actually evaluated
        Some((py, _, pres)) if trace.last().is_none_or(|t| pres <= t.1) => (py, pres),
        _ => {
            let r = trace.last().map_or(f64::INFINITY, |t| t.1);
            (y, r)
        }
    };
    Ok(FixedPointReport {
        y,
        residual,
        iterations: cfg.max_iter,
        converged: false,
        trace,
        final_damping: theta,
        confinement_violations: violations,
        start: 0,
    })
}

/// Type-II Anderson mixing: `y + θf − (ΔY + θΔF) γ` with `γ` the least-squares
/// fit of `f` by the residual differences.
fn anderson_step(y: &[f64], f: &[f64], history: &[(Vec<f64>, Vec<f64>)], theta: f64) -> Vec<f64> {
    let plain = || y.iter().zip(f).map(|(a, b)| a + theta * b).collect();
    let m = history.len();
    if m == 0 {
        return plain();
    }
    let mut a = Matrix::zeros(m, m);
    let mut b = vec![0.0; m];
    for p in 0..m {
        for q in 0..m {
            a[(p, q)] = dot(&history[p].1, &history[q].1);
        }
        b[p] = dot(&history[p].1, f);
    }
    let ridge = 1e-12 * (0..m).map(|p| a[(p, p)]).fold(0.0, f64::max);
    for p in 0..m {
        a[(p, p)] += ridge;
    }
    let Some(gamma) = solve(&a, &b) else {
        return plain();
    };
    let mut out: Vec<f64> = plain();
    for (p, g) in gamma.iter().enumerate() {
        for ((o, dy), df) in out.iter_mut().zip(&history[p].0).zip(&history[p].1) {
            *o -= g * (dy + theta * df);
        }
    }
    if out.iter().all(|x| x.is_finite()) {
        out
    } else {
        plain()
    }
}

/// Starting points `0, M·1, −M·1`, then seeded uniform draws from the ball
/// `|y|∞ ≤ α*`.
pub fn multistart_points(model: &ModelSpec, lambda: f64, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let d = model.states;
    let m = model.summability_constant()?;
    let mut pts = vec![vec![0.0; d], vec![m; d], vec![-m; d]];
    pts.truncate(count);
    if count > 3 {
        let r = brouwer_radius(model, lambda)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 3..count {
            pts.push((0..d).map(|_| rng.gen_range(-r..=r)).collect());
        }
    }
    Ok(pts)
}

/// Runs [`solve_fixed_point`] from each multistart point in order and returns the
/// first converged report, else the one with the smallest residual.
pub fn solve_multistart(
    lambda: f64,
    model: &ModelSpec,
    mode: Mode,
    cfg: &SolverConfig,
) -> Result<FixedPointReport> {
    let starts = multistart_points(model, lambda, cfg.multistart.max(1), cfg.seed)?;
    let mut best: Option<FixedPointReport> = None;
    for (s, y0) in starts.iter().enumerate() {
        let mut rep = solve_fixed_point(y0, lambda, model, mode, cfg)?;
        rep.start = s;
        if rep.converged {
            return Ok(rep);
        }
        if best.as_ref().is_none_or(|b| rep.residual < b.residual) {
            best = Some(rep);
        }
    }
    Ok(best.expect("at least one start"))
}

/// Independent recomputation of `‖Ψ(y) − y‖∞`.
pub fn recertify(y: &[f64], lambda: f64, model: &ModelSpec, mode: Mode, tol: f64) -> Result<f64> {
    Ok(sup_dist(&psi(y, lambda, model, mode, eval_tol(tol))?, y))
}
