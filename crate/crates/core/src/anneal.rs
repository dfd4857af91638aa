//! Annealing the entropy weight to zero and certifying the limit policy.

use serde::{Deserialize, Serialize};

use crate::entropy::{gibbs_policy, BoundConstants};
use crate::eval_ct::value_ct;
use crate::eval_dt::value_dt;
use crate::fixedpoint::{eval_tol, largest_crossing, solve_fixed_point, FixedPointReport, SolverConfig};
use crate::model::{ModelSpec, RelaxedPolicy};
use crate::{sup_dist, sup_norm, Error, Mode, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedule {
    pub lambda0: f64,
    pub factor: f64,
    pub lambda_min: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule {
            lambda0: 1.0,
            factor: 0.5,
            lambda_min: 1e-3,
        }
    }
}

impl Schedule {
    /// `λ0, λ0·factor, …` down to and ending exactly at `λ_min`.
    pub fn lambdas(&self) -> Result<Vec<f64>> {
        if !(self.lambda0 > 0.0 && self.lambda0 <= 1.0) {
            return Err(Error::InvalidArgument(format!("lambda0 must lie in (0, 1], got {}", self.lambda0)));
        }
        if !(self.factor > 0.0 && self.factor < 1.0) {
            return Err(Error::InvalidArgument(format!("factor must lie in (0, 1), got {}", self.factor)));
        }
        if !(self.lambda_min > 0.0 && self.lambda_min <= self.lambda0) {
            return Err(Error::InvalidArgument(format!(
                "lambda_min must lie in (0, lambda0], got {}",
                self.lambda_min
            )));
        }
        let mut out = vec![self.lambda0];
        let mut l = self.lambda0 * self.factor;
        while l > self.lambda_min * (1.0 + 1e-12) {
            out.push(l);
            l *= self.factor;
        }
        if *out.last().unwrap() > self.lambda_min {
            out.push(self.lambda_min);
        }
        Ok(out)
    }
}

/// Acceptance levels for a [`Certificate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub deviation_gap: f64,
    pub off_support_mass: f64,
    pub self_consistency: f64,
    /// Width of the near-argmax set; defaults to `deviation_gap`.
    pub support_tol: Option<f64>,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            deviation_gap: 1e-3,
            off_support_mass: 1e-2,
            self_consistency: 1e-4,
            support_tol: None,
        }
    }
}

impl Thresholds {
    pub fn support_tol(&self) -> f64 {
        self.support_tol.unwrap_or(self.deviation_gap)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    /// `max_i (max_k a_k − Σ_k w_k ρ_k a_k)` with `a_k = f(0,i,u_k) + row(u_k)·y`.
    pub deviation_gap: f64,
    pub gap_by_state: Vec<f64>,
    /// Largest per-state mass on nodes more than `support_tol` below the max.
    pub off_support_mass: f64,
    /// `‖value(π, λ = 0) − y‖∞`.
    pub self_consistency: f64,
    pub support_tol: f64,
    /// Objective resolution between grid nodes: `Θ (1 + |y|) · covering radius`.
    pub off_grid_resolution: f64,
    /// Bound on the gain of any grid-supported deviation: `ε + Lip · η · diam`.
    pub deviation_bound: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stage {
    pub lambda: f64,
    pub report: FixedPointReport,
    pub policy: RelaxedPolicy,
    /// Certificate quantities of the stage's Gibbs policy, for trend plots.
    pub deviation_gap: f64,
    pub off_support_mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnnealReport {
    pub stages: Vec<Stage>,
    pub final_policy: RelaxedPolicy,
    /// `J^π` (discrete) or `J̃^π` of the final policy, without entropy.
    pub final_value: Vec<f64>,
    /// Continuation value `V^π` (discrete, offset 1) or `Ṽ^π(0)` the certificate is built on.
    pub continuation: Vec<f64>,
    /// `‖y*_{λ_min} − continuation‖∞`: what the entropy term still contributes.
    pub regularization_gap: f64,
    /// A priori bound `α*` on all stage fixed points.
    pub warm_start_bound: f64,
    pub certificate: Certificate,
}

/// `α* = sup{α : α ≤ (1 + η(√d α)) M}`, `η(z) = K(1 + ln(1 + z))`, bounding the
/// fixed points of every stage with `λ ≤ 1`.
pub fn warm_start_bound(model: &ModelSpec) -> Result<f64> {
    let c = BoundConstants::for_model(model);
    let m = model.summability_constant()?;
    let sd = (model.states as f64).sqrt();
    largest_crossing(|a| (1.0 + c.eta(sd * a)) * m)
}

/// Unregularized continuation value: offset 1 (discrete) or `t0 = 0` (continuous).
pub fn continuation_value(policy: &RelaxedPolicy, model: &ModelSpec, mode: Mode, tol: f64) -> Result<Vec<f64>> {
    match mode {
        Mode::Discrete => value_dt(policy, 0.0, 1, model, tol),
        Mode::Continuous => value_ct(policy, 0.0, 0.0, model, tol),
    }
}

pub fn solve_annealed(
    model: &ModelSpec,
    mode: Mode,
    schedule: &Schedule,
    cfg: &SolverConfig,
    thresholds: &Thresholds,
) -> Result<AnnealReport> {
    model.require_mode(mode)?;
    let lambdas = schedule.lambdas()?;
    let mut y = vec![0.0; model.states];
    let mut stages: Vec<Stage> = Vec::with_capacity(lambdas.len());
    let mut last_converged: Option<usize> = None;
    for &lambda in &lambdas {
        let report = solve_fixed_point(&y, lambda, model, mode, cfg)?;
        let policy = gibbs_policy(&report.y, lambda, model)?;
        let (gaps, offs) = gap_and_off_support(&policy, &report.y, model, thresholds.support_tol());
        if report.converged {
            last_converged = Some(stages.len());
            y = report.y.clone();
        }
        stages.push(Stage {
            lambda,
            policy,
            deviation_gap: gaps.iter().copied().fold(0.0, f64::max),
            off_support_mass: offs,
            report,
        });
    }
    let last = last_converged.ok_or(Error::AllStagesDiverged)?;
    let stage = &stages[last];
    let final_policy = stage.policy.clone();
    let tol = eval_tol(cfg.tol);
    let continuation = continuation_value(&final_policy, model, mode, tol)?;
    let final_value = match mode {
        Mode::Discrete => value_dt(&final_policy, 0.0, 0, model, tol)?,
        Mode::Continuous => continuation.clone(),
    };
    let regularization_gap = sup_dist(&stage.report.y, &continuation);
    let certificate = certify(&final_policy, &continuation, model, mode, thresholds)?;
    Ok(AnnealReport {
        stages,
        final_policy,
        final_value,
        continuation,
        regularization_gap,
        warm_start_bound: warm_start_bound(model)?,
        certificate,
    })
}

/// Nodes whose one-step objective is within `gap_tol` of the maximum.
pub fn extract_support(y: &[f64], i: usize, model: &ModelSpec, mode: Mode, gap_tol: f64) -> Result<Vec<usize>> {
    model.require_mode(mode)?;
    let a = model.objective(i, y);
    let m = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((0..a.len()).filter(|&k| a[k] >= m - gap_tol).collect())
}

/// Default near-argmax width `1e-6 (1 + |y|∞ Θ)`.
pub fn default_gap_tol(y: &[f64], model: &ModelSpec) -> f64 {
    1e-6 * (1.0 + sup_norm(y) * model.lipschitz_constant())
}

fn gap_and_off_support(policy: &RelaxedPolicy, y: &[f64], model: &ModelSpec, support_tol: f64) -> (Vec<f64>, f64) {
    let w = model.grid.weights();
    let mut gaps = Vec::with_capacity(model.states);
    let mut off = 0.0_f64;
    for i in 0..model.states {
        let a = model.objective(i, y);
        let m = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut mean = 0.0;
        let mut mass_off = 0.0;
        for (k, ((r, wk), ak)) in policy.row(i).iter().zip(w).zip(&a).enumerate() {
            let p = r * wk;
            mean += p * ak;
            if a[k] < m - support_tol {
                mass_off += p;
            }
        }
        gaps.push((m - mean).max(0.0));
        off = off.max(mass_off);
    }
    (gaps, off)
}

/// Evidence that `π` is an (approximate) equilibrium of the unregularized
/// problem with continuation value `y`: support inside the near-argmax set.
pub fn certify(
    policy: &RelaxedPolicy,
    y: &[f64],
    model: &ModelSpec,
    mode: Mode,
    thresholds: &Thresholds,
) -> Result<Certificate> {
    model.require_mode(mode)?;
    policy.check(&model.grid)?;
    let support_tol = thresholds.support_tol();
    let (gaps, off) = gap_and_off_support(policy, y, model, support_tol);
    let gap = gaps.iter().copied().fold(0.0, f64::max);
    // an evaluation tolerance well below the threshold being checked
    let tol = (thresholds.self_consistency * 1e-3).max(1e-13);
    let v = continuation_value(policy, model, mode, tol)?;
    let self_consistency = sup_dist(&v, y);
    let lip = model.lipschitz_constant();
    let ynorm = crate::linalg::norm2(y);
    let diam = crate::linalg::norm2(&model.grid.bounds().iter().map(|(a, b)| b - a).collect::<Vec<_>>());
    let passed = gap <= thresholds.deviation_gap
        && off <= thresholds.off_support_mass
        && self_consistency <= thresholds.self_consistency;
    Ok(Certificate {
        deviation_gap: gap,
        gap_by_state: gaps,
        off_support_mass: off,
        self_consistency,
        support_tol,
        off_grid_resolution: lip * (1.0 + ynorm) * model.grid.covering_radius(),
        deviation_bound: gap + lip * (1.0 + ynorm) * off * diam,
        passed,
    })
}
