//! Discrete-time policy evaluation.

use crate::entropy::policy_entropy;
use crate::linalg::Matrix;
use crate::model::{truncation_horizon_for, ModelSpec, RelaxedPolicy, RewardSpec};
use crate::{Error, Mode, Result};

/// `P[i][j] = Σ_k w_k ρ[i][k] p[k][i][j]`.
pub fn policy_kernel(policy: &RelaxedPolicy, model: &ModelSpec) -> Result<Matrix> {
    model.require_mode(Mode::Discrete)?;
    policy.check(&model.grid)?;
    Ok(mix_kernel(policy, model))
}

/// Policy-averaged kernel without checks; shared with the continuous-time side.
pub(crate) fn mix_kernel(policy: &RelaxedPolicy, model: &ModelSpec) -> Matrix {
    let d = model.states;
    let w = model.grid.weights();
    let mut p = Matrix::zeros(d, d);
    for i in 0..d {
        let out = p.row_mut(i);
        for (k, (&r, &wk)) in policy.row(i).iter().zip(w).enumerate() {
            let m = r * wk;
            if m == 0.0 {
                continue;
            }
            for (o, x) in out.iter_mut().zip(model.kernel_row(k, i)) {
                *o += m * x;
            }
        }
    }
    p
}

/// Policy-averaged reward `Σ_k w_k ρ[i][k] g[i][k]` of a table indexed `[state][node]`.
pub(crate) fn mix_table(policy: &RelaxedPolicy, model: &ModelSpec, table: &[Vec<f64>]) -> Vec<f64> {
    let w = model.grid.weights();
    (0..model.states)
        .map(|i| {
            policy
                .row(i)
                .iter()
                .zip(w)
                .zip(&table[i])
                .map(|((r, wk), g)| r * wk * g)
                .sum()
        })
        .collect()
}

/// Running reward of the policy at time `t`, entropy term included.
pub(crate) struct RunningReward<'a> {
    model: &'a ModelSpec,
    policy: &'a RelaxedPolicy,
    lambda: f64,
    entropy: Vec<f64>,
    separable: Option<Vec<f64>>,
}

impl<'a> RunningReward<'a> {
    pub(crate) fn new(model: &'a ModelSpec, policy: &'a RelaxedPolicy, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "entropy weight must be finite and >= 0, got {lambda}"
            )));
        }
        let entropy = policy_entropy(policy, &model.grid)?;
        let separable = match &model.reward {
            RewardSpec::Separable { g } => Some(mix_table(policy, model, g)),
            RewardSpec::Tabulated { .. } => None,
        };
        Ok(RunningReward {
            model,
            policy,
            lambda,
            entropy,
            separable,
        })
    }

    pub(crate) fn entropy_cap(&self) -> f64 {
        crate::sup_norm(&self.entropy)
    }

    /// With a separable reward, `r(t) = δ(t) · shape`.
    pub(crate) fn separable_shape(&self) -> Option<Vec<f64>> {
        self.separable.as_ref().map(|g| {
            g.iter()
                .zip(&self.entropy)
                .map(|(g, h)| g + self.lambda * h)
                .collect()
        })
    }

    pub(crate) fn at(&self, t: f64, out: &mut [f64]) {
        let delta = self.model.discount.eval(t);
        match &self.separable {
            Some(g) => {
                for ((o, g), h) in out.iter_mut().zip(g).zip(&self.entropy) {
                    *o = delta * (g + self.lambda * h);
                }
            }
            None => {
                let w = self.model.grid.weights();
                for (i, o) in out.iter_mut().enumerate() {
                    let f: f64 = self
                        .policy
                        .row(i)
                        .iter()
                        .zip(w)
                        .enumerate()
                        .map(|(k, (r, wk))| r * wk * self.model.reward_at(t, i, k))
                        .sum();
                    *o = f + self.lambda * delta * self.entropy[i];
                }
            }
        }
    }
}

/// Regularized value `Σ_{k≥0} P^k r_{offset+k}` truncated so that the
/// discarded mass is at most `tol` per entry.
///
/// `offset = 1` gives the auxiliary value `V^π_λ`, `offset = 0` gives `J^π_λ`;
/// `λ = 0` drops the entropy term.
pub fn value_dt(
    policy: &RelaxedPolicy,
    lambda: f64,
    offset: u32,
    model: &ModelSpec,
    tol: f64,
) -> Result<Vec<f64>> {
    model.require_mode(Mode::Discrete)?;
    let reward = RunningReward::new(model, policy, lambda)?;
    let horizon = truncation_horizon_for(model, lambda, reward.entropy_cap(), tol, Mode::Discrete)?;
    Ok(series(model, policy, &reward, offset, horizon as usize))
}

/// `Σ_{k=0}^{horizon} P^k r_{offset+k}` with an explicit horizon.
pub fn value_dt_horizon(
    policy: &RelaxedPolicy,
    lambda: f64,
    offset: u32,
    model: &ModelSpec,
    horizon: usize,
) -> Result<Vec<f64>> {
    model.require_mode(Mode::Discrete)?;
    let reward = RunningReward::new(model, policy, lambda)?;
    Ok(series(model, policy, &reward, offset, horizon))
}

fn series(
    model: &ModelSpec,
    policy: &RelaxedPolicy,
    reward: &RunningReward,
    offset: u32,
    horizon: usize,
) -> Vec<f64> {
    let p = mix_kernel(policy, model);
    let d = model.states;
    // backward recursion v ← r_k + P v, from k = horizon down to 0
    let mut v = vec![0.0; d];
    let mut r = vec![0.0; d];
    let mut pv = vec![0.0; d];
    for k in (0..=horizon).rev() {
        reward.at((offset as usize + k) as f64, &mut r);
        p.mul_vec_into(&v, &mut pv);
        for ((vi, ri), pvi) in v.iter_mut().zip(&r).zip(&pv) {
            *vi = ri + pvi;
        }
    }
    v
}
