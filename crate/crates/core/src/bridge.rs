//! Time discretization of a continuous-time model and the `h → 0` study.

use rayon::prelude::*;
use serde::Serialize;

use crate::entropy::gibbs_policy;
use crate::fixedpoint::{solve_fixed_point, FixedPointReport, SolverConfig};
use crate::linalg::Matrix;
use crate::model::{DiscountSpec, Kernel, ModelSpec, RewardSpec};
use crate::{sup_dist, Error, Mode, Result};

/// Largest `|q_ii|` over nodes and states.
pub fn max_exit_rate(model: &ModelSpec) -> f64 {
    model
        .kernel
        .matrices()
        .iter()
        .flat_map(|q| (0..q.rows()).map(move |i| -q[(i, i)]))
        .fold(0.0, f64::max)
}

/// Discrete-time model with `p_h = h q + I`, `f_h(k, i, u) = h f(kh, i, u)` and
/// `δ_h(k) = δ(kh)`.
pub fn discretize(model: &ModelSpec, h: f64) -> Result<ModelSpec> {
    discretize_indexed(model, h, 0)
}

fn discretize_indexed(model: &ModelSpec, h: f64, index: usize) -> Result<ModelSpec> {
    model.require_mode(Mode::Continuous)?;
    let max_rate = max_exit_rate(model);
    if !(h > 0.0 && h.is_finite()) || h * max_rate > 1.0 {
        return Err(Error::StepTooLarge { index, h, max_rate });
    }
    let mats = model
        .kernel
        .matrices()
        .iter()
        .map(|q| {
            let mut p = q.scale(h);
            for i in 0..p.rows() {
                p[(i, i)] += 1.0;
                // h q_ii + 1 may round a hair below zero when h q_ii = −1
                p[(i, i)] = p[(i, i)].max(0.0);
            }
            p
        })
        .collect::<Vec<Matrix>>();
    let reward = match &model.reward {
        RewardSpec::Separable { g } => RewardSpec::Separable {
            g: g.iter().map(|row| row.iter().map(|x| x * h).collect()).collect(),
        },
        RewardSpec::Tabulated { step, values, tail } => RewardSpec::Tabulated {
            step: step / h,
            values: values
                .iter()
                .map(|s| s.iter().map(|row| row.iter().map(|x| x * h).collect()).collect())
                .collect(),
            tail: *tail,
        },
    };
    Ok(ModelSpec {
        states: model.states,
        grid: model.grid.clone(),
        discount: DiscountSpec::Sampled {
            base: Box::new(model.discount.clone()),
            step: h,
        },
        reward,
        kernel: Kernel::Transition(mats),
        cone: model.cone,
        lipschitz: model.lipschitz.map(|l| l * h),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BridgeRow {
    pub h: f64,
    /// `‖y^h − y^ct‖∞`.
    pub value_discrepancy: f64,
    /// Max over states of the quadrature L¹ distance between the Gibbs policies.
    pub policy_distance: f64,
    pub report: FixedPointReport,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BridgeStudy {
    pub lambda: f64,
    pub reference: FixedPointReport,
    pub rows: Vec<BridgeRow>,
}

impl BridgeStudy {
    /// Successive ratios `discrepancy(h_{n}) / discrepancy(h_{n+1})`.
    pub fn ratios(&self) -> Vec<f64> {
        self.rows
            .windows(2)
            .map(|w| w[0].value_discrepancy / w[1].value_discrepancy)
            .collect()
    }
}

/// Solves the continuous-time fixed point at `λ` once, then the discrete-time
/// fixed point of each `h`-model at entropy weight `hλ`, warm-started from the
/// continuous-time solution.
pub fn convergence_study(model: &ModelSpec, lambda: f64, h_list: &[f64], cfg: &SolverConfig) -> Result<BridgeStudy> {
    model.require_mode(Mode::Continuous)?;
    if h_list.is_empty() {
        return Err(Error::InvalidArgument("step list is empty".into()));
    }
    if let Some(i) = (1..h_list.len()).find(|&i| h_list[i] >= h_list[i - 1]) {
        return Err(Error::InvalidArgument(format!("steps must be strictly decreasing (entry {i})")));
    }
    let models = h_list
        .iter()
        .enumerate()
        .map(|(i, &h)| discretize_indexed(model, h, i))
        .collect::<Result<Vec<_>>>()?;
    let reference = solve_fixed_point(&vec![0.0; model.states], lambda, model, Mode::Continuous, cfg)?;
    let ct_policy = gibbs_policy(&reference.y, lambda, model)?;
    let rows = models
        .par_iter()
        .zip(h_list)
        .map(|(m, &h)| {
            let report = solve_fixed_point(&reference.y, h * lambda, m, Mode::Discrete, cfg)?;
            let policy = gibbs_policy(&report.y, h * lambda, m)?;
            Ok(BridgeRow {
                h,
                value_discrepancy: sup_dist(&report.y, &reference.y),
                policy_distance: policy.l1_distance(&ct_policy, &model.grid),
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BridgeStudy {
        lambda,
        reference,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::entropy::gibbs;
    use crate::model::build_action_grid;
    use approx::assert_relative_eq;

    #[test]
    fn discretized_rows() {
        let m = builtin::two_state_example(33);
        let d = discretize(&m, 0.5).unwrap();
        assert_eq!(d.kernel_row(32, 0), &[0.5, 0.5]);
        assert!(d.validate().passed());
        let grid = build_action_grid(&[(0.0, 1.0)], 2).unwrap();
        let q = Matrix::from_rows(&[vec![-1.0, 1.0], vec![0.0, 0.0]]);
        let c = builtin::constant_model(Kernel::Generator(vec![q]), vec![1.0, 0.0], grid, DiscountSpec::Exponential { rate: 1.0 });
        let d = discretize(&c, 0.1).unwrap();
        assert_relative_eq!(d.kernel_row(0, 0)[0], 0.9, epsilon = 1e-15);
        assert_relative_eq!(d.kernel_row(0, 0)[1], 0.1, epsilon = 1e-15);
        assert_eq!(d.kernel_row(1, 1), &[0.0, 1.0]);
        assert_relative_eq!(d.reward_at(3.0, 0, 0), 0.1 * (-0.3f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn step_too_large() {
        let m = builtin::two_state_example(5);
        assert!(matches!(discretize(&m, 1.5), Err(Error::StepTooLarge { index: 0, .. })));
        let cfg = SolverConfig::default();
        let e = convergence_study(&m, 0.1, &[0.5, 0.2, 0.1], &cfg);
        assert!(e.is_ok());
        let mut q = m.clone();
        for mat in match &mut q.kernel {
            Kernel::Generator(x) => x,
            _ => unreachable!(),
        } {
            *mat = mat.scale(4.0);
        }
        assert!(matches!(
            convergence_study(&q, 0.1, &[0.5, 0.2, 0.1], &cfg),
            Err(Error::StepTooLarge { index: 0, .. })
        ));
    }

    #[test]
    fn gibbs_scaling_identity() {
        let m = builtin::two_state_example(33);
        let y = [0.3, 0.9];
        for h in [0.2, 0.025] {
            let d = discretize(&m, h).unwrap();
            for i in 0..2 {
                let a = gibbs(&y, i, h * 0.1, &d).unwrap();
                let b = gibbs(&y, i, 0.1, &m).unwrap();
                assert!(sup_dist(&a, &b) <= 1e-12);
            }
        }
    }
}
