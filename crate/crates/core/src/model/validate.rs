use serde::Serialize;

use super::{Kernel, ModelSpec, RewardSpec};
use crate::linalg::norm2;

const ROW_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    RowNotStochastic { node: usize, state: usize, sum: f64 },
    NegativeProbability { node: usize, from: usize, to: usize, value: f64 },
    RowSumNonzero { node: usize, state: usize, sum: f64 },
    NegativeRate { node: usize, from: usize, to: usize, value: f64 },
    NonFinite { node: usize, from: usize, to: usize },
    KernelShape { detail: String },
    RewardShape { detail: String },
    NonFiniteReward { state: usize, node: usize },
    Discount { detail: String },
    NotSummable { detail: String },
    Cone { detail: String },
    Lipschitz { value: f64 },
    NoStates,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// Max finite-difference slope of `f` plus kernel rows over adjacent nodes.
    pub lipschitz_estimate: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_model(model: &ModelSpec) -> ValidationReport {
    let mut v = Vec::new();
    let d = model.states;
    let n = model.grid.len();
    if d == 0 {
        v.push(Violation::NoStates);
    }
    let mats = model.kernel.matrices();
    let shape_ok = check_kernel_shape(model, &mut v);
    if shape_ok {
        let generator = matches!(model.kernel, Kernel::Generator(_));
        for (k, m) in mats.iter().enumerate() {
            for i in 0..d {
                let row = m.row(i);
                let mut finite = true;
                for (j, &x) in row.iter().enumerate() {
                    if !x.is_finite() {
                        v.push(Violation::NonFinite { node: k, from: i, to: j });
                        finite = false;
                    } else if generator && j != i && x < 0.0 {
                        v.push(Violation::NegativeRate { node: k, from: i, to: j, value: x });
                    } else if !generator && x < 0.0 {
                        v.push(Violation::NegativeProbability { node: k, from: i, to: j, value: x });
                    }
                }
                if !finite {
                    continue;
                }
                let sum: f64 = row.iter().sum();
                if generator && sum.abs() > ROW_TOL {
                    v.push(Violation::RowSumNonzero { node: k, state: i, sum });
                } else if !generator && (sum - 1.0).abs() > ROW_TOL {
                    v.push(Violation::RowNotStochastic { node: k, state: i, sum });
                }
            }
        }
    }
    let reward_ok = check_reward_shape(&model.reward, d, n, &mut v);
    if let Err(detail) = model.discount.check(model.mode()) {
        v.push(Violation::Discount { detail });
    } else if reward_ok {
        match model.reward_mass() {
            Ok(m) if m.is_finite() => {}
            Ok(m) => v.push(Violation::NotSummable {
                detail: format!("reward mass is {m}"),
            }),
            Err(e) => v.push(Violation::NotSummable { detail: e.to_string() }),
        }
    }
    if let Some(c) = model.cone {
        if !(c.iota > 0.0 && c.iota <= std::f64::consts::FRAC_PI_2) {
            v.push(Violation::Cone {
                detail: format!("angle {} outside (0, pi/2]", c.iota),
            });
        }
        if !(c.theta > 0.0 && c.theta.is_finite()) {
            v.push(Violation::Cone {
                detail: format!("slant height {} must be positive", c.theta),
            });
        }
    }
    if let Some(l) = model.lipschitz {
        if !(l >= 0.0 && l.is_finite()) {
            v.push(Violation::Lipschitz { value: l });
        }
    }
    let lipschitz_estimate = if shape_ok && reward_ok {
        lipschitz_estimate(model)
    } else {
        f64::NAN
    };
    ValidationReport {
        violations: v,
        lipschitz_estimate,
    }
}

fn check_kernel_shape(model: &ModelSpec, v: &mut Vec<Violation>) -> bool {
    let mats = model.kernel.matrices();
    if mats.len() != model.grid.len() {
        v.push(Violation::KernelShape {
            detail: format!("{} kernel matrices for {} grid nodes", mats.len(), model.grid.len()),
        });
        return false;
    }
    for (k, m) in mats.iter().enumerate() {
        if m.rows() != model.states || m.cols() != model.states {
            v.push(Violation::KernelShape {
                detail: format!(
                    "kernel matrix {k} is {}x{}, expected {}x{}",
                    m.rows(),
                    m.cols(),
                    model.states,
                    model.states
                ),
            });
            return false;
        }
    }
    true
}

fn check_reward_shape(reward: &RewardSpec, d: usize, n: usize, v: &mut Vec<Violation>) -> bool {
    let tables: Vec<&Vec<Vec<f64>>> = match reward {
        RewardSpec::Separable { g } => vec![g],
        RewardSpec::Tabulated { step, values, tail } => {
            if !(*step > 0.0) || values.is_empty() || !(tail.is_finite() && *tail >= 0.0) {
                v.push(Violation::RewardShape {
                    detail: "tabulated reward needs a positive step, at least one slice and a finite tail".into(),
                });
                return false;
            }
            values.iter().collect()
        }
    };
    for g in tables {
        if g.len() != d || g.iter().any(|row| row.len() != n) {
            v.push(Violation::RewardShape {
                detail: format!("reward table must be {d} states x {n} nodes"),
            });
            return false;
        }
        for (i, row) in g.iter().enumerate() {
            if let Some(k) = row.iter().position(|x| !x.is_finite()) {
                v.push(Violation::NonFiniteReward { state: i, node: k });
                return false;
            }
        }
    }
    true
}

/// `max |f(t,i,u) − f(t,i,u')| / |u − u'| + |row(u) − row(u')| / |u − u'|` over
/// adjacent grid nodes, states and (for tabulated rewards) time slices.
pub(crate) fn lipschitz_estimate(model: &ModelSpec) -> f64 {
    let grid = &model.grid;
    let times: Vec<f64> = match &model.reward {
        // δ ≤ 1 so the slope of δ(t)g is largest at t = 0
        RewardSpec::Separable { .. } => vec![0.0],
        RewardSpec::Tabulated { step, values, .. } => {
            (0..values.len()).map(|n| n as f64 * step).collect()
        }
    };
    let mut best = 0.0_f64;
    let mut diff = vec![0.0; model.states];
    for (a, b) in grid.adjacent_pairs() {
        let du = norm2(
            &grid
                .node(a)
                .iter()
                .zip(grid.node(b))
                .map(|(x, y)| x - y)
                .collect::<Vec<_>>(),
        );
        for i in 0..model.states {
            let (ra, rb) = (model.kernel_row(a, i), model.kernel_row(b, i));
            for (dj, (x, y)) in diff.iter_mut().zip(ra.iter().zip(rb)) {
                *dj = x - y;
            }
            let dk = norm2(&diff);
            let df = times
                .iter()
                .map(|&t| (model.reward_at(t, i, a) - model.reward_at(t, i, b)).abs())
                .fold(0.0, f64::max);
            best = best.max((df + dk) / du);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::linalg::Matrix;
    use crate::model::{build_action_grid, DiscountSpec};

    fn two_nodes(kernel: Kernel) -> ModelSpec {
        let grid = build_action_grid(&[(0.0, 1.0)], 2).unwrap();
        builtin::constant_model(kernel, vec![0.0, 1.0], grid, DiscountSpec::exponential_factor(0.5))
    }

    #[test]
    fn example_passes() {
        let r = validate_model(&builtin::two_state_example(33));
        assert!(r.passed(), "{:?}", r.violations);
        assert!(r.lipschitz_estimate > 0.0);
    }

    #[test]
    fn row_not_stochastic() {
        let p = Matrix::from_rows(&[vec![0.5, 0.6], vec![0.0, 1.0]]);
        let r = validate_model(&two_nodes(Kernel::Transition(vec![p])));
        // the same matrix sits at both nodes
        assert!(matches!(
            r.violations[..],
            [Violation::RowNotStochastic { node: 0, state: 0, .. }, Violation::RowNotStochastic { node: 1, state: 0, .. }]
        ), "{:?}", r.violations);
    }

    #[test]
    fn generator_row_sum() {
        let q = Matrix::from_rows(&[vec![0.0, 0.0], vec![0.5, -1.0]]);
        let r = validate_model(&two_nodes(Kernel::Generator(vec![q])));
        assert!(matches!(
            r.violations[..],
            [Violation::RowSumNonzero { node: 0, state: 1, .. }, Violation::RowSumNonzero { node: 1, state: 1, .. }]
        ), "{:?}", r.violations);
    }

    #[test]
    fn negative_entries() {
        let p = Matrix::from_rows(&[vec![1.2, -0.2], vec![0.0, 1.0]]);
        let r = validate_model(&two_nodes(Kernel::Transition(vec![p])));
        assert!(r
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NegativeProbability { from: 0, to: 1, .. })));
        let q = Matrix::from_rows(&[vec![0.3, -0.3], vec![0.0, 0.0]]);
        let r = validate_model(&two_nodes(Kernel::Generator(vec![q])));
        assert!(r
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NegativeRate { from: 0, to: 1, .. })));
    }
}
