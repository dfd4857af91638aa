//! Ready-made models: the two-state continuous-time example without a standard
//! equilibrium, closed-form test problems and random instances.

use rand::Rng;

use crate::linalg::Matrix;
use crate::model::{ActionGrid, DiscountSpec, GridKind, Kernel, ModelSpec, RewardSpec};

/// Two states, `U = [0, 1]`, rates `q^u_1 = (−u, u)`, `q^u_2 = (u, −u)`,
/// `δ(t) = (e^{−t} + e^{−2t})/2`, `g_1(u) = −(7/8)√u`, `g_2(u) = 19/9 − √(1−u)`.
///
/// The grid includes both endpoints; `per_dim` nodes are equally spaced.
pub fn two_state_example(per_dim: usize) -> ModelSpec {
    let grid = ActionGrid::new(&[(0.0, 1.0)], per_dim, GridKind::Vertices).expect("valid grid");
    let us: Vec<f64> = grid.nodes().iter().map(|u| u[0]).collect();
    let g = vec![
        us.iter().map(|u| -7.0 / 8.0 * u.sqrt()).collect(),
        us.iter().map(|u| 19.0 / 9.0 - (1.0 - u).sqrt()).collect(),
    ];
    let kernel = us
        .iter()
        .map(|&u| Matrix::from_rows(&[vec![-u, u], vec![u, -u]]))
        .collect();
    ModelSpec {
        states: 2,
        grid,
        discount: DiscountSpec::ExponentialMixture {
            weights: vec![0.5, 0.5],
            rates: vec![1.0, 2.0],
        },
        reward: RewardSpec::Separable { g },
        kernel: Kernel::Generator(kernel),
        cone: None,
        lipschitz: None,
    }
}

/// Single state, zero reward, action box `[0, width]`, discount `β^t`: the
/// regularized value of every policy is pure entropy.
pub fn entropy_only(width: f64, per_dim: usize, beta: f64) -> ModelSpec {
    let grid = ActionGrid::new(&[(0.0, width)], per_dim, GridKind::Midpoint).expect("valid grid");
    let n = grid.len();
    ModelSpec {
        states: 1,
        reward: RewardSpec::Separable { g: vec![vec![0.0; n]] },
        kernel: Kernel::Transition(vec![Matrix::identity(1); n]),
        grid,
        discount: DiscountSpec::exponential_factor(beta),
        cone: None,
        lipschitz: None,
    }
}

/// Reward and kernel independent of the action.
pub fn constant_model(kernel: Kernel, g: Vec<f64>, grid: ActionGrid, discount: DiscountSpec) -> ModelSpec {
    let n = grid.len();
    let mats = kernel.matrices();
    assert_eq!(mats.len(), 1, "constant model takes a single kernel matrix");
    let m = mats[0].clone();
    let kernel = match kernel {
        Kernel::Transition(_) => Kernel::Transition(vec![m; n]),
        Kernel::Generator(_) => Kernel::Generator(vec![m; n]),
    };
    ModelSpec {
        states: g.len(),
        reward: RewardSpec::Separable {
            g: g.iter().map(|&c| vec![c; n]).collect(),
        },
        kernel,
        grid,
        discount,
        cone: None,
        lipschitz: None,
    }
}

/// Discrete-time model in which the action is the next-state distribution:
/// `p^u_i = (1 − Σ_m u_m, u_1, …, u_{d−1})` on the box `[0, 1/(d−1)]^{d−1}`.
/// `g(i, u)` is the reward at `t = 0`.
pub fn direct_choice(
    states: usize,
    per_dim: usize,
    kind: GridKind,
    discount: DiscountSpec,
    g: impl Fn(usize, &[f64]) -> f64,
) -> ModelSpec {
    assert!(states >= 2, "direct choice needs two states");
    let ell = states - 1;
    let side = 1.0 / ell as f64;
    let grid = ActionGrid::new(&vec![(0.0, side); ell], per_dim, kind).expect("valid grid");
    let kernel = grid
        .nodes()
        .iter()
        .map(|u| {
            let mut row = Vec::with_capacity(states);
            row.push((1.0 - u.iter().sum::<f64>()).max(0.0));
            row.extend_from_slice(u);
            Matrix::from_rows(&vec![row; states])
        })
        .collect();
    let table = (0..states)
        .map(|i| grid.nodes().iter().map(|u| g(i, u)).collect())
        .collect();
    ModelSpec {
        states,
        reward: RewardSpec::Separable { g: table },
        kernel: Kernel::Transition(kernel),
        grid,
        discount,
        cone: None,
        lipschitz: None,
    }
}

fn random_row(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    let mut row: Vec<f64> = (0..d).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let s: f64 = row.iter().sum();
    for x in &mut row {
        *x /= s;
    }
    row
}

/// Random discrete-time model on `[0, 1]^ℓ` with rewards in `[−1, 1]`.
pub fn random_dt_model(
    rng: &mut impl Rng,
    states: usize,
    ell: usize,
    per_dim: usize,
    discount: DiscountSpec,
) -> ModelSpec {
    let grid = ActionGrid::new(&vec![(0.0, 1.0); ell], per_dim, GridKind::Midpoint).expect("valid grid");
    let n = grid.len();
    let kernel = (0..n)
        .map(|_| Matrix::from_rows(&(0..states).map(|_| random_row(rng, states)).collect::<Vec<_>>()))
        .collect();
    let g = (0..states)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect();
    ModelSpec {
        states,
        grid,
        discount,
        reward: RewardSpec::Separable { g },
        kernel: Kernel::Transition(kernel),
        cone: None,
        lipschitz: None,
    }
}

/// Random continuous-time model on `[0, 1]^ℓ`, rates in `[0, max_rate]`.
pub fn random_ct_model(
    rng: &mut impl Rng,
    states: usize,
    ell: usize,
    per_dim: usize,
    max_rate: f64,
    discount: DiscountSpec,
) -> ModelSpec {
    let grid = ActionGrid::new(&vec![(0.0, 1.0); ell], per_dim, GridKind::Midpoint).expect("valid grid");
    let n = grid.len();
    let kernel = (0..n).map(|_| random_generator(rng, states, max_rate)).collect();
    let g = (0..states)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect())
        .collect();
    ModelSpec {
        states,
        grid,
        discount,
        reward: RewardSpec::Separable { g },
        kernel: Kernel::Generator(kernel),
        cone: None,
        lipschitz: None,
    }
}

/// Random `d × d` rate matrix with off-diagonal rates in `[0, max_rate]`.
pub fn random_generator(rng: &mut impl Rng, d: usize, max_rate: f64) -> Matrix {
    let mut q = Matrix::zeros(d, d);
    for i in 0..d {
        let mut s = 0.0;
        for j in 0..d {
            if i != j {
                let r = rng.gen_range(0.0..=max_rate);
                q[(i, j)] = r;
                s += r;
            }
        }
        q[(i, i)] = -s;
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn builtins_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let exp = DiscountSpec::exponential_factor(0.7);
        let models = vec![
            two_state_example(33),
            entropy_only(2.0, 4, 0.5),
            direct_choice(3, 5, GridKind::Midpoint, exp.clone(), |_, u| -u[0] * u[0] - u[1]),
            random_dt_model(&mut rng, 3, 2, 3, exp.clone()),
            random_ct_model(&mut rng, 4, 1, 5, 2.0, exp),
        ];
        for m in models {
            let r = m.validate();
            assert!(r.passed(), "{:?}", r.violations);
            assert!(r.lipschitz_estimate.is_finite());
        }
    }

    #[test]
    fn example_grid_hits_corners() {
        let m = two_state_example(33);
        assert_eq!(m.grid.len(), 33);
        assert_eq!(m.grid.node(0), &[0.0]);
        assert_eq!(m.grid.node(32), &[1.0]);
    }
}
