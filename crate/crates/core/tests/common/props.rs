//! Per-instance property checks, each driven by a seed. The proptest suites
//! feed them random seeds; the acceptance harness a fixed range.

use rand::Rng;
use tieq_core::entropy::{entropy, gibbs_from_objective, soft_max_value};
use tieq_core::eval_ct::transition_matrix;
use tieq_core::eval_dt::value_dt_horizon;
use tieq_core::fixedpoint::{recertify, solve_fixed_point, SolverConfig};
use tieq_core::verify::deviation_test;
use tieq_core::{builtin, sup_dist, ActionGrid, GridKind, Mode, ModelSpec, RelaxedPolicy};

use super::{discounts, rng};

pub type Check = std::result::Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn random_grid(r: &mut impl Rng) -> ActionGrid {
    let ell = r.gen_range(1..=2);
    let bounds: Vec<(f64, f64)> = (0..ell)
        .map(|_| {
            let lo = r.gen_range(-2.0..2.0);
            (lo, lo + r.gen_range(0.1..3.0))
        })
        .collect();
    ActionGrid::new(&bounds, r.gen_range(2..=8), GridKind::Midpoint).unwrap()
}

pub fn random_density(r: &mut impl Rng, grid: &ActionGrid) -> Vec<f64> {
    let raw: Vec<f64> = (0..grid.len())
        .map(|_| if r.gen_bool(0.2) { 0.0 } else { r.gen::<f64>() + 1e-3 })
        .collect();
    let mass: f64 = raw.iter().zip(grid.weights()).map(|(x, w)| x * w).sum();
    if mass == 0.0 {
        return grid.uniform_density();
    }
    raw.iter().map(|x| x / mass).collect()
}

pub fn random_policy(r: &mut impl Rng, m: &ModelSpec) -> RelaxedPolicy {
    RelaxedPolicy::new((0..m.states).map(|_| random_density(r, &m.grid)).collect())
}

/// Up to four states, a random discount family.
pub fn random_model(r: &mut impl Rng, max_states: usize) -> ModelSpec {
    let states = r.gen_range(1..=max_states);
    let per_dim = r.gen_range(2..=4);
    let disc = discounts()[r.gen_range(0..4)].clone();
    builtin::random_dt_model(r, states, 1, per_dim, disc)
}

pub fn gibbs_shift_invariance(seed: u64) -> Check {
    let mut r = rng(seed);
    let grid = random_grid(&mut r);
    let lambda = r.gen_range(0.01..5.0);
    let shift = r.gen_range(-50.0..50.0);
    let a: Vec<f64> = (0..grid.len()).map(|_| r.gen_range(-5.0..5.0)).collect();
    let shifted: Vec<f64> = a.iter().map(|x| x + shift).collect();
    let p = gibbs_from_objective(&a, lambda, &grid).unwrap();
    let q = gibbs_from_objective(&shifted, lambda, &grid).unwrap();
    // relative to the largest density value
    let scale = p.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let d = sup_dist(&p, &q);
    ensure(d <= 1e-14 * scale, || format!("shift {shift}: {d:e}"))
}

pub fn soft_max_identity(seed: u64) -> Check {
    let mut r = rng(seed);
    let grid = random_grid(&mut r);
    let lambda = r.gen_range(0.01..5.0);
    let a: Vec<f64> = (0..grid.len()).map(|_| r.gen_range(-5.0..5.0)).collect();
    let p = gibbs_from_objective(&a, lambda, &grid).unwrap();
    let mean: f64 = p.iter().zip(grid.weights()).zip(&a).map(|((p, w), a)| p * w * a).sum();
    let lhs = soft_max_value(&a, lambda, &grid);
    let rhs = mean + lambda * entropy(&p, &grid).unwrap();
    ensure((lhs - rhs).abs() <= 1e-9, || format!("{lhs} vs {rhs}"))
}

pub fn entropy_below_log_volume(seed: u64) -> Check {
    let mut r = rng(seed);
    let grid = random_grid(&mut r);
    let rho = random_density(&mut r, &grid);
    let h = entropy(&rho, &grid).unwrap();
    ensure(h <= grid.volume().ln() + 1e-12, || format!("{h} > ln {}", grid.volume()))
}

pub fn chapman_kolmogorov(seed: u64) -> Check {
    let mut r = rng(seed);
    let d = r.gen_range(1..=4);
    let (s, t) = (r.gen_range(0.0..3.0), r.gen_range(0.0..3.0));
    let q = builtin::random_generator(&mut r, d, 5.0);
    let whole = transition_matrix(&q, s + t, 1e-12).unwrap();
    let split = transition_matrix(&q, s, 1e-12)
        .unwrap()
        .matmul(&transition_matrix(&q, t, 1e-12).unwrap());
    let err = (0..d).map(|i| sup_dist(whole.row(i), split.row(i))).fold(0.0, f64::max);
    ensure(err <= 1e-8, || format!("s={s} t={t}: {err:e}"))
}

/// `E[Σ_{t≤T} δ(offset+t) (g(X_t, A_t) − λ ln ρ(X_t, A_t))]` summed over every
/// state-action trajectory from `start`.
pub fn enumerate_paths(m: &ModelSpec, pi: &RelaxedPolicy, lambda: f64, offset: usize, horizon: usize, start: usize) -> f64 {
    let w = m.grid.weights();
    let mut total = 0.0;
    // (time, state, probability of reaching it)
    let mut stack = vec![(0usize, start, 1.0)];
    while let Some((t, i, prob)) = stack.pop() {
        let time = (offset + t) as f64;
        for k in 0..m.grid.len() {
            let rho = pi.row(i)[k];
            let pk = prob * rho * w[k];
            if pk == 0.0 {
                continue;
            }
            total += pk * (m.reward_at(time, i, k) - lambda * m.discount.eval(time) * rho.ln());
            if t < horizon {
                for (j, &p) in m.kernel_row(k, i).iter().enumerate() {
                    if p > 0.0 {
                        stack.push((t + 1, j, pk * p));
                    }
                }
            }
        }
    }
    total
}

pub fn value_dt_path_enumeration(seed: u64) -> Check {
    let mut r = rng(seed);
    let m = random_model(&mut r, 3);
    let pi = random_policy(&mut r, &m);
    let horizon = r.gen_range(0..=4);
    let offset = r.gen_range(0..=1);
    let lambda = if r.gen_bool(0.3) { 0.0 } else { r.gen_range(0.0..1.0) };
    let v = value_dt_horizon(&pi, lambda, offset as u32, &m, horizon).unwrap();
    for (i, vi) in v.iter().enumerate() {
        let e = enumerate_paths(&m, &pi, lambda, offset, horizon, i);
        ensure((vi - e).abs() <= 1e-9, || format!("state {i}: {vi} vs {e}"))?;
    }
    Ok(())
}

pub fn deviation_gaps_nonnegative(seed: u64) -> Check {
    let mut r = rng(seed);
    let m = random_model(&mut r, 4);
    let pi = random_policy(&mut r, &m);
    let lambda = if r.gen_bool(0.5) { 0.0 } else { r.gen_range(0.01..2.0) };
    let y: Vec<f64> = (0..m.states).map(|_| r.gen_range(-5.0..5.0)).collect();
    let dev = deviation_test(&pi, &y, lambda, &m, Mode::Discrete).unwrap();
    ensure(dev.gaps.iter().all(|&g| g >= -1e-12), || format!("{:?}", dev.gaps))
}

/// A converged report's residual survives an independent, more accurate
/// evaluation of `Ψ`. Nonconverged runs make no claim and pass vacuously.
pub fn residual_recertifies(seed: u64) -> Check {
    let mut r = rng(seed);
    let m = random_model(&mut r, 4);
    let lambda = r.gen_range(0.05..2.0);
    let cfg = SolverConfig {
        tol: 1e-8,
        ..Default::default()
    };
    let rep = solve_fixed_point(&vec![0.0; m.states], lambda, &m, Mode::Discrete, &cfg).unwrap();
    if !rep.converged {
        return Ok(());
    }
    let res = recertify(&rep.y, lambda, &m, Mode::Discrete, 1e-13).unwrap();
    ensure(res <= cfg.tol, || format!("{res:e} > {:e}", cfg.tol))
}

pub const SUITES: [(&str, fn(u64) -> Check); 7] = [
    ("gibbs shift invariance", gibbs_shift_invariance),
    ("soft-max identity", soft_max_identity),
    ("entropy below ln Leb", entropy_below_log_volume),
    ("chapman-kolmogorov", chapman_kolmogorov),
    ("value_dt path enumeration", value_dt_path_enumeration),
    ("deviation gaps nonnegative", deviation_gaps_nonnegative),
    ("residual recertification", residual_recertifies),
];
