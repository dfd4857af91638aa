mod common;

use tieq_core::anneal::{certify, continuation_value, extract_support, solve_annealed, Schedule, Thresholds};
use tieq_core::bridge::discretize;
use tieq_core::entropy::gibbs_policy;
use tieq_core::eval_ct::value_ct;
use tieq_core::fixedpoint::{solve_fixed_point, SolverConfig};
use tieq_core::linalg::Matrix;
use tieq_core::verify::{
    bellman_consistency, bellman_optimum, brute_force_oracle, deviation_test, mean_action_value_check,
    standard_equilibrium_scan, BruteForceConfig,
};
use tieq_core::{
    build_action_grid, builtin, sup_norm, DiscountSpec, GridKind, Kernel, Mode, ModelSpec,
    RelaxedPolicy, RewardSpec,
};

fn mixture() -> DiscountSpec {
    DiscountSpec::ExponentialMixture {
        weights: vec![0.5, 0.5],
        rates: vec![0.1, 1.0],
    }
}

/// One state, `p^u = 1`, reward `g(u)` on `[0, 1]`.
fn single_state(per_dim: usize, g: impl Fn(f64) -> f64) -> ModelSpec {
    let grid = build_action_grid(&[(0.0, 1.0)], per_dim).unwrap();
    let n = grid.len();
    let row = grid.nodes().iter().map(|u| g(u[0])).collect();
    ModelSpec {
        states: 1,
        kernel: Kernel::Transition(vec![Matrix::identity(1); n]),
        reward: RewardSpec::Separable { g: vec![row] },
        grid,
        discount: DiscountSpec::exponential_factor(0.5),
        cone: None,
        lipschitz: None,
    }
}

fn constant(states: usize, per_dim: usize) -> ModelSpec {
    let grid = build_action_grid(&[(0.0, 1.0)], per_dim).unwrap();
    let rows: Vec<Vec<f64>> = (0..states)
        .map(|i| (0..states).map(|j| if (i + 1) % states == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let g = (0..states).map(|i| i as f64 - 0.5).collect();
    builtin::constant_model(Kernel::Transition(vec![Matrix::from_rows(&rows)]), g, grid, mixture())
}

fn concave_direct_choice(per_dim: usize, discount: DiscountSpec) -> ModelSpec {
    builtin::direct_choice(2, per_dim, GridKind::Midpoint, discount, |i, u| {
        let c = [0.3, 0.8][i];
        [1.0, -0.5][i] - 2.0 * (u[0] - c).powi(2)
    })
}

#[test]
fn example_anneal_certifies_with_mixing() {
    let m = builtin::two_state_example(33);
    let r = solve_annealed(
        &m,
        Mode::Continuous,
        &Schedule::default(),
        &SolverConfig::default(),
        &Thresholds::default(),
    )
    .unwrap();
    assert!(r.certificate.passed, "{:?}", r.certificate);
    // mixes: some state puts at least 5% on each of two nodes
    let w = m.grid.weights();
    let mixes = (0..2).any(|i| {
        let heavy = r.final_policy.row(i).iter().zip(w).filter(|(p, w)| *p * *w >= 0.05).count();
        heavy >= 2
    });
    assert!(mixes);
    for s in &r.stages {
        assert!(sup_norm(&s.report.y) <= r.warm_start_bound, "{} > {}", sup_norm(&s.report.y), r.warm_start_bound);
    }
    // off-support mass trends down over the last three stages, one uptick allowed
    let offs: Vec<f64> = r.stages.iter().rev().take(3).map(|s| s.off_support_mass).collect();
    let upticks = offs.windows(2).filter(|p| p[0] > p[1]).count();
    assert!(upticks <= 1, "{offs:?}");
}

#[test]
fn exponential_two_state_matches_value_iteration() {
    let m = builtin::random_dt_model(&mut common::rng(3), 2, 1, 5, DiscountSpec::exponential_factor(0.8));
    let r = solve_annealed(
        &m,
        Mode::Discrete,
        &Schedule::default(),
        &SolverConfig::default(),
        &Thresholds::default(),
    )
    .unwrap();
    let b = bellman_consistency(&m, &r, 1e-6).unwrap();
    assert!(b.passed, "{b:?}");
}

#[test]
fn constant_model_certifies_with_zero_gap() {
    let m = constant(3, 4);
    let r = solve_annealed(
        &m,
        Mode::Discrete,
        &Schedule::default(),
        &SolverConfig::default(),
        &Thresholds::default(),
    )
    .unwrap();
    assert!(r.certificate.passed);
    assert!(r.certificate.deviation_gap.abs() <= 1e-15);
    assert_eq!(r.certificate.off_support_mass, 0.0);
    // and any other policy certifies too
    let pi = RelaxedPolicy::standard(&m.grid, &[0, 3, 1]);
    let y = continuation_value(&pi, &m, Mode::Discrete, 1e-12).unwrap();
    assert!(certify(&pi, &y, &m, Mode::Discrete, &Thresholds::default()).unwrap().passed);
}

#[test]
fn support_examples() {
    let flat = single_state(7, |_| 1.0);
    assert_eq!(extract_support(&[0.2], 0, &flat, Mode::Discrete, 1e-9).unwrap(), (0..7).collect::<Vec<_>>());
    // midpoints of 100 cells straddle 0.3 at 0.295 and 0.305
    let peak = single_state(100, |u| -(u - 0.3) * (u - 0.3));
    assert_eq!(extract_support(&[0.0], 0, &peak, Mode::Discrete, 1e-9).unwrap(), vec![29, 30]);
    let vee = single_state(10, |u| (u - 0.5).abs());
    assert_eq!(extract_support(&[0.0], 0, &vee, Mode::Discrete, 1e-9).unwrap(), vec![0, 9]);
}

#[test]
fn certify_examples() {
    let m = single_state(10, |u| u);
    let top = RelaxedPolicy::standard(&m.grid, &[9]);
    let y = continuation_value(&top, &m, Mode::Discrete, 1e-13).unwrap();
    let c = certify(&top, &y, &m, Mode::Discrete, &Thresholds::default()).unwrap();
    assert!(c.passed);
    assert_eq!(c.deviation_gap, 0.0);
    assert_eq!(c.off_support_mass, 0.0);

    let uniform = RelaxedPolicy::uniform(&m.grid, 1);
    let y = continuation_value(&uniform, &m, Mode::Discrete, 1e-13).unwrap();
    let c = certify(&uniform, &y, &m, Mode::Discrete, &Thresholds::default()).unwrap();
    assert!(!c.passed);
    assert!((c.off_support_mass - 0.9).abs() < 1e-12);
}

#[test]
fn gibbs_at_fixed_point_has_no_gap() {
    for seed in 0..10 {
        let m = builtin::random_dt_model(&mut common::rng(seed), 3, 1, 6, mixture());
        let lambda = 0.2;
        let rep = solve_fixed_point(&[0.0; 3], lambda, &m, Mode::Discrete, &SolverConfig::default()).unwrap();
        assert!(rep.converged);
        let pi = gibbs_policy(&rep.y, lambda, &m).unwrap();
        let dev = deviation_test(&pi, &rep.y, lambda, &m, Mode::Discrete).unwrap();
        assert!(dev.max_gap <= 1e-8, "{}", dev.max_gap);

        // perturbing the policy away from Gibbs breaks both sides of the equivalence
        let w = m.grid.weights();
        let rows = (0..3)
            .map(|i| {
                let row = pi.row(i);
                let mut out: Vec<f64> = row.iter().map(|p| 0.8 * p).collect();
                out[0] += 0.2 / w[0];
                out
            })
            .collect();
        let bent = RelaxedPolicy::new(rows);
        let dist = (0..3)
            .flat_map(|i| bent.row(i).iter().zip(pi.row(i)).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>())
            .fold(0.0, f64::max);
        assert!(dist > 1e-6);
        let bent_gap = deviation_test(&bent, &rep.y, lambda, &m, Mode::Discrete).unwrap().max_gap;
        assert!(bent_gap > 1e-8, "{bent_gap}");
    }
}

/// Iterates the best response on standard policies until it repeats.
fn best_response_fixed_point(m: &ModelSpec) -> Vec<usize> {
    let mut nodes = vec![0; m.states];
    for _ in 0..100 {
        let pi = RelaxedPolicy::standard(&m.grid, &nodes);
        let y = continuation_value(&pi, m, Mode::Discrete, 1e-13).unwrap();
        let next: Vec<usize> = (0..m.states)
            .map(|i| {
                let a = m.objective(i, &y);
                (0..a.len()).max_by(|&p, &q| a[p].total_cmp(&a[q])).unwrap()
            })
            .collect();
        if next == nodes {
            return nodes;
        }
        nodes = next;
    }
    panic!("best response did not settle");
}

#[test]
fn scan_direct_choice_contains_best_response_fixed_point() {
    let m = concave_direct_choice(9, DiscountSpec::exponential_factor(0.7));
    let found = standard_equilibrium_scan(&m, Mode::Discrete, 1e-9).unwrap();
    assert!(found.contains(&best_response_fixed_point(&m)), "{found:?}");
}

#[test]
fn scan_constant_model_returns_everything() {
    let m = constant(2, 4);
    assert_eq!(standard_equilibrium_scan(&m, Mode::Discrete, 1e-9).unwrap().len(), 16);
}

#[test]
fn brute_force_contains_value_iteration_policy() {
    let m = concave_direct_choice(5, DiscountSpec::exponential_factor(0.7));
    // V = β J for exponential discounting; greedy against it is optimal
    let v: Vec<f64> = bellman_optimum(&m).unwrap().iter().map(|j| 0.7 * j).collect();
    let greedy: Vec<usize> = (0..2)
        .map(|i| {
            let a = m.objective(i, &v);
            (0..a.len()).max_by(|&p, &q| a[p].total_cmp(&a[q])).unwrap()
        })
        .collect();
    let bf = brute_force_oracle(&m, &BruteForceConfig::default()).unwrap();
    assert!(bf.standard.contains(&greedy), "{greedy:?} not in {:?}", bf.standard);
}

#[test]
fn brute_force_constant_model_keeps_everything() {
    let m = constant(2, 3);
    let bf = brute_force_oracle(&m, &BruteForceConfig::default()).unwrap();
    assert_eq!(bf.standard.len() + bf.mixed.len(), bf.searched);
    assert_eq!(bf.standard.len(), 9);
}

#[test]
fn discretized_example_has_only_mixed_equilibria() {
    let coarse = builtin::two_state_example(5);
    let d = discretize(&coarse, 0.01).unwrap();
    let bf = brute_force_oracle(&d, &BruteForceConfig::default()).unwrap();
    assert!(bf.standard.is_empty(), "{:?}", bf.standard);
    assert!(!bf.mixed.is_empty());
}

#[test]
fn coarse_step_creates_a_standard_equilibrium() {
    // (a, b) = (0, 1) misses by 0.0046 in continuous time; the first-order
    // bias of the h = 0.05 scheme is larger and flips it
    let coarse = builtin::two_state_example(5);
    let ct = value_ct(&RelaxedPolicy::standard(&coarse.grid, &[0, 4]), 0.0, 0.0, &coarse, 1e-12).unwrap();
    assert!(ct[0] - ct[1] < -7.0 / 8.0);
    let d = discretize(&coarse, 0.05).unwrap();
    let v = continuation_value(&RelaxedPolicy::standard(&d.grid, &[0, 4]), &d, Mode::Discrete, 1e-12).unwrap();
    // state 1 objective is y_1 + h (g_1(a) − a D), so a = 0 wins once D > −7/8
    assert!(v[0] - v[1] > -7.0 / 8.0, "{}", v[0] - v[1]);
    let bf = brute_force_oracle(&d, &BruteForceConfig::default()).unwrap();
    assert_eq!(bf.standard, vec![vec![0, 4]]);
    assert_eq!(standard_equilibrium_scan(&d, Mode::Discrete, 1e-9).unwrap(), bf.standard);
}

#[test]
fn annealed_direct_choice_matches_mean_action() {
    let m = concave_direct_choice(21, mixture());
    let r = solve_annealed(
        &m,
        Mode::Discrete,
        &Schedule::default(),
        &SolverConfig::default(),
        &Thresholds::default(),
    )
    .unwrap();
    let check = mean_action_value_check(&r.final_policy, &m, 1e-4).unwrap();
    assert!(check.matched, "{check:?}");
}
