//! Acceptance harness: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Runs without the libtest harness so every criterion reports even when an
//! earlier one fails.

mod common;

use common::props;

use std::time::{Duration, Instant};

use rand::Rng;
use tieq_core::anneal::{solve_annealed, Schedule, Thresholds};
use tieq_core::bridge::{convergence_study, discretize};
use tieq_core::entropy::gibbs;
use tieq_core::eval_ct::value_ct;
use tieq_core::fixedpoint::{solve_fixed_point, SolverConfig};
use tieq_core::verify::{bellman_consistency, brute_force_oracle, standard_equilibrium_scan, BruteForceConfig};
use tieq_core::{builtin, sup_dist, DiscountSpec, Mode, RelaxedPolicy};

// pinned tolerances
const EXAMPLE_DIFF_TOL: f64 = 1e-6;
const EXAMPLE_BUDGET: Duration = Duration::from_secs(5);
const SCAN_TOL: f64 = 1e-9;
const ANNEAL_BUDGET: Duration = Duration::from_secs(60);
const ENTROPY_TOL: f64 = 1e-10;
const COLLAPSE_TOL: f64 = 1e-6;
const BRIDGE_FINAL: f64 = 5e-3;
const SCALING_TOL: f64 = 1e-12;
const PROPERTY_INSTANCES: u64 = 100;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

/// Corner policies `(a, b)` of the example on a vertex grid with `n` nodes.
fn corner(n: usize, a: usize, b: usize) -> RelaxedPolicy {
    let m = builtin::two_state_example(n);
    RelaxedPolicy::standard(&m.grid, &[a * (n - 1), b * (n - 1)])
}

fn example_differences() -> Outcome {
    let m = builtin::two_state_example(33);
    let expected = [
        ((0, 0), -5.0 / 6.0),
        ((1, 0), -5.0 / 12.0 * (15.0 / 8.0 + 1.0 / 9.0)),
        ((0, 1), -5.0 / 12.0 * (2.0 + 1.0 / 9.0)),
        ((1, 1), -7.0 / 24.0 * (23.0 / 8.0 + 1.0 / 9.0)),
    ];
    let t = Instant::now();
    let mut worst = 0.0_f64;
    for ((a, b), want) in expected {
        let v = value_ct(&corner(33, a, b), 0.0, 0.0, &m, 1e-10).unwrap();
        worst = worst.max((v[0] - v[1] - want).abs());
    }
    let el = t.elapsed();
    outcome(
        worst <= EXAMPLE_DIFF_TOL && el < EXAMPLE_BUDGET,
        format!("max error {worst:.2e}, {el:.2?}"),
    )
}

fn no_standard_equilibrium() -> Outcome {
    let m = builtin::two_state_example(33);
    let t = Instant::now();
    let found = standard_equilibrium_scan(&m, Mode::Continuous, SCAN_TOL).unwrap();
    let el = t.elapsed();
    // (a, b) → (a state whose best response moves, the corner it moves to)
    let cases = [((0, 0), (1, 1)), ((1, 0), (0, 0)), ((0, 1), (0, 1)), ((1, 1), (0, 0))];
    let mut mismatches = Vec::new();
    for ((a, b), (state, best)) in cases {
        let y = value_ct(&corner(33, a, b), 0.0, 0.0, &m, 1e-12).unwrap();
        let obj = m.objective(state, &y);
        let arg = (0..obj.len()).max_by(|&i, &j| obj[i].total_cmp(&obj[j])).unwrap();
        let chosen = [a, b][state] * 32;
        if arg != best * 32 || arg == chosen {
            mismatches.push(format!("({a},{b})"));
        }
    }
    outcome(
        found.is_empty() && mismatches.is_empty(),
        format!("{} standard equilibria, case mismatches {:?}, {el:.2?}", found.len(), mismatches),
    )
}

fn relaxed_existence() -> Outcome {
    let m = builtin::two_state_example(33);
    let t = Instant::now();
    let r = solve_annealed(
        &m,
        Mode::Continuous,
        &Schedule::default(),
        &SolverConfig::default(),
        &Thresholds::default(),
    )
    .unwrap();
    let el = t.elapsed();
    let c = &r.certificate;
    outcome(
        c.passed && c.deviation_gap <= 1e-3 && c.off_support_mass <= 1e-2 && c.self_consistency <= 1e-4 && el < ANNEAL_BUDGET,
        format!(
            "gap {:.2e}, off-support {:.2e}, self-consistency {:.2e}, {el:.2?}",
            c.deviation_gap, c.off_support_mass, c.self_consistency
        ),
    )
}

fn entropy_closed_form() -> Outcome {
    let m = builtin::entropy_only(2.0, 64, 0.5);
    let cfg = SolverConfig {
        damping: 1.0,
        ..Default::default()
    };
    let r = solve_fixed_point(&[0.0], 1.0, &m, Mode::Discrete, &cfg).unwrap();
    let err = (r.y[0] - std::f64::consts::LN_2).abs();
    outcome(
        r.converged && err <= ENTROPY_TOL && r.iterations <= 2,
        format!("error {err:.2e} in {} iterations", r.iterations),
    )
}

fn time_consistent_collapse() -> Outcome {
    let mut worst = 0.0_f64;
    for seed in 0..10 {
        let m = builtin::random_dt_model(&mut common::rng(seed), 3, 1, 5, DiscountSpec::exponential_factor(0.7));
        let r = solve_annealed(
            &m,
            Mode::Discrete,
            &Schedule::default(),
            &SolverConfig::default(),
            &Thresholds::default(),
        )
        .unwrap();
        worst = worst.max(bellman_consistency(&m, &r, COLLAPSE_TOL).unwrap().diff);
    }
    outcome(worst <= COLLAPSE_TOL, format!("worst difference {worst:.2e} over 10 seeds"))
}

fn bridge_convergence() -> Outcome {
    let m = builtin::two_state_example(33);
    let hs = [0.2, 0.1, 0.05, 0.025];
    let study = convergence_study(&m, 0.1, &hs, &SolverConfig::default()).unwrap();
    let disc: Vec<f64> = study.rows.iter().map(|r| r.value_discrepancy).collect();
    let decreasing = disc.windows(2).all(|w| w[1] < w[0]);
    let last = *disc.last().unwrap();

    let mut r = common::rng(7);
    let mut scaling = 0.0_f64;
    for &h in &hs {
        let d = discretize(&m, h).unwrap();
        for _ in 0..50 {
            let y = [r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0)];
            for i in 0..2 {
                let a = gibbs(&y, i, h * 0.1, &d).unwrap();
                let b = gibbs(&y, i, 0.1, &m).unwrap();
                scaling = scaling.max(sup_dist(&a, &b));
            }
        }
    }
    let shown: Vec<String> = disc.iter().map(|x| format!("{x:.3e}")).collect();
    outcome(
        decreasing && last <= BRIDGE_FINAL && scaling <= SCALING_TOL,
        format!(
            "discrepancies [{}], decreasing {decreasing}, final {} {BRIDGE_FINAL:.0e}, scaling {scaling:.1e}",
            shown.join(", "),
            if last <= BRIDGE_FINAL { "<=" } else { ">" },
        ),
    )
}

fn property_suites() -> Outcome {
    let mut failures = Vec::new();
    for (name, check) in props::SUITES {
        let bad = (0..PROPERTY_INSTANCES).filter(|&seed| check(seed).is_err()).count();
        if bad > 0 {
            failures.push(format!("{name}: {bad}"));
        }
    }
    outcome(
        failures.is_empty(),
        format!("{} suites x {PROPERTY_INSTANCES} instances, failures {:?}", props::SUITES.len(), failures),
    )
}

fn oracle_equivalence() -> Outcome {
    let fleet = common::regression_fleet();
    let cfg = BruteForceConfig {
        include_mixed: false,
        ..Default::default()
    };
    let mut disagree = Vec::new();
    let mut found = 0;
    for (name, m) in &fleet {
        let bf = brute_force_oracle(m, &cfg).unwrap();
        let scan = standard_equilibrium_scan(m, Mode::Discrete, cfg.tol).unwrap();
        found += scan.len();
        if bf.standard != scan {
            disagree.push(name.clone());
        }
    }
    outcome(
        disagree.is_empty(),
        format!(
            "{} instances, {found} standard equilibria, disagreements {:?}",
            fleet.len(),
            disagree
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("example value differences", example_differences),
        ("no standard equilibrium", no_standard_equilibrium),
        ("relaxed equilibrium certified", relaxed_existence),
        ("entropy-only closed form", entropy_closed_form),
        ("time-consistent collapse", time_consistent_collapse),
        ("bridge convergence", bridge_convergence),
        ("property suites", property_suites),
        ("oracle equivalence", oracle_equivalence),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.passed {
            failed += 1;
        }
        println!(
            "criterion {} {name}: {} ({})",
            k + 1,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
