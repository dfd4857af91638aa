#![allow(dead_code)]

pub mod props;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tieq_core::{bridge, builtin, DiscountSpec, ModelSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn discounts() -> Vec<DiscountSpec> {
    vec![
        DiscountSpec::exponential_factor(0.7),
        DiscountSpec::QuasiHyperbolic { beta: 0.5, gamma: 0.9 },
        DiscountSpec::ExponentialMixture {
            weights: vec![0.5, 0.5],
            rates: vec![0.2, 1.5],
        },
        DiscountSpec::GeneralizedHyperbolic { k: 1.0, gamma: 5.0 },
    ]
}

/// Tiny discrete-time instances small enough for exhaustive search: random
/// kernels under every discount family plus coarse discretizations of the
/// two-state example.
pub fn regression_fleet() -> Vec<(String, ModelSpec)> {
    let mut fleet = Vec::new();
    for (f, disc) in discounts().into_iter().enumerate() {
        for seed in 0..6u64 {
            let states = 2 + (seed as usize % 2);
            let per_dim = 3 + (seed as usize % 3);
            let mut r = rng(1000 * f as u64 + seed);
            let m = builtin::random_dt_model(&mut r, states, 1, per_dim, disc.clone());
            fleet.push((format!("random/{f}/{seed}"), m));
        }
    }
    let example = builtin::two_state_example(5);
    for h in [0.2, 0.1, 0.05] {
        fleet.push((format!("example/h={h}"), bridge::discretize(&example, h).unwrap()));
    }
    fleet.push(("example3/h=0.1".into(), bridge::discretize(&builtin::two_state_example(3), 0.1).unwrap()));
    fleet
}
