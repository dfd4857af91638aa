//! Relaxed equilibria for time-inconsistent Markov decision processes.
//!
//! Finite state space, compact box action space discretized by a quadrature
//! grid, and a general (possibly non-exponential) discount function. Both the
//! discrete-time and the continuous-time (generator) formulations are covered.
//!
//! The solver works on the entropy-regularized problem: for a weight `λ > 0`
//! an equilibrium is a fixed point `y = Ψ_λ(y)` where `Ψ_λ` evaluates the Gibbs
//! policy built from the continuation value `y`. Driving `λ` to zero with warm
//! starts ([`anneal`]) approximates an equilibrium of the unregularized problem,
//! which is then certified through the support condition on the argmax set.

pub mod anneal;
pub mod bridge;
pub mod builtin;
pub mod entropy;
mod error;
pub mod eval_ct;
pub mod eval_dt;
pub mod fixedpoint;
pub mod linalg;
pub mod model;
pub mod verify;

pub use error::{Error, Result};
pub use model::{
    build_action_grid, load_model, model_from_json, model_to_json, save_model, truncation_horizon,
    validate_model, ActionGrid, ConeParams, DiscountSpec, GridKind, Kernel, ModelSpec, RelaxedPolicy,
    RewardSpec, ValidationReport, Violation,
};

use serde::{Deserialize, Serialize};

/// Time structure of a model and of every evaluation performed on it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Discrete time, transition matrices `p^u`.
    #[serde(rename = "dt")]
    Discrete,
    /// Continuous time, rate matrices `q^u`.
    #[serde(rename = "ct")]
    Continuous,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mode::Discrete => f.write_str("dt"),
            Mode::Continuous => f.write_str("ct"),
        }
    }
}

/// Sup norm of a vector.
pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Sup-norm distance between two vectors of equal length.
pub fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}
