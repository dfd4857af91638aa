//! Problem data: states, action grid, kernel, reward and discount.

mod discount;
mod file;
mod grid;
mod horizon;
mod policy;
mod reward;
mod validate;

use serde::{Deserialize, Serialize};

use crate::linalg::{dot, Matrix};
use crate::{Error, Mode, Result};

pub use discount::DiscountSpec;
pub use file::{json_pointer, load_model, model_from_json, model_to_json, save_model, ModelFile};
pub use grid::{build_action_grid, ActionGrid, GridKind, DEFAULT_NODE_CAP};
pub use horizon::{truncation_horizon, truncation_horizon_for};
pub use policy::{RelaxedPolicy, NORMALIZATION_TOL};
pub use reward::RewardSpec;
pub use validate::{validate_model, ValidationReport, Violation};

pub(crate) use policy::check_row;

/// Controlled dynamics, indexed `[node][from][to]`.
#[derive(Clone, Debug, PartialEq)]
pub enum Kernel {
    /// Transition probabilities of a discrete-time model.
    Transition(Vec<Matrix>),
    /// Transition rates of a continuous-time model.
    Generator(Vec<Matrix>),
}

impl Kernel {
    pub fn mode(&self) -> Mode {
        match self {
            Kernel::Transition(_) => Mode::Discrete,
            Kernel::Generator(_) => Mode::Continuous,
        }
    }

    pub fn matrices(&self) -> &[Matrix] {
        match self {
            Kernel::Transition(m) | Kernel::Generator(m) => m,
        }
    }
}

/// Uniform cone condition data: aperture angle `iota` and slant height `theta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeParams {
    pub iota: f64,
    pub theta: f64,
}

impl ConeParams {
    /// A cone that fits at every point of the box.
    pub fn for_box(grid: &ActionGrid) -> Self {
        let l = grid.dims();
        let iota = if l > 1 {
            (1.0 / ((l - 1) as f64).sqrt()).atan()
        } else {
            std::f64::consts::FRAC_PI_2
        };
        let theta = grid
            .bounds()
            .iter()
            .map(|(a, b)| b - a)
            .fold(f64::INFINITY, f64::min)
            / 2.0;
        ConeParams { iota, theta }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub states: usize,
    pub grid: ActionGrid,
    pub discount: DiscountSpec,
    pub reward: RewardSpec,
    pub kernel: Kernel,
    pub cone: Option<ConeParams>,
    pub lipschitz: Option<f64>,
}

impl ModelSpec {
    pub fn mode(&self) -> Mode {
        self.kernel.mode()
    }

    pub fn require_mode(&self, expected: Mode) -> Result<()> {
        let found = self.mode();
        if found == expected {
            Ok(())
        } else {
            Err(Error::ModeMismatch { expected, found })
        }
    }

    /// `f(t, i, u_k)`.
    pub fn reward_at(&self, t: f64, i: usize, k: usize) -> f64 {
        self.reward.eval(&self.discount, t, i, k)
    }

    /// Kernel row `p^{u_k}_i` or `q^{u_k}_i`.
    pub fn kernel_row(&self, k: usize, i: usize) -> &[f64] {
        self.kernel.matrices()[k].row(i)
    }

    /// One-step objective `a_k = f(0, i, u_k) + row(u_k)·y` at every node.
    pub fn objective(&self, i: usize, y: &[f64]) -> Vec<f64> {
        (0..self.grid.len())
            .map(|k| self.reward_at(0.0, i, k) + dot(self.kernel_row(k, i), y))
            .collect()
    }

    /// Mass of the reward envelope for the model's own mode.
    pub fn reward_mass(&self) -> Result<f64> {
        self.reward.mass(&self.discount, self.mode())
    }

    /// `M` (discrete) or `M̃` (continuous): reward envelope mass plus the
    /// discount mass.
    pub fn summability_constant(&self) -> Result<f64> {
        Ok(self.reward_mass()? + self.discount.total(self.mode())?)
    }

    pub fn ln_volume(&self) -> f64 {
        self.grid.volume().ln()
    }

    pub fn cone_params(&self) -> ConeParams {
        self.cone.unwrap_or_else(|| ConeParams::for_box(&self.grid))
    }

    /// Supplied Lipschitz constant, else the finite-difference estimate.
    pub fn lipschitz_constant(&self) -> f64 {
        self.lipschitz
            .unwrap_or_else(|| validate::lipschitz_estimate(self))
    }

    pub fn validate(&self) -> ValidationReport {
        validate_model(self)
    }
}
