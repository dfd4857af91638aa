//! Differential entropy on the grid, the Gibbs operator and its a priori bounds.

use rayon::prelude::*;
use serde::Serialize;

use crate::linalg::norm2;
use crate::model::{check_row, ActionGrid, ModelSpec, RelaxedPolicy};
use crate::{Error, Result};

/// `−Σ_k w_k ρ_k ln ρ_k`, with `0 ln 0 = 0`.
pub fn entropy(row: &[f64], grid: &ActionGrid) -> Result<f64> {
    check_row(row, grid, 0)?;
    Ok(entropy_unchecked(row, grid))
}

pub(crate) fn entropy_unchecked(row: &[f64], grid: &ActionGrid) -> f64 {
    -row.iter()
        .zip(grid.weights())
        .filter(|(r, _)| **r > 0.0)
        .map(|(r, w)| w * r * r.ln())
        .sum::<f64>()
}

/// Per-state entropies of a policy.
pub fn policy_entropy(policy: &RelaxedPolicy, grid: &ActionGrid) -> Result<Vec<f64>> {
    policy.check(grid)?;
    Ok(policy
        .densities
        .iter()
        .map(|row| entropy_unchecked(row, grid))
        .collect())
}

/// Density proportional to `exp(a_k / λ)`, normalized so that `Σ_k w_k ρ_k = 1`.
pub fn gibbs_from_objective(a: &[f64], lambda: f64, grid: &ActionGrid) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::NonpositiveLambda(lambda));
    }
    let m = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut rho: Vec<f64> = a.iter().map(|x| ((x - m) / lambda).exp()).collect();
    let z: f64 = rho.iter().zip(grid.weights()).map(|(r, w)| r * w).sum();
    for r in &mut rho {
        *r /= z;
    }
    Ok(rho)
}

/// `λ ln Σ_k w_k e^{a_k/λ}`, the supremum of `∫ a ρ + λ H(ρ)` over densities.
pub fn soft_max_value(a: &[f64], lambda: f64, grid: &ActionGrid) -> f64 {
    let m = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = a
        .iter()
        .zip(grid.weights())
        .map(|(x, w)| w * ((x - m) / lambda).exp())
        .sum();
    m + lambda * z.ln()
}

/// Gibbs density of state `i`: proportional to `exp((f(0,i,u) + row(u)·y) / λ)`.
pub fn gibbs(y: &[f64], i: usize, lambda: f64, model: &ModelSpec) -> Result<Vec<f64>> {
    gibbs_from_objective(&model.objective(i, y), lambda, &model.grid)
}

/// Gibbs policy over all states.
pub fn gibbs_policy(y: &[f64], lambda: f64, model: &ModelSpec) -> Result<RelaxedPolicy> {
    if !(lambda > 0.0) {
        return Err(Error::NonpositiveLambda(lambda));
    }
    let densities = (0..model.states)
        .into_par_iter()
        .map(|i| gibbs(y, i, lambda, model))
        .collect::<Result<Vec<_>>>()?;
    Ok(RelaxedPolicy::new(densities))
}

/// Constants of the entropy bound `|H(Γ_λ(y, i))| ≤ φ(|y|)` for a model.
///
/// `K0`, `K1`, `K2` come from the cone condition; the resulting bound is a
/// conservative surrogate and may be loose.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundConstants {
    pub ell: usize,
    pub ln_leb: f64,
    pub lipschitz: f64,
    pub k0: f64,
    pub k1: f64,
    pub k2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
}

impl BoundConstants {
    pub fn for_model(model: &ModelSpec) -> Self {
        let ell = model.grid.dims();
        let cone = model.cone_params();
        let l = ell as f64;
        let (k0, k1, k2) = if ell == 1 {
            let e1 = (-1.0_f64).exp();
            (e1 * cone.theta, 1.0, 1.0 - e1)
        } else {
            let k1 = 2.0 * cone.iota * (1..=ell - 2).map(sine_power_integral).product::<f64>();
            let cap = k1 * cone.theta.powi(ell as i32) / l;
            ((-1.0_f64).exp() * cap, k1, lower_incomplete_gamma_at_one(ell))
        };
        let lipschitz = model.lipschitz_constant().max(1e-12);
        let ln_leb = model.ln_volume();
        let kappa1 = ln_leb.abs() + (-k0.ln()).abs().max(l * lipschitz.ln().abs() + (k1 * k2).ln().abs());
        BoundConstants {
            ell,
            ln_leb,
            lipschitz,
            k0,
            k1,
            k2,
            kappa1,
            kappa2: l,
        }
    }

    /// `C = max(1/K0, (Θ/λ)^ℓ / (K1 K2))`.
    pub fn density_constant(&self, lambda: f64) -> f64 {
        (1.0 / self.k0).max((self.lipschitz / lambda).powi(self.ell as i32) / (self.k1 * self.k2))
    }

    /// `φ(z) = |ln Leb(U)| + |ln C| + ℓ ln(1 + z)`.
    pub fn phi(&self, lambda: f64, z: f64) -> f64 {
        self.ln_leb.abs() + self.density_constant(lambda).ln().abs() + self.ell as f64 * z.ln_1p()
    }

    /// `κ1 + κ2 |ln λ| + ℓ ln(1 + z)`, valid for every `λ > 0`.
    pub fn lambda_uniform(&self, lambda: f64, z: f64) -> f64 {
        self.kappa1 + self.kappa2 * lambda.ln().abs() + self.ell as f64 * z.ln_1p()
    }

    /// `K` with `λ φ(λ, z) ≤ K (1 + ln(1 + z))` for all `λ ∈ (0, 1]`.
    pub fn growth_constant(&self) -> f64 {
        (self.kappa1 + self.kappa2 / std::f64::consts::E).max(self.ell as f64)
    }

    /// `η(z) = K (1 + ln(1 + z))`.
    pub fn eta(&self, z: f64) -> f64 {
        self.growth_constant() * (1.0 + z.ln_1p())
    }
}

/// `∫_0^π sin^m`.
fn sine_power_integral(m: usize) -> f64 {
    // I_0 = π, I_1 = 2, I_m = (m − 1)/m I_{m−2}
    let mut a = std::f64::consts::PI;
    let mut b = 2.0;
    if m == 0 {
        return a;
    }
    for j in 2..=m {
        let next = (j as f64 - 1.0) / j as f64 * a;
        a = b;
        b = next;
    }
    b
}

/// `∫_0^1 z^{ℓ−1} e^{−z} dz = (ℓ−1)! (1 − e^{−1} Σ_{k<ℓ} 1/k!)`.
fn lower_incomplete_gamma_at_one(ell: usize) -> f64 {
    // the closed form cancels badly for large ℓ; the series Σ_n (−1)^n/(n!(n+ℓ)) does not
    let l = ell as f64;
    let mut s = 0.0;
    let mut fact = 1.0;
    for n in 0..40 {
        if n > 0 {
            fact *= n as f64;
        }
        let term = 1.0 / (fact * (n as f64 + l));
        s += if n % 2 == 0 { term } else { -term };
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundFlag {
    EntropyAboveLnLeb { state: usize },
    EntropyBelowPhi { state: usize },
    EntropyBelowLambdaUniform { state: usize },
    DensityAboveBound { state: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GibbsDiagnostics {
    pub max_density: f64,
    pub entropy_by_state: Vec<f64>,
    /// `ln Leb(U)`, the entropy upper bound.
    pub upper_bound: f64,
    /// `φ(|y|)`; entropies should not fall below `−φ(|y|)`.
    pub lower_bound_phi: f64,
    pub lambda_uniform_bound: f64,
    /// `C (1 + |y|)^ℓ`.
    pub density_bound: f64,
    pub flags: Vec<BoundFlag>,
}

pub fn gibbs_diagnostics(y: &[f64], lambda: f64, model: &ModelSpec) -> Result<GibbsDiagnostics> {
    let policy = gibbs_policy(y, lambda, model)?;
    let c = BoundConstants::for_model(model);
    let z = norm2(y);
    let phi = c.phi(lambda, z);
    let uniform = c.lambda_uniform(lambda, z);
    let density_bound = c.density_constant(lambda) * (1.0 + z).powi(c.ell as i32);
    let mut flags = Vec::new();
    let mut max_density = 0.0_f64;
    let mut entropies = Vec::with_capacity(model.states);
    for (i, row) in policy.densities.iter().enumerate() {
        let h = entropy_unchecked(row, &model.grid);
        let m = row.iter().copied().fold(0.0, f64::max);
        max_density = max_density.max(m);
        if h > c.ln_leb + 1e-12 {
            flags.push(BoundFlag::EntropyAboveLnLeb { state: i });
        }
        if h.abs() > phi {
            flags.push(BoundFlag::EntropyBelowPhi { state: i });
        }
        if h.abs() > uniform {
            flags.push(BoundFlag::EntropyBelowLambdaUniform { state: i });
        }
        if m > density_bound {
            flags.push(BoundFlag::DensityAboveBound { state: i });
        }
        entropies.push(h);
    }
    Ok(GibbsDiagnostics {
        max_density,
        entropy_by_state: entropies,
        upper_bound: c.ln_leb,
        lower_bound_phi: phi,
        lambda_uniform_bound: uniform,
        density_bound,
        flags,
    })
}
