use serde::{Deserialize, Serialize};

use super::grid::ActionGrid;
use crate::{Error, Result};

/// Normalization tolerance for `Σ_k w_k ρ[i][k] = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// Randomized stationary policy: per-state density values at the grid nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxedPolicy {
    pub densities: Vec<Vec<f64>>,
}

impl RelaxedPolicy {
    pub fn new(densities: Vec<Vec<f64>>) -> Self {
        RelaxedPolicy { densities }
    }

    pub fn uniform(grid: &ActionGrid, states: usize) -> Self {
        RelaxedPolicy {
            densities: vec![grid.uniform_density(); states],
        }
    }

    /// Standard (Dirac) policy choosing node `nodes[i]` in state `i`.
    pub fn standard(grid: &ActionGrid, nodes: &[usize]) -> Self {
        RelaxedPolicy {
            densities: nodes.iter().map(|&k| grid.one_hot(k)).collect(),
        }
    }

    pub fn states(&self) -> usize {
        self.densities.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.densities[i]
    }

    /// Probability mass `w_k ρ[i][k]` of node `k` in state `i`.
    pub fn mass(&self, grid: &ActionGrid, i: usize, k: usize) -> f64 {
        grid.weights()[k] * self.densities[i][k]
    }

    /// Checks shape, signs and normalization against `grid`.
    pub fn check(&self, grid: &ActionGrid) -> Result<()> {
        for (i, row) in self.densities.iter().enumerate() {
            check_row(row, grid, i)?;
        }
        Ok(())
    }

    /// The node chosen in each state, if every row is one-hot.
    pub fn standard_nodes(&self, grid: &ActionGrid) -> Option<Vec<usize>> {
        self.densities
            .iter()
            .map(|row| {
                let mut hit = None;
                for (k, &r) in row.iter().enumerate() {
                    if r != 0.0 {
                        if hit.is_some() || (r * grid.weights()[k] - 1.0).abs() > NORMALIZATION_TOL {
                            return None;
                        }
                        hit = Some(k);
                    }
                }
                hit
            })
            .collect()
    }

    /// Max over states of the quadrature L¹ distance between density rows.
    pub fn l1_distance(&self, other: &RelaxedPolicy, grid: &ActionGrid) -> f64 {
        self.densities
            .iter()
            .zip(&other.densities)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .zip(grid.weights())
                    .map(|((x, y), w)| w * (x - y).abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

pub(crate) fn check_row(row: &[f64], grid: &ActionGrid, state: usize) -> Result<()> {
    if row.len() != grid.len() {
        return Err(Error::InvalidArgument(format!(
            "density row {state} has {} entries, grid has {} nodes",
            row.len(),
            grid.len()
        )));
    }
    if let Some(node) = row.iter().position(|r| !(*r >= 0.0)) {
        return Err(Error::NegativeDensity { state, node });
    }
    let mass: f64 = row.iter().zip(grid.weights()).map(|(r, w)| r * w).sum();
    if (mass - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized { state, mass });
    }
    Ok(())
}
