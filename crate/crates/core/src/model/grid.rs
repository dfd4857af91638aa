use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default cap on the number of grid nodes.
pub const DEFAULT_NODE_CAP: usize = 1 << 20;

/// Placement of the per-axis nodes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    /// Cell midpoints, weight = cell volume.
    #[default]
    Midpoint,
    /// Equally spaced nodes including both endpoints (trapezoidal weights), so
    /// corner actions are exactly representable.
    Vertices,
}

/// Tensor-product quadrature of an axis-aligned action box.
///
/// Nodes are enumerated with the last axis varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct ActionGrid {
    bounds: Vec<(f64, f64)>,
    per_dim: usize,
    kind: GridKind,
    axes: Vec<Vec<f64>>,
    axis_weights: Vec<Vec<f64>>,
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
    volume: f64,
}

/// Midpoint tensor grid with `per_dim` cells per axis.
pub fn build_action_grid(bounds: &[(f64, f64)], per_dim: usize) -> Result<ActionGrid> {
    ActionGrid::new(bounds, per_dim, GridKind::Midpoint)
}

impl ActionGrid {
    pub fn new(bounds: &[(f64, f64)], per_dim: usize, kind: GridKind) -> Result<Self> {
        Self::with_cap(bounds, per_dim, kind, DEFAULT_NODE_CAP)
    }

    pub fn with_cap(
        bounds: &[(f64, f64)],
        per_dim: usize,
        kind: GridKind,
        cap: usize,
    ) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidGrid("action box needs at least one dimension".into()));
        }
        if per_dim < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 nodes per dimension, got {per_dim}"
            )));
        }
        for (dim, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
                return Err(Error::DegenerateBox { dim, lo, hi });
            }
        }
        let count = bounds
            .iter()
            .try_fold(1usize, |acc, _| acc.checked_mul(per_dim))
            .filter(|&n| n <= cap)
            .ok_or(Error::GridTooLarge {
                nodes: per_dim.saturating_pow(bounds.len() as u32),
                cap,
            })?;

        let (axes, axis_weights): (Vec<_>, Vec<_>) = bounds
            .iter()
            .map(|&(lo, hi)| axis_rule(lo, hi, per_dim, kind))
            .unzip();

        let ell = bounds.len();
        let mut nodes = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        let mut idx = vec![0usize; ell];
        for _ in 0..count {
            nodes.push((0..ell).map(|m| axes[m][idx[m]]).collect());
            weights.push((0..ell).map(|m| axis_weights[m][idx[m]]).product());
            for m in (0..ell).rev() {
                idx[m] += 1;
                if idx[m] < per_dim {
                    break;
                }
                idx[m] = 0;
            }
        }
        let volume = bounds.iter().map(|(lo, hi)| hi - lo).product();
        Ok(Self {
            bounds: bounds.to_vec(),
            per_dim,
            kind,
            axes,
            axis_weights,
            nodes,
            weights,
            volume,
        })
    }

    pub fn dims(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn per_dim(&self) -> usize {
        self.per_dim
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.nodes[k]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Per-axis node coordinates.
    pub fn axis(&self, m: usize) -> &[f64] {
        &self.axes[m]
    }

    pub fn axis_weights(&self, m: usize) -> &[f64] {
        &self.axis_weights[m]
    }

    /// `Leb(U)`.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Multi-index (per axis) of node `k`.
    pub fn multi_index(&self, mut k: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dims()];
        for m in (0..self.dims()).rev() {
            idx[m] = k % self.per_dim;
            k /= self.per_dim;
        }
        idx
    }

    /// Flat node index of a per-axis multi-index.
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.per_dim + i)
    }

    /// Node closest to `u` in Euclidean distance.
    pub fn nearest_node(&self, u: &[f64]) -> usize {
        let idx: Vec<usize> = (0..self.dims())
            .map(|m| {
                let axis = &self.axes[m];
                (0..axis.len())
                    .min_by(|&a, &b| {
                        (axis[a] - u[m]).abs().total_cmp(&(axis[b] - u[m]).abs())
                    })
                    .unwrap_or(0)
            })
            .collect();
        self.flat_index(&idx)
    }

    /// Radius of the largest ball around any point of the box that contains no
    /// grid node: every action lies within this distance of some node.
    pub fn covering_radius(&self) -> f64 {
        self.bounds
            .iter()
            .map(|(lo, hi)| {
                let h = match self.kind {
                    GridKind::Midpoint => (hi - lo) / self.per_dim as f64,
                    GridKind::Vertices => (hi - lo) / (self.per_dim - 1) as f64,
                };
                (h / 2.0).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Pairs of nodes adjacent along some axis.
    pub fn adjacent_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for k in 0..self.len() {
            let idx = self.multi_index(k);
            for m in 0..self.dims() {
                if idx[m] + 1 < self.per_dim {
                    let mut next = idx.clone();
                    next[m] += 1;
                    pairs.push((k, self.flat_index(&next)));
                }
            }
        }
        pairs
    }

    /// Uniform density `1/Leb(U)`.
    pub fn uniform_density(&self) -> Vec<f64> {
        vec![1.0 / self.volume; self.len()]
    }

    /// Density of the Dirac mass at node `k`: `1/w_k` at `k`, zero elsewhere.
    pub fn one_hot(&self, k: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.len()];
        row[k] = 1.0 / self.weights[k];
        row
    }

    /// Quadrature sum `Σ_k w_k v_k`.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }
}

fn axis_rule(lo: f64, hi: f64, n: usize, kind: GridKind) -> (Vec<f64>, Vec<f64>) {
    let len = hi - lo;
    match kind {
        GridKind::Midpoint => {
            let h = len / n as f64;
            let nodes = (0..n).map(|k| lo + (k as f64 + 0.5) * h).collect();
            (nodes, vec![h; n])
        }
        GridKind::Vertices => {
            let h = len / (n - 1) as f64;
            let nodes = (0..n)
                .map(|k| if k + 1 == n { hi } else { lo + k as f64 * h })
                .collect();
            let mut w = vec![h; n];
            w[0] = h / 2.0;
            w[n - 1] = h / 2.0;
            (nodes, w)
        }
    }
}
