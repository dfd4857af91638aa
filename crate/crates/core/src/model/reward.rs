use serde::{Deserialize, Serialize};

use super::discount::{interpolate, piecewise_linear_tail, DiscountSpec};
use crate::{Mode, Result};

/// Running reward `f(t, i, u_k)` on the action grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum RewardSpec {
    /// `f(t, i, u_k) = δ(t)·g[i][k]` with the model's discount.
    Separable { g: Vec<Vec<f64>> },
    /// `values[n][i][k] = f(n·step, i, u_k)`, linear in time between rows and
    /// zero past the table. `tail` bounds the reward mass discarded past it.
    Tabulated {
        step: f64,
        values: Vec<Vec<Vec<f64>>>,
        tail: f64,
    },
}

impl RewardSpec {
    pub fn eval(&self, discount: &DiscountSpec, t: f64, i: usize, k: usize) -> f64 {
        match self {
            RewardSpec::Separable { g } => discount.eval(t) * g[i][k],
            RewardSpec::Tabulated { step, values, .. } => {
                let x = (t / step).max(0.0);
                let n = x.floor() as usize;
                if n >= values.len() {
                    return 0.0;
                }
                if n + 1 == values.len() {
                    return if x == n as f64 { values[n][i][k] } else { 0.0 };
                }
                let s = x - n as f64;
                values[n][i][k] + s * (values[n + 1][i][k] - values[n][i][k])
            }
        }
    }

    /// Upper bound on `sup_{i,u} |f(t, i, u)|`.
    pub fn envelope(&self, discount: &DiscountSpec, t: f64) -> f64 {
        match self {
            RewardSpec::Separable { g } => discount.eval(t) * sup_abs(g.iter().flatten()),
            RewardSpec::Tabulated { step, values, .. } => {
                interpolate(&slice_maxima(values), (t / step).max(0.0))
            }
        }
    }

    /// Reward mass past the horizon: `Σ_{t>T}` (discrete) or `∫_T^∞` (continuous)
    /// of the envelope.
    pub fn tail(&self, discount: &DiscountSpec, horizon: f64, mode: Mode) -> Result<f64> {
        match self {
            RewardSpec::Separable { g } => {
                let s = sup_abs(g.iter().flatten());
                if s == 0.0 {
                    return Ok(0.0);
                }
                Ok(s * discount.tail(horizon, mode)?)
            }
            RewardSpec::Tabulated { step, values, tail } => {
                let maxima = slice_maxima(values);
                Ok(tail
                    + match mode {
                        Mode::Discrete => {
                            let end = (maxima.len().saturating_sub(1)) as f64 * step;
                            let mut s = 0.0;
                            let mut t = horizon.max(0.0).floor() + 1.0;
                            while t <= end {
                                s += interpolate(&maxima, t / step);
                                t += 1.0;
                            }
                            s
                        }
                        Mode::Continuous => piecewise_linear_tail(&maxima, *step, horizon),
                    })
            }
        }
    }

    /// The summability constant `M` (discrete) or `M̃` (continuous).
    pub fn mass(&self, discount: &DiscountSpec, mode: Mode) -> Result<f64> {
        match mode {
            Mode::Discrete => Ok(self.envelope(discount, 0.0) + self.tail(discount, 0.0, mode)?),
            Mode::Continuous => self.tail(discount, 0.0, mode),
        }
    }

    /// Whether the reward is `δ(t)·g` with the model's discount.
    pub fn separable_table(&self) -> Option<&[Vec<f64>]> {
        match self {
            RewardSpec::Separable { g } => Some(g),
            RewardSpec::Tabulated { .. } => None,
        }
    }

    /// Slice of `f(t, ·, ·)` at the grid-time `t` as a `[state][node]` table.
    pub fn slice(&self, discount: &DiscountSpec, t: f64, states: usize, nodes: usize) -> Vec<Vec<f64>> {
        (0..states)
            .map(|i| (0..nodes).map(|k| self.eval(discount, t, i, k)).collect())
            .collect()
    }
}

fn sup_abs<'a>(xs: impl Iterator<Item = &'a f64>) -> f64 {
    xs.fold(0.0_f64, |m, x| m.max(x.abs()))
}

fn slice_maxima(values: &[Vec<Vec<f64>>]) -> Vec<f64> {
    values.iter().map(|s| sup_abs(s.iter().flatten())).collect()
}
