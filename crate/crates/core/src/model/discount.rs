use serde::{Deserialize, Serialize};

use crate::{Error, Mode, Result};

/// Discount function `δ : [0, ∞) → [0, 1]`, nonincreasing with `δ(0) = 1`.
///
/// In discrete time `δ` is evaluated at integer steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DiscountSpec {
    /// `δ(t) = e^{-rate·t}`; the per-step factor is `e^{-rate}`.
    Exponential { rate: f64 },
    /// `δ(0) = 1`, `δ(t) = beta·gamma^t` for `t ≥ 1`. Discrete time only.
    QuasiHyperbolic { beta: f64, gamma: f64 },
    /// `δ(t) = Σ_m weights_m e^{-rates_m t}` with weights summing to one.
    ExponentialMixture { weights: Vec<f64>, rates: Vec<f64> },
    /// `δ(t) = (1 + k t)^{-gamma/k}`; summable when `gamma > k`.
    GeneralizedHyperbolic { k: f64, gamma: f64 },
    /// Values at times `0, step, 2·step, …`, linearly interpolated and zero past
    /// the table. `tail` bounds the mass discarded past the table.
    Tabulated { step: f64, values: Vec<f64>, tail: f64 },
    /// `δ_h(k) = base(k·step)`, the discount of a time-discretized model.
    Sampled { base: Box<DiscountSpec>, step: f64 },
}

impl DiscountSpec {
    /// Exponential discount from its per-step factor `β ∈ (0, 1)`.
    pub fn exponential_factor(beta: f64) -> Self {
        DiscountSpec::Exponential { rate: -beta.ln() }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            DiscountSpec::Exponential { rate } => (-rate * t).exp(),
            DiscountSpec::QuasiHyperbolic { beta, gamma } => {
                if t <= 0.0 {
                    1.0
                } else {
                    beta * gamma.powf(t)
                }
            }
            DiscountSpec::ExponentialMixture { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(c, r)| c * (-r * t).exp())
                .sum(),
            DiscountSpec::GeneralizedHyperbolic { k, gamma } => (1.0 + k * t).powf(-gamma / k),
            DiscountSpec::Tabulated { step, values, .. } => interpolate(values, t / step),
            DiscountSpec::Sampled { base, step } => base.eval(t * step),
        }
    }

    /// Discarded mass past the horizon: `Σ_{t>T} δ(t)` in discrete time (T an
    /// integer), `∫_T^∞ δ(s) ds` in continuous time. An upper bound where no
    /// closed form exists.
    pub fn tail(&self, horizon: f64, mode: Mode) -> Result<f64> {
        match mode {
            Mode::Discrete => self.tail_dt(horizon.max(0.0).floor()),
            Mode::Continuous => self.tail_ct(horizon.max(0.0)),
        }
    }

    /// `Σ_{t≥0} δ(t)` or `∫_0^∞ δ`.
    pub fn total(&self, mode: Mode) -> Result<f64> {
        match mode {
            Mode::Discrete => Ok(self.eval(0.0) + self.tail_dt(0.0)?),
            Mode::Continuous => self.tail_ct(0.0),
        }
    }

    fn tail_dt(&self, t: f64) -> Result<f64> {
        Ok(match self {
            DiscountSpec::Exponential { rate } => geometric_tail(*rate, t),
            DiscountSpec::QuasiHyperbolic { beta, gamma } => {
                beta * gamma.powf(t + 1.0) / (1.0 - gamma)
            }
            DiscountSpec::ExponentialMixture { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(c, r)| c * geometric_tail(*r, t))
                .sum(),
            // δ is nonincreasing, so Σ_{s>T} δ(s) ≤ ∫_T^∞ δ.
            DiscountSpec::GeneralizedHyperbolic { .. } => self.tail_ct(t)?,
            DiscountSpec::Tabulated { step, values, tail } => {
                let end = ((values.len().saturating_sub(1)) as f64 * step).floor();
                let mut s = *tail;
                let mut k = t + 1.0;
                while k <= end {
                    s += self.eval(k);
                    k += 1.0;
                }
                s
            }
            DiscountSpec::Sampled { base, step } => match base.as_ref() {
                DiscountSpec::Exponential { rate } => geometric_tail(rate * step, t),
                DiscountSpec::ExponentialMixture { weights, rates } => weights
                    .iter()
                    .zip(rates)
                    .map(|(c, r)| c * geometric_tail(r * step, t))
                    .sum(),
                _ => base.tail_ct(t * step)? / step,
            },
        })
    }

    fn tail_ct(&self, t: f64) -> Result<f64> {
        Ok(match self {
            DiscountSpec::Exponential { rate } => (-rate * t).exp() / rate,
            DiscountSpec::ExponentialMixture { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(c, r)| c * (-r * t).exp() / r)
                .sum(),
            DiscountSpec::GeneralizedHyperbolic { k, gamma } => {
                (1.0 + k * t).powf(1.0 - gamma / k) / (gamma - k)
            }
            DiscountSpec::Tabulated { step, values, tail } => {
                tail + piecewise_linear_tail(values, *step, t)
            }
            DiscountSpec::QuasiHyperbolic { .. } => {
                return Err(Error::Unsupported(
                    "quasi-hyperbolic discounting is defined in discrete time only".into(),
                ))
            }
            DiscountSpec::Sampled { .. } => {
                return Err(Error::Unsupported(
                    "a sampled discount belongs to a discrete-time model".into(),
                ))
            }
        })
    }

    /// True when `δ(t) = e^{-rate·t}` (possibly sampled on a step grid).
    pub fn exponential_rate(&self) -> Option<f64> {
        match self {
            DiscountSpec::Exponential { rate } => Some(*rate),
            DiscountSpec::ExponentialMixture { weights, rates } => {
                let r0 = *rates.first()?;
                rates
                    .iter()
                    .zip(weights)
                    .all(|(r, c)| *r == r0 || *c == 0.0)
                    .then_some(r0)
            }
            DiscountSpec::Sampled { base, step } => base.exponential_rate().map(|r| r * step),
            _ => None,
        }
    }

    /// Parameter checks: `δ(0) = 1`, values in `[0, 1]`, monotone, summable.
    pub fn check(&self, mode: Mode) -> std::result::Result<(), String> {
        let finite = |x: f64, name: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(format!("{name} is not finite"))
            }
        };
        match self {
            DiscountSpec::Exponential { rate } => {
                finite(*rate, "rate")?;
                if *rate <= 0.0 {
                    return Err(format!("exponential rate must be positive, got {rate}"));
                }
            }
            DiscountSpec::QuasiHyperbolic { beta, gamma } => {
                if mode == Mode::Continuous {
                    return Err("quasi-hyperbolic discounting is discrete-time only".into());
                }
                if !(*beta > 0.0 && *beta <= 1.0) {
                    return Err(format!("quasi-hyperbolic beta must lie in (0, 1], got {beta}"));
                }
                if !(*gamma > 0.0 && *gamma < 1.0) {
                    return Err(format!("quasi-hyperbolic gamma must lie in (0, 1), got {gamma}"));
                }
            }
            DiscountSpec::ExponentialMixture { weights, rates } => {
                if weights.is_empty() || weights.len() != rates.len() {
                    return Err("mixture needs matching, nonempty weights and rates".into());
                }
                if weights.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
                    return Err("mixture weights must be positive".into());
                }
                if rates.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
                    return Err("mixture rates must be positive".into());
                }
                let s: f64 = weights.iter().sum();
                if (s - 1.0).abs() > 1e-12 {
                    return Err(format!("mixture weights sum to {s}, not 1"));
                }
            }
            DiscountSpec::GeneralizedHyperbolic { k, gamma } => {
                finite(*k, "k")?;
                finite(*gamma, "gamma")?;
                if *k <= 0.0 {
                    return Err(format!("hyperbolic k must be positive, got {k}"));
                }
                if gamma <= k {
                    return Err(format!(
                        "hyperbolic discount is not summable: need gamma > k (gamma = {gamma}, k = {k})"
                    ));
                }
            }
            DiscountSpec::Tabulated { step, values, tail } => {
                if !(*step > 0.0) {
                    return Err(format!("table step must be positive, got {step}"));
                }
                if values.first() != Some(&1.0) {
                    return Err("tabulated discount must start at 1".into());
                }
                if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return Err("tabulated discount values must lie in [0, 1]".into());
                }
                if values.windows(2).any(|w| w[1] > w[0]) {
                    return Err("tabulated discount must be nonincreasing".into());
                }
                if !(tail.is_finite() && *tail >= 0.0) {
                    return Err(format!("tail bound must be finite and nonnegative, got {tail}"));
                }
            }
            DiscountSpec::Sampled { base, step } => {
                if mode == Mode::Continuous {
                    return Err("sampled discount belongs to a discrete-time model".into());
                }
                if !(*step > 0.0) {
                    return Err(format!("sampling step must be positive, got {step}"));
                }
                base.check(Mode::Continuous)?;
            }
        }
        Ok(())
    }
}

/// `Σ_{t>T} e^{-r t}` for integer `T`.
fn geometric_tail(rate: f64, t: f64) -> f64 {
    (-rate * (t + 1.0)).exp() / -(-rate).exp_m1()
}

/// Linear interpolation of `values` at fractional index `x`; zero past the end.
pub(crate) fn interpolate(values: &[f64], x: f64) -> f64 {
    if values.is_empty() || x < 0.0 {
        return values.first().copied().unwrap_or(0.0);
    }
    let last = (values.len() - 1) as f64;
    if x > last {
        return 0.0;
    }
    let i = x.floor() as usize;
    if i + 1 >= values.len() {
        return values[values.len() - 1];
    }
    let frac = x - i as f64;
    values[i] + frac * (values[i + 1] - values[i])
}

/// `∫_T^∞` of the piecewise-linear interpolant of `values` on spacing `step`.
pub(crate) fn piecewise_linear_tail(values: &[f64], step: f64, t: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let x0 = (t / step).max(0.0);
    let last = (values.len() - 1) as f64;
    if x0 >= last {
        return 0.0;
    }
    let i0 = x0.floor() as usize;
    let mut s = {
        let a = interpolate(values, x0);
        let b = values[i0 + 1];
        0.5 * (a + b) * (i0 as f64 + 1.0 - x0)
    };
    for i in i0 + 1..values.len() - 1 {
        s += 0.5 * (values[i] + values[i + 1]);
    }
    s * step
}
