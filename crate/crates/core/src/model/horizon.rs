use super::ModelSpec;
use crate::{Error, Mode, Result};

const MAX_DOUBLINGS: u32 = 48;

/// Smallest horizon `T` (integer in discrete time) on a doubling search such
/// that the discarded reward and entropy mass past `T` is at most `tol`.
///
/// The entropy magnitude is bounded by `|ln Leb(U)|`.
pub fn truncation_horizon(model: &ModelSpec, lambda: f64, tol: f64, mode: Mode) -> Result<f64> {
    truncation_horizon_for(model, lambda, 0.0, tol, mode)
}

/// As [`truncation_horizon`] with the entropy magnitude bounded by
/// `max(|ln Leb(U)|, entropy_cap)`.
pub fn truncation_horizon_for(
    model: &ModelSpec,
    lambda: f64,
    entropy_cap: f64,
    tol: f64,
    mode: Mode,
) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("entropy weight must be >= 0, got {lambda}")));
    }
    let cap = model.ln_volume().abs().max(entropy_cap.abs());
    let entropy_weight = lambda * cap;
    let tail = |t: f64| -> Result<f64> {
        let mut s = model.reward.tail(&model.discount, t, mode)?;
        if entropy_weight > 0.0 {
            s += entropy_weight * model.discount.tail(t, mode)?;
        }
        Ok(s)
    };
    if tail(0.0)? <= tol {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    let mut doublings = 0;
    loop {
        let v = tail(hi)?;
        if v <= tol {
            break;
        }
        if !v.is_finite() || doublings == MAX_DOUBLINGS {
            return Err(Error::NoFiniteHorizon { tol, floor: v });
        }
        hi *= 2.0;
        doublings += 1;
    }
    let mut lo = hi / 2.0;
    if hi == 1.0 {
        lo = 0.0;
    }
    match mode {
        Mode::Discrete => {
            while hi - lo > 1.0 {
                let mid = ((lo + hi) / 2.0).floor();
                if tail(mid)? <= tol {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
        }
        Mode::Continuous => {
            while hi - lo > 1e-9 * hi.max(1.0) {
                let mid = 0.5 * (lo + hi);
                if tail(mid)? <= tol {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
        }
    }
    Ok(hi)
}
