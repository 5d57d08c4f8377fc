use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::Tradeoff;

/// Certified perturbation radii and the quantities they come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Radii {
    pub delta_c: f64,
    pub delta_e: f64,
    pub tradeoff: String,
    /// Smallest specification robustness over the demonstrations.
    pub rho_min: f64,
    /// Smallest branch margin over routed samples.
    pub margin: f64,
    pub alpha: f64,
    pub l_x: f64,
    pub l_h: f64,
    /// Largest `delta_c` with `delta_e = 0`.
    pub delta_c_only: f64,
    /// Largest `delta_e` with `delta_c = 0`.
    pub delta_e_only: f64,
}

/// Maximal pair on the trade-off ray subject to
/// `l_x * alpha * delta_c + l_h * delta_e <= rho_min` and `delta_e <= margin`.
pub fn compute_radii(rho_min: f64, margin: f64, l_x: f64, alpha: f64, l_h: f64, tradeoff: Tradeoff) -> Result<Radii> {
    if rho_min.is_nan() || rho_min <= 0.0 {
        return Err(Error::NoPositiveRadii(format!(
            "smallest demonstration robustness is {rho_min}"
        )));
    }
    if margin.is_nan() || margin <= 0.0 {
        return Err(Error::NoPositiveRadii(format!("smallest branch margin is {margin}")));
    }
    let state_gain = l_x * alpha;
    let lambda = match tradeoff {
        Tradeoff::Equal => 1.0,
        Tradeoff::Ratio(l) => l,
    };
    let delta_e = margin.min(rho_min / (state_gain * lambda + l_h));
    let delta_c = lambda * delta_e;
    if !(delta_c > 0.0 && delta_e > 0.0) {
        return Err(Error::NoPositiveRadii(format!(
            "radii ({delta_c}, {delta_e}) are not positive"
        )));
    }
    Ok(Radii {
        delta_c,
        delta_e,
        tradeoff: tradeoff.to_string(),
        rho_min,
        margin,
        alpha,
        l_x,
        l_h,
        delta_c_only: rho_min / state_gain,
        delta_e_only: margin.min(rho_min / l_h),
    })
}
