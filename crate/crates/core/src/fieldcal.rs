//! Shot-noise-limited field uncertainty of an NV ensemble magnetometer.

use crate::error::{Error, Result};

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

/// `δB = 1 / (γ √(N t_m T₂*))` in Gauss, with γ in MHz/G and times in seconds.
pub fn field_uncertainty(
    n_spins: f64,
    t_meas_s: f64,
    t2_star_s: f64,
    gamma_mhz_per_g: f64,
) -> Result<f64> {
    positive("number of spins", n_spins)?;
    positive("measurement time", t_meas_s)?;
    positive("T2*", t2_star_s)?;
    positive("gyromagnetic ratio", gamma_mhz_per_g)?;
    Ok(1.0 / (gamma_mhz_per_g * 1e6 * (n_spins * t_meas_s * t2_star_s).sqrt()))
}

/// Same, with `t_m = T₂* = 1/Δν`.
pub fn field_uncertainty_from_linewidth(
    n_spins: f64,
    linewidth_mhz: f64,
    gamma_mhz_per_g: f64,
) -> Result<f64> {
    positive("linewidth", linewidth_mhz)?;
    let t = 1.0 / (linewidth_mhz * 1e6);
    field_uncertainty(n_spins, t, t, gamma_mhz_per_g)
}
