//! Physical-layer model of a spot beam: the circular-aperture pattern,
//! path loss, receive gain, and the resulting SCG / SCGNR / CNR figures.
//!
//! Everything here works in dB except [`normalized_gain`], which is the
//! linear pattern value in `[0, 1]`.

mod bessel;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use bessel::{bessel_j1, J1_FIRST_ZERO, J1_MAX_ARG};

use crate::error::{Error, Result};

#[cfg(test)]
pub(crate) use bessel::oracle as bessel_oracle;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Value reported by [`beam_gain`] at a pattern null.
pub const NULL_GAIN_DB: f64 = -400.0;

/// Normalized gain at or below this is treated as a null (200 dB under peak).
const NULL_FLOOR: f64 = 1e-20;

#[inline]
pub fn db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

#[inline]
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Every constant of the link model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkBudgetParams {
    /// Hz.
    pub carrier_freq: f64,
    /// Aperture radius in wavelengths.
    pub aperture_radius_over_lambda: f64,
    /// m.
    pub antenna_diameter: f64,
    pub antenna_efficiency: f64,
    /// dBi.
    pub max_beam_gain_db: f64,
    pub atmospheric_loss_db: f64,
    /// dBW.
    pub noise_power_dbw: f64,
    /// dBW.
    pub total_power_dbw: f64,
    /// Half of the HPBW, degrees.
    pub half_beamwidth_deg: f64,
}

impl Default for LinkBudgetParams {
    fn default() -> Self {
        LinkBudgetParams {
            carrier_freq: 18.05e9,
            aperture_radius_over_lambda: 5.0,
            antenna_diameter: 0.6,
            antenna_efficiency: 0.6,
            max_beam_gain_db: 50.0,
            atmospheric_loss_db: 0.5,
            noise_power_dbw: -118.0,
            total_power_dbw: 23.5,
            half_beamwidth_deg: 1.6,
        }
    }
}

impl LinkBudgetParams {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::domain(format!("invalid link parameter: {what}")))
            }
        };
        check(
            self.carrier_freq.is_finite() && self.carrier_freq > 0.0,
            "carrier_freq > 0",
        )?;
        check(
            self.aperture_radius_over_lambda.is_finite() && self.aperture_radius_over_lambda > 0.0,
            "aperture_radius_over_lambda > 0",
        )?;
        check(
            self.antenna_diameter.is_finite() && self.antenna_diameter > 0.0,
            "antenna_diameter > 0",
        )?;
        check(
            self.antenna_efficiency > 0.0 && self.antenna_efficiency <= 1.0,
            "0 < antenna_efficiency <= 1",
        )?;
        check(
            self.half_beamwidth_deg > 0.0 && self.half_beamwidth_deg < 90.0,
            "half_beamwidth_deg in (0, 90)",
        )?;
        for (v, name) in [
            (self.max_beam_gain_db, "max_beam_gain_db"),
            (self.atmospheric_loss_db, "atmospheric_loss_db"),
            (self.noise_power_dbw, "noise_power_dbw"),
            (self.total_power_dbw, "total_power_dbw"),
        ] {
            check(v.is_finite(), name)?;
        }
        Ok(())
    }

    /// Carrier wavelength in metres.
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq
    }

    /// 2*pi*beta/lambda, the pattern's argument scale.
    fn pattern_scale(&self) -> f64 {
        2.0 * PI * self.aperture_radius_over_lambda
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if (0.0..=90.0).contains(&theta) {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "off-axis angle {theta} outside [0, 90] degrees"
        )))
    }
}

/// Normalized circular-aperture pattern `4 |J1(x)/x|^2`, `x = 2 pi (beta/lambda) sin(theta)`.
pub fn normalized_gain(theta: f64, params: &LinkBudgetParams) -> Result<f64> {
    check_theta(theta)?;
    if theta == 0.0 {
        return Ok(1.0);
    }
    let x = params.pattern_scale() * theta.to_radians().sin();
    if x > J1_MAX_ARG {
        return Err(Error::domain(format!(
            "pattern argument {x} beyond J1 range"
        )));
    }
    if x < 1e-4 {
        // 2 J1(x)/x = 1 - x^2/8 + x^4/192 - ..., squared.
        let x2 = x * x;
        let r = 1.0 - x2 / 8.0 + x2 * x2 / 192.0;
        return Ok(r * r);
    }
    let r = 2.0 * bessel::j1(x) / x;
    Ok((r * r).min(1.0))
}

/// Peak gain plus the pattern, in dBi; [`NULL_GAIN_DB`] at nulls.
pub fn beam_gain(theta: f64, params: &LinkBudgetParams) -> Result<f64> {
    let g = normalized_gain(theta, params)?;
    Ok(if g > NULL_FLOOR {
        params.max_beam_gain_db + db(g)
    } else {
        NULL_GAIN_DB
    })
}

/// `16 pi^2 S^2 / lambda^2` in dB, slant range in km.
pub fn free_space_path_loss(slant_range_km: f64, params: &LinkBudgetParams) -> Result<f64> {
    if !(slant_range_km.is_finite() && slant_range_km > 0.0) {
        return Err(Error::domain(format!(
            "slant range {slant_range_km} must be > 0"
        )));
    }
    let s = slant_range_km * 1e3;
    Ok(20.0 * (4.0 * PI * s / params.wavelength()).log10())
}

/// `eps pi^2 d^2 / lambda^2` in dB.
pub fn receive_gain(params: &LinkBudgetParams) -> f64 {
    let ratio = PI * params.antenna_diameter / params.wavelength();
    db(params.antenna_efficiency) + 20.0 * ratio.log10()
}

/// Statistical channel gain in dB.
pub fn statistical_channel_gain(
    theta: f64,
    slant_range_km: f64,
    params: &LinkBudgetParams,
) -> Result<f64> {
    let g = beam_gain(theta, params)?;
    let lfs = free_space_path_loss(slant_range_km, params)?;
    Ok(receive_gain(params) + g - lfs - params.atmospheric_loss_db)
}

/// SCG over noise, dB.
pub fn scgnr(theta: f64, slant_range_km: f64, params: &LinkBudgetParams) -> Result<f64> {
    Ok(statistical_channel_gain(theta, slant_range_km, params)? - params.noise_power_dbw)
}

pub fn cnr(
    theta: f64,
    slant_range_km: f64,
    power_dbw: f64,
    params: &LinkBudgetParams,
) -> Result<f64> {
    Ok(
        power_dbw + statistical_channel_gain(theta, slant_range_km, params)?
            - params.noise_power_dbw,
    )
}

/// Per-user link figures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkMetrics {
    pub gain_pattern: f64,
    pub scg_db: f64,
    pub scgnr_db: f64,
    pub cnr_db: f64,
}

impl LinkMetrics {
    pub fn compute(
        theta: f64,
        slant_range_km: f64,
        power_dbw: f64,
        params: &LinkBudgetParams,
    ) -> Result<Self> {
        let gain_pattern = normalized_gain(theta, params)?;
        let scg_db = statistical_channel_gain(theta, slant_range_km, params)?;
        Ok(LinkMetrics {
            gain_pattern,
            scg_db,
            scgnr_db: scg_db - params.noise_power_dbw,
            cnr_db: power_dbw + scg_db - params.noise_power_dbw,
        })
    }
}

/// Angle of the first pattern null, or 90 when the main lobe spans the
/// whole hemisphere.
pub fn first_null_angle(params: &LinkBudgetParams) -> f64 {
    let s = J1_FIRST_ZERO / params.pattern_scale();
    if s >= 1.0 {
        90.0
    } else {
        s.asin().to_degrees()
    }
}

/// Off-axis angle where the pattern falls to one half, by bisection on
/// the main lobe.
pub fn half_power_angle(params: &LinkBudgetParams) -> f64 {
    let (mut lo, mut hi) = (0.0, first_null_angle(params));
    if normalized_gain(hi, params).unwrap_or(0.0) >= 0.5 {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normalized_gain(mid, params).unwrap_or(0.0) >= 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// How the satellite's power budget is spread over users.
pub trait PowerPolicy {
    /// Transmit power towards a user of beam `beam`, dBW. `beam_sizes`
    /// holds the user count of every active beam.
    fn user_power_dbw(&self, total_power_dbw: f64, beam_sizes: &[usize], beam: usize) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerAllocation {
    /// Equal share per active beam, then equal share per user in the beam.
    #[default]
    EqualSplit,
    /// Equal share per user regardless of beam.
    EqualPerUser,
}

impl PowerPolicy for PowerAllocation {
    fn user_power_dbw(&self, total_power_dbw: f64, beam_sizes: &[usize], beam: usize) -> f64 {
        match self {
            PowerAllocation::EqualSplit => {
                total_power_dbw
                    - db(beam_sizes.len().max(1) as f64)
                    - db(beam_sizes[beam].max(1) as f64)
            }
            PowerAllocation::EqualPerUser => {
                total_power_dbw - db(beam_sizes.iter().sum::<usize>().max(1) as f64)
            }
        }
    }
}
