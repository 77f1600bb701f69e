//! Pure mappings between temperature, RSSI loss, transmit power level, and
//! free-space required transmit power.
//!
//! Everything here is stateless; the engine recomputes link quantities from
//! these functions every round.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::SimError;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Slope of the temperature-to-RSSI-loss line, dBm per degree Celsius.
pub const RSSI_LOSS_SLOPE_DBM_PER_C: f64 = 0.1996;

/// Temperature at which RSSI loss is zero, degrees Celsius.
pub const REFERENCE_TEMP_C: f64 = 25.0;

/// RSSI loss at or below which the power-level mapping is undefined, dBm.
pub const POWER_LEVEL_FLOOR_DBM: f64 = -40.0;

/// Divisor of the power-level mapping, dBm per unit base.
pub const POWER_LEVEL_SCALE_DBM: f64 = 12.0;

/// Exponent of the power-level mapping.
pub const POWER_LEVEL_EXPONENT: f64 = 2.91;

/// Ambient temperature, degrees Celsius.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Temperature(pub f64);

/// Received-signal-strength loss attributed to temperature, dBm.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct RssiLoss(pub f64);

/// Dimensionless transmit power level; strictly increasing in the RSSI loss
/// it compensates.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct PowerLevel(pub f64);

/// Radio and channel constants feeding the required-transmit-power budget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadioConstants {
    /// Spectral efficiency, dimensionless.
    pub eta: f64,
    /// Energy-per-bit to noise-density ratio, dB.
    pub eb_n0_db: f64,
    /// Channel bandwidth, Hz.
    pub bandwidth_hz: f64,
    /// Carrier frequency, Hz.
    pub frequency_hz: f64,
    /// Receiver noise figure, dB.
    pub rnf_db: f64,
    /// Thermal noise temperature, kelvin.
    pub ambient_kelvin: f64,
    /// Boltzmann constant, J/K.
    pub boltzmann: f64,
    /// Extra multiplicative factor on the noise product; 1.0 is neutral.
    pub m_factor: f64,
}

impl Default for RadioConstants {
    fn default() -> Self {
        RadioConstants {
            eta: 0.0029,
            eb_n0_db: 8.3,
            bandwidth_hz: 83.5e6,
            frequency_hz: 2.45e9,
            rnf_db: 5.0,
            ambient_kelvin: 300.0,
            boltzmann: 1.380_649e-23,
            m_factor: 1.0,
        }
    }
}

impl RadioConstants {
    /// Linear quantities must be strictly positive; dB quantities only finite.
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("eta", self.eta),
            ("bandwidth_hz", self.bandwidth_hz),
            ("frequency_hz", self.frequency_hz),
            ("ambient_kelvin", self.ambient_kelvin),
            ("boltzmann", self.boltzmann),
            ("m_factor", self.m_factor),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SimError::InvalidConfig(format!(
                    "{name} must be finite and positive, got {v}"
                )));
            }
        }
        for (name, v) in [("eb_n0_db", self.eb_n0_db), ("rnf_db", self.rnf_db)] {
            if !v.is_finite() {
                return Err(SimError::InvalidConfig(format!(
                    "{name} must be finite, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// RSSI loss caused by ambient temperature deviating from 25 degrees Celsius.
pub fn temp_to_rssi_loss(t: Temperature) -> Result<RssiLoss, SimError> {
    if !t.0.is_finite() {
        return Err(SimError::NonFinite {
            what: "temperature",
            value: t.0,
        });
    }
    Ok(RssiLoss(RSSI_LOSS_SLOPE_DBM_PER_C * (t.0 - REFERENCE_TEMP_C)))
}

/// Transmit power level that compensates the given RSSI loss.
///
/// Defined only above the -40 dBm floor; the base of the fractional power
/// must stay positive.
pub fn rssi_loss_to_power_level(r: RssiLoss) -> Result<PowerLevel, SimError> {
    if !r.0.is_finite() {
        return Err(SimError::NonFinite {
            what: "RSSI loss",
            value: r.0,
        });
    }
    if r.0 <= POWER_LEVEL_FLOOR_DBM {
        return Err(SimError::PowerLevelDomain { rssi: r.0 });
    }
    let base = (r.0 - POWER_LEVEL_FLOOR_DBM) / POWER_LEVEL_SCALE_DBM;
    Ok(PowerLevel(base.powf(POWER_LEVEL_EXPONENT)))
}

/// Free-space transmit power required to close the link at distance `d_meters`
/// while also compensating `r` of temperature-induced RSSI loss, in dBm.
///
/// The noise-and-path product is computed in linear watts, converted to dBm,
/// and the receiver noise figure and RSSI loss are added as dB terms.
pub fn required_tx_power(d_meters: f64, r: RssiLoss, c: &RadioConstants) -> Result<f64, SimError> {
    if !(d_meters.is_finite() && d_meters > 0.0) {
        return Err(SimError::NonPositiveDistance { d: d_meters });
    }
    if !r.0.is_finite() {
        return Err(SimError::NonFinite {
            what: "RSSI loss",
            value: r.0,
        });
    }
    c.validate()?;
    let wavelength = SPEED_OF_LIGHT / c.frequency_hz;
    let eb_n0_linear = 10f64.powf(c.eb_n0_db / 10.0);
    let path_gain = (4.0 * PI * d_meters / wavelength).powi(2);
    let watts = c.eta
        * eb_n0_linear
        * c.m_factor
        * c.boltzmann
        * c.ambient_kelvin
        * c.bandwidth_hz
        * path_gain;
    let dbm = 10.0 * (watts / 1e-3).log10();
    Ok(dbm + c.rnf_db + r.0)
}

// ---------------------------------------------------------------------------
