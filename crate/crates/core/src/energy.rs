//! Duty-cycle power model: average draw weighted by transmit duty cycle and
//! battery endurance from an ideal energy reservoir.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Device power draws and battery characteristics.
///
/// Defaults are sized for the target device class (MCU plus sub-GHz
/// transceiver, codec chip, and a small display): transmit adds the PA on
/// top of the active electronics, listen keeps the receiver and MCU awake,
/// sleep is MCU deep sleep with regulator quiescent draw. They are
/// engineering assumptions, not measured figures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile {
    /// Draw while transmitting, mW.
    pub p_tx_mw: f64,
    /// Draw while listening/receiving, mW.
    pub p_listen_mw: f64,
    /// Draw in deep sleep, mW.
    pub p_sleep_mw: f64,
    /// Battery capacity, mAh.
    pub battery_capacity_mah: f64,
    /// Nominal battery voltage, V.
    pub battery_voltage_v: f64,
}

impl Default for PowerProfile {
    fn default() -> Self {
        PowerProfile {
            p_tx_mw: 700.0,
            p_listen_mw: 450.0,
            p_sleep_mw: 10.0,
            battery_capacity_mah: 2000.0,
            battery_voltage_v: 3.7,
        }
    }
}

impl PowerProfile {
    /// Checks the draw ordering (tx >= listen >= sleep >= 0) and battery
    /// positivity.
    pub fn validate(&self) -> Result<()> {
        if !(self.p_tx_mw >= self.p_listen_mw
            && self.p_listen_mw >= self.p_sleep_mw
            && self.p_sleep_mw >= 0.0)
        {
            return Err(Error::InvalidParameter {
                field: "power",
                reason: format!(
                    "draws must satisfy tx >= listen >= sleep >= 0, got {}/{}/{}",
                    self.p_tx_mw, self.p_listen_mw, self.p_sleep_mw
                ),
            });
        }
        let capacity_ok = self.battery_capacity_mah.is_finite() && self.battery_capacity_mah > 0.0;
        let voltage_ok = self.battery_voltage_v.is_finite() && self.battery_voltage_v > 0.0;
        if !capacity_ok || !voltage_ok {
            return Err(Error::InvalidParameter {
                field: "power.battery",
                reason: "capacity and voltage must be > 0".into(),
            });
        }
        Ok(())
    }

    /// Stored energy, mWh.
    pub fn battery_energy_mwh(&self) -> f64 {
        self.battery_capacity_mah * self.battery_voltage_v
    }
}

/// Two-state average power: `D * P_tx + (1 - D) * P_sleep`, mW.
///
/// The classic duty-cycle form, treating all non-transmit time as sleep.
pub fn average_power(duty_cycle_tx: f64, profile: &PowerProfile) -> Result<f64> {
    if !(0.0..=1.0).contains(&duty_cycle_tx) {
        return Err(Error::InvalidParameter {
            field: "duty_cycle_tx",
            reason: format!("must lie in [0, 1], got {duty_cycle_tx}"),
        });
    }
    Ok(duty_cycle_tx * profile.p_tx_mw + (1.0 - duty_cycle_tx) * profile.p_sleep_mw)
}

/// Three-state average power over (tx, listen, sleep) occupancy fractions,
/// which must sum to 1 within 1e-9. This is what half-duplex nodes actually
/// exhibit: idle time splits between active listening and deep sleep.
pub fn average_power_three_state(
    tx_fraction: f64,
    listen_fraction: f64,
    sleep_fraction: f64,
    profile: &PowerProfile,
) -> Result<f64> {
    for (field, v) in [
        ("tx_fraction", tx_fraction),
        ("listen_fraction", listen_fraction),
        ("sleep_fraction", sleep_fraction),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParameter {
                field,
                reason: format!("must lie in [0, 1], got {v}"),
            });
        }
    }
    let sum = tx_fraction + listen_fraction + sleep_fraction;
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter {
            field: "occupancy",
            reason: format!("fractions must sum to 1, got {sum}"),
        });
    }
    Ok(tx_fraction * profile.p_tx_mw
        + listen_fraction * profile.p_listen_mw
        + sleep_fraction * profile.p_sleep_mw)
}

/// Endurance in hours: stored energy divided by average draw.
pub fn battery_life_hours(avg_power_mw: f64, profile: &PowerProfile) -> Result<f64> {
    if !avg_power_mw.is_finite() || avg_power_mw <= 0.0 {
        return Err(Error::InvalidParameter {
            field: "avg_power_mw",
            reason: format!("must be > 0, got {avg_power_mw}"),
        });
    }
    Ok(profile.battery_energy_mwh() / avg_power_mw)
}

// ==== Tests ====
