//! RF link budget in the log domain: free-space path loss, received power,
//! link margin, receiver sensitivity, and maximum-range solving.
//!
//! Every quantity stays in dB/dBm; nothing converts through linear power, so
//! results are exact algebraic combinations of the inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phy::PhyConfig;

// ---- Constants ----

/// Free-space path loss constant for distance in km and frequency in MHz:
/// 20*log10(4*pi/c) rescaled to those units, conventionally rounded to 32.44.
pub const FSPL_CONST_DB: f64 = 32.44;

/// Regulatory transmit-power envelope enforced by [`LinkParams::validate`].
pub const TX_POWER_MIN_DBM: f64 = 0.0;
/// Upper edge of the envelope (30 dBm = 1 W ERP class ceiling).
pub const TX_POWER_MAX_DBM: f64 = 30.0;

/// Hard floor on receiver sensitivity: no supported configuration claims a
/// sensitivity better than this.
pub const SENSITIVITY_FLOOR_DBM: f64 = -148.0;

/// Per-spreading-factor sensitivity at 125 kHz, SF7 through SF12.
/// Shaped like a sub-GHz transceiver datasheet column; each bandwidth
/// doubling costs 3 dB (10*log10(2)) of noise floor.
const SENSITIVITY_125K_DBM: [f64; 6] = [-123.0, -126.0, -129.0, -132.0, -134.5, -137.0];

// ---- Domain types ----

/// Inputs to the link-budget chain. All fields are log-domain scalars.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    /// Transmit power in dBm.
    pub tx_power_dbm: f64,
    /// Transmit antenna gain in dBi.
    pub tx_gain_dbi: f64,
    /// Receive antenna gain in dBi.
    pub rx_gain_dbi: f64,
    /// Fixed system losses (cables, connectors, fade margin allowance) in dB.
    pub system_loss_db: f64,
    /// Carrier frequency in MHz.
    pub carrier_freq_mhz: f64,
    /// Link distance in km.
    pub distance_km: f64,
    /// Explicit receiver sensitivity override in dBm. `None` resolves through
    /// the per-(SF, bandwidth) table via [`effective_sensitivity`].
    #[serde(default)]
    pub rx_sensitivity_dbm: Option<f64>,
}

impl Default for LinkParams {
    /// 868 MHz ISM link at 1.5 km with 17 dBm into 2 dBi antennas and 5 dB of
    /// system loss; sensitivity resolved from the table unless overridden.
    fn default() -> Self {
        LinkParams {
            tx_power_dbm: 17.0,
            tx_gain_dbi: 2.0,
            rx_gain_dbi: 2.0,
            system_loss_db: 5.0,
            carrier_freq_mhz: 868.0,
            distance_km: 1.5,
            rx_sensitivity_dbm: None,
        }
    }
}

impl LinkParams {
    /// Checks field domains, including the regulatory transmit envelope.
    pub fn validate(&self) -> Result<()> {
        self.validate_with_tx_envelope(true)
    }

    /// Checks field domains; `enforce_tx_envelope = false` permits transmit
    /// powers outside [0, 30] dBm for what-if studies.
    pub fn validate_with_tx_envelope(&self, enforce_tx_envelope: bool) -> Result<()> {
        if !self.distance_km.is_finite() || self.distance_km <= 0.0 {
            return Err(Error::InvalidParameter {
                field: "distance_km",
                reason: format!("must be > 0, got {}", self.distance_km),
            });
        }
        if !self.carrier_freq_mhz.is_finite() || self.carrier_freq_mhz <= 0.0 {
            return Err(Error::InvalidParameter {
                field: "carrier_freq_mhz",
                reason: format!("must be > 0, got {}", self.carrier_freq_mhz),
            });
        }
        if !self.system_loss_db.is_finite() || self.system_loss_db < 0.0 {
            return Err(Error::InvalidParameter {
                field: "system_loss_db",
                reason: format!("must be >= 0, got {}", self.system_loss_db),
            });
        }
        if enforce_tx_envelope
            && !(TX_POWER_MIN_DBM..=TX_POWER_MAX_DBM).contains(&self.tx_power_dbm)
        {
            return Err(Error::InvalidParameter {
                field: "tx_power_dbm",
                reason: format!(
                    "outside the [{TX_POWER_MIN_DBM}, {TX_POWER_MAX_DBM}] dBm envelope: {}",
                    self.tx_power_dbm
                ),
            });
        }
        Ok(())
    }
}

/// Output of the budget chain for one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetResult {
    /// Free-space path loss at the configured distance/frequency, dB.
    pub path_loss_db: f64,
    /// Power at the receiver input, dBm.
    pub rx_power_dbm: f64,
    /// Headroom over the sensitivity actually used, dB.
    pub link_margin_db: f64,
    /// Sensitivity the margin was computed against, dBm.
    pub sensitivity_dbm: f64,
    /// True when the margin meets the configured threshold.
    pub feasible: bool,
}

// ---- Operations ----

/// Free-space path loss: `20*log10(d_km) + 20*log10(f_mhz) + 32.44` dB.
pub fn fspl(distance_km: f64, carrier_freq_mhz: f64) -> Result<f64> {
    if !distance_km.is_finite() || distance_km <= 0.0 {
        return Err(Error::InvalidParameter {
            field: "distance_km",
            reason: format!("must be > 0, got {distance_km}"),
        });
    }
    if !carrier_freq_mhz.is_finite() || carrier_freq_mhz <= 0.0 {
        return Err(Error::InvalidParameter {
            field: "carrier_freq_mhz",
            reason: format!("must be > 0, got {carrier_freq_mhz}"),
        });
    }
    Ok(20.0 * distance_km.log10() + 20.0 * carrier_freq_mhz.log10() + FSPL_CONST_DB)
}

/// Received power: `P_t + G_t + G_r - FSPL(d, f) - L_s` dBm.
pub fn received_power(params: &LinkParams) -> Result<f64> {
    let loss = fspl(params.distance_km, params.carrier_freq_mhz)?;
    Ok(params.tx_power_dbm + params.tx_gain_dbi + params.rx_gain_dbi - loss
        - params.system_loss_db)
}

/// Link margin: received power minus receiver sensitivity, dB.
pub fn link_margin(rx_power_dbm: f64, sensitivity_dbm: f64) -> f64 {
    rx_power_dbm - sensitivity_dbm
}

/// Receiver sensitivity for a radio configuration, from the datasheet-style
/// table: 125 kHz column SF7..SF12 = [-123, -126, -129, -132, -134.5, -137]
/// dBm, +3 dB per bandwidth doubling, never better than
/// [`SENSITIVITY_FLOOR_DBM`].
pub fn sensitivity_for(phy: &PhyConfig) -> Result<f64> {
    phy.validate()?;
    let idx = (phy.spreading_factor - 7) as usize;
    let bw_penalty_db = match phy.bandwidth_hz {
        125_000 => 0.0,
        250_000 => 3.0,
        500_000 => 6.0,
        other => {
            return Err(Error::UnsupportedRadioConfig {
                spreading_factor: phy.spreading_factor,
                bandwidth_hz: other,
            })
        }
    };
    Ok((SENSITIVITY_125K_DBM[idx] + bw_penalty_db).max(SENSITIVITY_FLOOR_DBM))
}

/// Sensitivity a link actually uses: the explicit override when present,
/// otherwise the table value for the radio configuration.
pub fn effective_sensitivity(params: &LinkParams, phy: &PhyConfig) -> Result<f64> {
    match params.rx_sensitivity_dbm {
        Some(s) => Ok(s),
        None => sensitivity_for(phy),
    }
}

/// Runs the full budget chain and applies a feasibility threshold.
pub fn compute_budget(
    params: &LinkParams,
    phy: &PhyConfig,
    margin_threshold_db: f64,
) -> Result<BudgetResult> {
    let path_loss_db = fspl(params.distance_km, params.carrier_freq_mhz)?;
    let rx_power_dbm = received_power(params)?;
    let sensitivity_dbm = effective_sensitivity(params, phy)?;
    let link_margin_db = link_margin(rx_power_dbm, sensitivity_dbm);
    Ok(BudgetResult {
        path_loss_db,
        rx_power_dbm,
        link_margin_db,
        sensitivity_dbm,
        feasible: link_margin_db >= margin_threshold_db,
    })
}

/// Largest distance (km) at which the link margin still meets the threshold.
///
/// Closed-form inversion of the path-loss logarithm, exact to floating-point
/// precision (far inside the 1 m contract): the margin equals the threshold
/// when `20*log10(d) = P_t + G_t + G_r - L_s - sens - thr - 20*log10(f) -
/// 32.44`. `params.distance_km` is ignored.
pub fn max_range(
    params: &LinkParams,
    phy: &PhyConfig,
    margin_threshold_db: f64,
) -> Result<f64> {
    if !margin_threshold_db.is_finite() {
        return Err(Error::InvalidParameter {
            field: "margin_threshold_db",
            reason: format!("must be finite, got {margin_threshold_db}"),
        });
    }
    if !params.carrier_freq_mhz.is_finite() || params.carrier_freq_mhz <= 0.0 {
        return Err(Error::InvalidParameter {
            field: "carrier_freq_mhz",
            reason: format!("must be > 0, got {}", params.carrier_freq_mhz),
        });
    }
    let sensitivity_dbm = effective_sensitivity(params, phy)?;
    let allowed_path_loss_db = params.tx_power_dbm + params.tx_gain_dbi + params.rx_gain_dbi
        - params.system_loss_db
        - sensitivity_dbm
        - margin_threshold_db;
    let exponent =
        (allowed_path_loss_db - 20.0 * params.carrier_freq_mhz.log10() - FSPL_CONST_DB) / 20.0;
    let distance_km = 10f64.powf(exponent);
    if !distance_km.is_finite() || distance_km <= 0.0 {
        return Err(Error::LinkNeverCloses);
    }
    Ok(distance_km)
}

// ==== Tests ====

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::PhyConfig;
    use proptest::prelude::*;

    const EPS_DB: f64 = 1e-9;

    /// Worked-example chain: 17 dBm, 2/2 dBi, 5 dB loss, 868 MHz, 1.5 km,
    /// sensitivity pinned to -120 dBm.
    fn worked_example() -> LinkParams {
        LinkParams {
            rx_sensitivity_dbm: Some(-120.0),
            ..LinkParams::default()
        }
    }

    fn phy_sf(sf: u8) -> PhyConfig {
        PhyConfig {
            spreading_factor: sf,
            ..PhyConfig::default()
        }
    }

    // Frozen oracle values, computed with an independent long-hand log10
    // evaluation before this module was written.
    const FSPL_1P5_868: f64 = 94.73221968464347;
    const FSPL_0P5_433: f64 = 79.14915801378768;
    const RX_14_433_1KM: f64 = -74.16975792706731;
    const MAX_RANGE_THR0_KM: f64 = 173.57224264824208;

    #[test]
    fn fspl_matches_worked_example() {
        let loss = fspl(1.5, 868.0).unwrap();
        assert!(
            (loss - 94.73).abs() < 0.01,
            "fspl(1.5, 868) = {loss}, expected 94.73 +/- 0.01"
        );
        assert!((loss - FSPL_1P5_868).abs() < EPS_DB);
    }

    #[test]
    fn fspl_exact_at_unit_distance() {
        // d = 1 km zeroes the distance term; 20*log10(1000) = 60 exactly.
        assert!((fspl(1.0, 1000.0).unwrap() - 92.44).abs() < EPS_DB);
    }

    #[test]
    fn fspl_matches_longhand_oracle() {
        assert!((fspl(0.5, 433.0).unwrap() - FSPL_0P5_433).abs() < EPS_DB);
    }

    #[test]
    fn fspl_rejects_non_positive_arguments() {
        assert!(fspl(0.0, 868.0).is_err());
        assert!(fspl(-1.0, 868.0).is_err());
        assert!(fspl(1.0, 0.0).is_err());
        assert!(fspl(f64::NAN, 868.0).is_err());
    }

    #[test]
    fn received_power_matches_worked_example() {
        let p = received_power(&worked_example()).unwrap();
        assert!(
            (p - (-78.73)).abs() < 0.01,
            "received power {p}, expected -78.73 +/- 0.01"
        );
    }

    #[test]
    fn received_power_is_pure_fspl_negation_with_zero_everything() {
        let params = LinkParams {
            tx_power_dbm: 0.0,
            tx_gain_dbi: 0.0,
            rx_gain_dbi: 0.0,
            system_loss_db: 0.0,
            carrier_freq_mhz: 1000.0,
            distance_km: 1.0,
            rx_sensitivity_dbm: None,
        };
        assert!((received_power(&params).unwrap() - (-92.44)).abs() < EPS_DB);
    }

    #[test]
    fn received_power_matches_arithmetic_oracle() {
        let params = LinkParams {
            tx_power_dbm: 14.0,
            tx_gain_dbi: 0.0,
            rx_gain_dbi: 0.0,
            system_loss_db: 3.0,
            carrier_freq_mhz: 433.0,
            distance_km: 1.0,
            rx_sensitivity_dbm: None,
        };
        assert!((received_power(&params).unwrap() - RX_14_433_1KM).abs() < EPS_DB);
    }

    #[test]
    fn link_margin_is_direct_subtraction() {
        let m = link_margin(-78.73, -120.0);
        assert!((m - 41.27).abs() < EPS_DB);
        assert!((link_margin(-100.0, -148.0) - 48.0).abs() < EPS_DB);
        for x in [-120.0, 0.0, 33.5] {
            assert_eq!(link_margin(x, x), 0.0, "identity margin at {x}");
        }
    }

    #[test]
    fn sensitivity_table_values_and_monotonicity() {
        assert_eq!(sensitivity_for(&phy_sf(7)).unwrap(), -123.0);
        let mut prev = f64::INFINITY;
        for sf in 7..=12u8 {
            let s = sensitivity_for(&phy_sf(sf)).unwrap();
            assert!(
                s < prev,
                "sensitivity must strictly improve with SF: SF{sf} = {s}, prev = {prev}"
            );
            assert!(s >= SENSITIVITY_FLOOR_DBM, "floor violated at SF{sf}");
            prev = s;
        }
        let sf9 = sensitivity_for(&phy_sf(9)).unwrap();
        assert!(sensitivity_for(&phy_sf(12)).unwrap() < sf9 && sf9 < sensitivity_for(&phy_sf(7)).unwrap());
    }

    #[test]
    fn sensitivity_worsens_3db_per_bandwidth_doubling() {
        for sf in 7..=12u8 {
            let base = sensitivity_for(&phy_sf(sf)).unwrap();
            for (bw, penalty) in [(250_000u32, 3.0), (500_000, 6.0)] {
                let phy = PhyConfig {
                    spreading_factor: sf,
                    bandwidth_hz: bw,
                    ..PhyConfig::default()
                };
                assert!((sensitivity_for(&phy).unwrap() - (base + penalty)).abs() < EPS_DB);
            }
        }
    }

    #[test]
    fn sensitivity_rejects_unsupported_combinations() {
        let phy = PhyConfig {
            spreading_factor: 6,
            ..PhyConfig::default()
        };
        assert!(sensitivity_for(&phy).is_err());
        let phy = PhyConfig {
            bandwidth_hz: 62_500,
            ..PhyConfig::default()
        };
        assert!(sensitivity_for(&phy).is_err());
    }

    #[test]
    fn effective_sensitivity_prefers_override() {
        let params = worked_example();
        assert_eq!(effective_sensitivity(&params, &phy_sf(7)).unwrap(), -120.0);
        let table = LinkParams::default();
        assert_eq!(effective_sensitivity(&table, &phy_sf(7)).unwrap(), -123.0);
    }

    #[test]
    fn budget_chain_reproduces_worked_example() {
        let b = compute_budget(&worked_example(), &phy_sf(7), 0.0).unwrap();
        assert!((b.path_loss_db - 94.73).abs() < 0.01, "L_p = {}", b.path_loss_db);
        assert!((b.rx_power_dbm - (-78.73)).abs() < 0.01, "P_r = {}", b.rx_power_dbm);
        assert!((b.link_margin_db - 41.27).abs() < 0.01, "margin = {}", b.link_margin_db);
        assert!(b.feasible);
        assert_eq!(b.sensitivity_dbm, -120.0);
        // Margin equals rx power minus the sensitivity used, exactly.
        assert_eq!(b.link_margin_db, b.rx_power_dbm - b.sensitivity_dbm);
    }

    #[test]
    fn max_range_inverts_worked_example() {
        let range = max_range(&worked_example(), &phy_sf(7), 41.27).unwrap();
        assert!(
            (range - 1.5).abs() < 0.001,
            "max_range at the worked-example margin = {range} km, expected 1.5 +/- 0.001"
        );
    }

    #[test]
    fn max_range_with_zero_threshold_matches_closed_form_and_bisection() {
        let params = worked_example();
        let phy = phy_sf(7);
        let range = max_range(&params, &phy, 0.0).unwrap();
        assert!((range - MAX_RANGE_THR0_KM).abs() < 1e-6);
        assert!(range > 1.5, "zero-threshold range must exceed 1.5 km");

        // Bisection oracle over the margin-at-distance function.
        let margin_at = |d: f64| {
            let p = LinkParams {
                distance_km: d,
                ..params.clone()
            };
            received_power(&p).unwrap() - (-120.0)
        };
        let (mut lo, mut hi) = (1e-3, 1e6);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if margin_at(mid) >= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!(
            (range - lo).abs() < 1e-6,
            "closed form {range} vs bisection {lo}"
        );
    }

    #[test]
    fn max_range_fixed_point_at_one_km() {
        // Threshold chosen as the margin at exactly 1 km -> range is 1 km.
        let params = LinkParams {
            distance_km: 1.0,
            ..worked_example()
        };
        let phy = phy_sf(7);
        let margin = received_power(&params).unwrap() - (-120.0);
        let range = max_range(&params, &phy, margin).unwrap();
        assert!((range - 1.0).abs() < 1e-9, "fixed point broke: {range}");
    }

    #[test]
    fn max_range_round_trip_reproduces_threshold() {
        for thr in [0.0, 10.0, 41.27] {
            let range = max_range(&worked_example(), &phy_sf(7), thr).unwrap();
            let at_range = LinkParams {
                distance_km: range,
                ..worked_example()
            };
            let margin = link_margin(received_power(&at_range).unwrap(), -120.0);
            assert!(
                (margin - thr).abs() < 0.01,
                "margin at max_range = {margin}, threshold {thr}"
            );
        }
    }

    #[test]
    fn validate_enforces_domains_and_envelope() {
        assert!(LinkParams::default().validate().is_ok());
        let hot = LinkParams {
            tx_power_dbm: 36.0,
            ..LinkParams::default()
        };
        assert!(hot.validate().is_err());
        assert!(hot.validate_with_tx_envelope(false).is_ok());
        let bad = LinkParams {
            system_loss_db: -1.0,
            ..LinkParams::default()
        };
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn fspl_strictly_increasing_in_distance_and_frequency(
            d in 0.01f64..100.0,
            f in 100.0f64..6000.0,
            bump in 0.01f64..10.0,
        ) {
            let base = fspl(d, f).unwrap();
            prop_assert!(fspl(d + bump, f).unwrap() > base);
            prop_assert!(fspl(d, f + bump).unwrap() > base);
        }

        #[test]
        fn fspl_doubling_distance_adds_six_db(d in 0.01f64..1000.0, f in 100.0f64..6000.0) {
            let delta = fspl(2.0 * d, f).unwrap() - fspl(d, f).unwrap();
            prop_assert!((delta - 20.0 * 2f64.log10()).abs() < 1e-9);
        }

        #[test]
        fn budget_algebraic_round_trip(
            pt in 0.0f64..30.0,
            gt in -5.0f64..15.0,
            gr in -5.0f64..15.0,
            ls in 0.0f64..20.0,
            f in 100.0f64..6000.0,
            d in 0.01f64..100.0,
        ) {
            let params = LinkParams {
                tx_power_dbm: pt,
                tx_gain_dbi: gt,
                rx_gain_dbi: gr,
                system_loss_db: ls,
                carrier_freq_mhz: f,
                distance_km: d,
                rx_sensitivity_dbm: None,
            };
            let rx = received_power(&params).unwrap();
            let loss = fspl(d, f).unwrap();
            // rx + loss + L_s - G_t - G_r recovers P_t.
            prop_assert!((rx + loss + ls - gt - gr - pt).abs() < 1e-9);
        }

        #[test]
        fn max_range_round_trip_property(
            pt in 5.0f64..30.0,
            thr in -10.0f64..60.0,
            f in 100.0f64..6000.0,
        ) {
            let params = LinkParams {
                tx_power_dbm: pt,
                carrier_freq_mhz: f,
                rx_sensitivity_dbm: Some(-120.0),
                ..LinkParams::default()
            };
            let phy = PhyConfig::default();
            let range = max_range(&params, &phy, thr).unwrap();
            let at_range = LinkParams { distance_km: range, ..params.clone() };
            let margin = link_margin(received_power(&at_range).unwrap(), -120.0);
            prop_assert!((margin - thr).abs() < 0.01);
        }
    }
}
