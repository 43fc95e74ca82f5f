//! LoRa physical-layer timing: symbol duration, time-on-air, and effective
//! bitrate as functions of the radio configuration.
//!
//! Airtime follows the standard published LoRa packet-duration expression
//! (see [`time_on_air`]); its constants are named below with their origin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// ---- Constants ----

/// Largest payload a single frame may carry; voice frames never fragment.
pub const MAX_FRAME_PAYLOAD_BYTES: usize = 255;

/// Symbol duration above which low-data-rate optimization engages, in ms.
/// Transceivers enable LDRO for SF11/SF12 at 125 kHz, where symbols exceed
/// this length and clock drift over a symbol becomes significant.
pub const LDRO_SYMBOL_TIME_MS: f64 = 16.0;

/// Sync-window overhead of the preamble, in symbols: the radio appends 4.25
/// symbols (2 sync word + 2.25 chirp quarter) after the programmed count.
pub const PREAMBLE_SYNC_SYMBOLS: f64 = 4.25;

/// Fixed payload-section floor: every frame spends at least 8 symbols on the
/// payload section regardless of length.
pub const PAYLOAD_SYMBOL_FLOOR: u32 = 8;

// Terms of the payload symbol-count numerator
//   8*PL - 4*SF + 28 + 16*CRC - 20*IH:
// 28 = 8 physical-header bits + 20 sync bits folded in by the standard
// expression, 16 = CRC field bits when the payload CRC is on, 20 = header
// bits removed again in implicit-header mode.
const HEADER_TERM_BITS: i64 = 28;
const CRC_TERM_BITS: i64 = 16;
const IMPLICIT_HEADER_SAVING_BITS: i64 = 20;

// ---- Domain types ----

/// LoRa radio knobs that determine timing and throughput.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhyConfig {
    /// Spreading factor, log2 of chips per symbol (7..=12).
    pub spreading_factor: u8,
    /// Channel bandwidth in Hz: 125000, 250000, or 500000.
    pub bandwidth_hz: u32,
    /// Coding-rate denominator 5..=8, meaning 4/5..4/8.
    pub coding_rate_denominator: u8,
    /// Programmed preamble length in symbols (before the 4.25 sync tail).
    #[serde(default = "default_preamble_symbols")]
    pub preamble_symbols: u16,
    /// True for the explicit (variable-length) physical header.
    #[serde(default = "default_true")]
    pub explicit_header: bool,
    /// True when the payload CRC field is transmitted.
    #[serde(default = "default_true")]
    pub crc_on: bool,
}

fn default_preamble_symbols() -> u16 {
    8
}

fn default_true() -> bool {
    true
}

impl Default for PhyConfig {
    /// SF7 at 125 kHz, CR 4/5, 8-symbol preamble, explicit header, CRC on:
    /// the most common sub-GHz configuration.
    fn default() -> Self {
        PhyConfig {
            spreading_factor: 7,
            bandwidth_hz: 125_000,
            coding_rate_denominator: 5,
            preamble_symbols: 8,
            explicit_header: true,
            crc_on: true,
        }
    }
}

impl PhyConfig {
    /// Checks the supported SF/bandwidth/coding-rate ranges.
    pub fn validate(&self) -> Result<()> {
        if !(7..=12).contains(&self.spreading_factor)
            || !matches!(self.bandwidth_hz, 125_000 | 250_000 | 500_000)
        {
            return Err(Error::UnsupportedRadioConfig {
                spreading_factor: self.spreading_factor,
                bandwidth_hz: self.bandwidth_hz,
            });
        }
        if !(5..=8).contains(&self.coding_rate_denominator) {
            return Err(Error::InvalidParameter {
                field: "coding_rate_denominator",
                reason: format!("must be 5..=8, got {}", self.coding_rate_denominator),
            });
        }
        Ok(())
    }

    /// Low-data-rate optimization state, derived rather than stored: on
    /// exactly when the symbol time exceeds [`LDRO_SYMBOL_TIME_MS`]
    /// (SF11/SF12 at 125 kHz).
    pub fn low_data_rate_optimize(&self) -> bool {
        (1u64 << self.spreading_factor) as f64 / self.bandwidth_hz as f64 * 1000.0
            > LDRO_SYMBOL_TIME_MS
    }
}

/// Airtime of one frame, split into its parts. `total_ms` is exactly
/// `preamble_ms + payload_ms`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AirtimeBreakdown {
    /// Duration of one symbol, ms.
    pub symbol_time_ms: f64,
    /// Preamble duration including the 4.25-symbol sync tail, ms.
    pub preamble_ms: f64,
    /// Symbol count of the payload section (>= 8).
    pub payload_symbols: u32,
    /// Payload-section duration, ms.
    pub payload_ms: f64,
    /// Whole-frame airtime, ms.
    pub total_ms: f64,
}

// ---- Operations ----

/// Symbol duration `2^SF / BW`, in ms.
pub fn symbol_duration_ms(phy: &PhyConfig) -> Result<f64> {
    phy.validate()?;
    Ok((1u64 << phy.spreading_factor) as f64 / phy.bandwidth_hz as f64 * 1000.0)
}

/// Symbol duration in integer microseconds. Exact for every supported
/// configuration: 2^SF * 1e6 is divisible by all three bandwidths once
/// SF >= 7.
pub fn symbol_duration_us(phy: &PhyConfig) -> Result<u64> {
    phy.validate()?;
    let num = (1u64 << phy.spreading_factor) * 1_000_000;
    debug_assert_eq!(num % phy.bandwidth_hz as u64, 0);
    Ok(num / phy.bandwidth_hz as u64)
}

/// Payload-section symbol count for the standard packet-duration expression:
/// `8 + max(ceil((8*PL - 4*SF + 28 + 16*CRC - 20*IH) / (4*(SF - 2*LDRO))) *
/// CR_denom, 0)`.
fn payload_symbols(phy: &PhyConfig, payload_bytes: usize) -> u32 {
    let sf = phy.spreading_factor as i64;
    let ldro = phy.low_data_rate_optimize() as i64;
    let numerator = 8 * payload_bytes as i64 - 4 * sf
        + HEADER_TERM_BITS
        + if phy.crc_on { CRC_TERM_BITS } else { 0 }
        - if phy.explicit_header { 0 } else { IMPLICIT_HEADER_SAVING_BITS };
    let denominator = 4 * (sf - 2 * ldro);
    let ceil_div = numerator.div_euclid(denominator)
        + (numerator.rem_euclid(denominator) != 0) as i64;
    let coded = (ceil_div * phy.coding_rate_denominator as i64).max(0);
    PAYLOAD_SYMBOL_FLOOR + coded as u32
}

/// Frame airtime for a payload of `payload_bytes`, split into preamble and
/// payload sections.
pub fn time_on_air(phy: &PhyConfig, payload_bytes: usize) -> Result<AirtimeBreakdown> {
    phy.validate()?;
    if payload_bytes > MAX_FRAME_PAYLOAD_BYTES {
        return Err(Error::PayloadTooLarge {
            len: payload_bytes,
            max: MAX_FRAME_PAYLOAD_BYTES,
        });
    }
    let symbol_time_ms = symbol_duration_ms(phy)?;
    let preamble_ms = (phy.preamble_symbols as f64 + PREAMBLE_SYNC_SYMBOLS) * symbol_time_ms;
    let n_payload = payload_symbols(phy, payload_bytes);
    let payload_ms = n_payload as f64 * symbol_time_ms;
    Ok(AirtimeBreakdown {
        symbol_time_ms,
        preamble_ms,
        payload_symbols: n_payload,
        payload_ms,
        total_ms: preamble_ms + payload_ms,
    })
}

/// Frame airtime in integer microseconds, exact. The preamble's quarter
/// symbol stays integral because every supported symbol time is a multiple
/// of 4 us.
pub fn time_on_air_us(phy: &PhyConfig, payload_bytes: usize) -> Result<u64> {
    phy.validate()?;
    if payload_bytes > MAX_FRAME_PAYLOAD_BYTES {
        return Err(Error::PayloadTooLarge {
            len: payload_bytes,
            max: MAX_FRAME_PAYLOAD_BYTES,
        });
    }
    let t_sym = symbol_duration_us(phy)?;
    debug_assert_eq!(t_sym % 4, 0);
    let preamble_us = phy.preamble_symbols as u64 * t_sym + 17 * (t_sym / 4);
    let payload_us = payload_symbols(phy, payload_bytes) as u64 * t_sym;
    Ok(preamble_us + payload_us)
}

/// Effective physical bitrate `SF * (BW / 2^SF) * (4 / CR_denom)`, in bps.
pub fn effective_bitrate(phy: &PhyConfig) -> Result<f64> {
    phy.validate()?;
    Ok(phy.spreading_factor as f64 * (phy.bandwidth_hz as f64
        / (1u64 << phy.spreading_factor) as f64)
        * (4.0 / phy.coding_rate_denominator as f64))
}

// ==== Tests ====
