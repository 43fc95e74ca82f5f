//! Python bindings for the voice-link toolkit.
//!
//! Exposes the link-budget chain, airtime math, packet pipeline, energy
//! model, and scenario runner as a flat function module. Scalar in, scalar
//! out where possible; structured results cross the boundary as dicts or
//! JSON strings so Python stays schema-compatible with the CLI outputs.
//!
//! Usage from Python:
//!
//!     import taclink_py as tl
//!     tl.link_margin_db(distance_km=1.5, freq_mhz=868.0, tx_dbm=17.0,
//!                       tx_gain_dbi=2.0, rx_gain_dbi=2.0, loss_db=5.0,
//!                       sensitivity_dbm=-120.0)   # -> 41.2678...
//!     report = json.loads(tl.run_scenario_json(tl.default_scenario_json()))

// The #[pyfunction] expansion inserts a conversion clippy 1.97 flags as
// useless on PyResult-returning functions.
#![allow(clippy::useless_conversion)]

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use taclink_core::energy::{average_power, battery_life_hours as core_battery_life, PowerProfile};
use taclink_core::linkbudget::{
    fspl, link_margin, max_range, received_power, sensitivity_for, LinkParams,
};
use taclink_core::phy::{
    effective_bitrate, symbol_duration_ms, time_on_air, PhyConfig,
};
use taclink_core::pipeline::{
    crc16, decrypt_packet, encrypt_packet, parse, serialize, AudioFrame, CodecProfile, SessionKey,
};
use taclink_core::sim::{run, Scenario};
use taclink_core::Error;

/// Configuration mistakes surface as ValueError, failures during execution
/// as RuntimeError, matching the CLI's exit-2/exit-1 split.
fn to_py_err(e: Error) -> PyErr {
    if e.is_config_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn link_params(
    distance_km: f64,
    freq_mhz: f64,
    tx_dbm: f64,
    tx_gain_dbi: f64,
    rx_gain_dbi: f64,
    loss_db: f64,
    sensitivity_dbm: Option<f64>,
) -> LinkParams {
    LinkParams {
        tx_power_dbm: tx_dbm,
        tx_gain_dbi,
        rx_gain_dbi,
        system_loss_db: loss_db,
        carrier_freq_mhz: freq_mhz,
        distance_km,
        rx_sensitivity_dbm: sensitivity_dbm,
    }
}

fn phy_config(sf: u8, bw_hz: u32, cr_denominator: u8) -> PhyConfig {
    PhyConfig {
        spreading_factor: sf,
        bandwidth_hz: bw_hz,
        coding_rate_denominator: cr_denominator,
        ..PhyConfig::default()
    }
}

/// Free-space path loss in dB at `distance_km` and `freq_mhz`.
#[pyfunction]
fn fspl_db(distance_km: f64, freq_mhz: f64) -> PyResult<f64> {
    fspl(distance_km, freq_mhz).map_err(to_py_err)
}

/// Power at the receiver input in dBm.
#[pyfunction]
#[pyo3(signature = (distance_km, freq_mhz, tx_dbm, tx_gain_dbi=0.0, rx_gain_dbi=0.0, loss_db=0.0))]
fn received_power_dbm(
    distance_km: f64,
    freq_mhz: f64,
    tx_dbm: f64,
    tx_gain_dbi: f64,
    rx_gain_dbi: f64,
    loss_db: f64,
) -> PyResult<f64> {
    received_power(&link_params(
        distance_km,
        freq_mhz,
        tx_dbm,
        tx_gain_dbi,
        rx_gain_dbi,
        loss_db,
        None,
    ))
    .map_err(to_py_err)
}

/// Link margin in dB against an explicit sensitivity.
#[pyfunction]
#[pyo3(signature = (distance_km, freq_mhz, tx_dbm, tx_gain_dbi=0.0, rx_gain_dbi=0.0, loss_db=0.0, sensitivity_dbm=-120.0))]
#[allow(clippy::too_many_arguments)]
fn link_margin_db(
    distance_km: f64,
    freq_mhz: f64,
    tx_dbm: f64,
    tx_gain_dbi: f64,
    rx_gain_dbi: f64,
    loss_db: f64,
    sensitivity_dbm: f64,
) -> PyResult<f64> {
    let rx = received_power(&link_params(
        distance_km,
        freq_mhz,
        tx_dbm,
        tx_gain_dbi,
        rx_gain_dbi,
        loss_db,
        None,
    ))
    .map_err(to_py_err)?;
    Ok(link_margin(rx, sensitivity_dbm))
}

/// Largest distance in km at which the margin still meets `threshold_db`.
#[pyfunction]
#[pyo3(signature = (freq_mhz, tx_dbm, tx_gain_dbi=0.0, rx_gain_dbi=0.0, loss_db=0.0, sensitivity_dbm=-120.0, threshold_db=0.0))]
#[allow(clippy::too_many_arguments)]
fn max_range_km(
    freq_mhz: f64,
    tx_dbm: f64,
    tx_gain_dbi: f64,
    rx_gain_dbi: f64,
    loss_db: f64,
    sensitivity_dbm: f64,
    threshold_db: f64,
) -> PyResult<f64> {
    max_range(
        &link_params(
            1.0,
            freq_mhz,
            tx_dbm,
            tx_gain_dbi,
            rx_gain_dbi,
            loss_db,
            Some(sensitivity_dbm),
        ),
        &PhyConfig::default(),
        threshold_db,
    )
    .map_err(to_py_err)
}

/// Tabulated receiver sensitivity in dBm for a spreading factor and
/// bandwidth.
#[pyfunction]
#[pyo3(signature = (sf, bw_hz=125_000))]
fn lora_sensitivity_dbm(sf: u8, bw_hz: u32) -> PyResult<f64> {
    sensitivity_for(&phy_config(sf, bw_hz, 5)).map_err(to_py_err)
}

/// LoRa symbol duration `2^SF / BW` in ms.
#[pyfunction]
#[pyo3(signature = (sf, bw_hz=125_000))]
fn symbol_time_ms(sf: u8, bw_hz: u32) -> PyResult<f64> {
    symbol_duration_ms(&phy_config(sf, bw_hz, 5)).map_err(to_py_err)
}

/// Frame airtime breakdown as a dict: symbol_time_ms, preamble_ms,
/// payload_symbols, payload_ms, total_ms.
#[pyfunction]
#[pyo3(signature = (sf, bw_hz, cr_denominator, payload_bytes))]
fn airtime_ms(
    py: Python<'_>,
    sf: u8,
    bw_hz: u32,
    cr_denominator: u8,
    payload_bytes: usize,
) -> PyResult<Py<PyDict>> {
    let b = time_on_air(&phy_config(sf, bw_hz, cr_denominator), payload_bytes)
        .map_err(to_py_err)?;
    let dict = PyDict::new_bound(py);
    dict.set_item("symbol_time_ms", b.symbol_time_ms)?;
    dict.set_item("preamble_ms", b.preamble_ms)?;
    dict.set_item("payload_symbols", b.payload_symbols)?;
    dict.set_item("payload_ms", b.payload_ms)?;
    dict.set_item("total_ms", b.total_ms)?;
    Ok(dict.into())
}

/// Effective PHY bitrate `SF * (BW / 2^SF) * (4 / CR_denom)` in bps.
#[pyfunction]
#[pyo3(signature = (sf, bw_hz, cr_denominator=5))]
fn effective_bitrate_bps(sf: u8, bw_hz: u32, cr_denominator: u8) -> PyResult<f64> {
    effective_bitrate(&phy_config(sf, bw_hz, cr_denominator)).map_err(to_py_err)
}

/// CRC-16/CCITT-FALSE over `data`.
#[pyfunction]
fn crc16_ccitt(data: &[u8]) -> u16 {
    crc16(data)
}

/// Encrypts `payload` into one serialized wire packet.
#[pyfunction]
#[pyo3(signature = (key_hex, payload, seq=0, salt=0))]
fn encrypt_voice_packet(
    py: Python<'_>,
    key_hex: &str,
    payload: &[u8],
    seq: u16,
    salt: u64,
) -> PyResult<Py<PyBytes>> {
    let key = SessionKey::from_hex(key_hex, salt).map_err(to_py_err)?;
    let frame = AudioFrame {
        seq,
        duration_ms: CodecProfile::default().frame_ms,
        pcm_energy: 0.0,
        payload: payload.to_vec(),
    };
    let packet = encrypt_packet(&frame, &key).map_err(to_py_err)?;
    let wire = serialize(&packet).map_err(to_py_err)?;
    Ok(PyBytes::new_bound(py, &wire).into())
}

/// Parses and decrypts one wire packet, returning a dict with seq,
/// nonce (bytes), and payload (bytes). Raises RuntimeError on CRC mismatch.
#[pyfunction]
fn decrypt_voice_packet(py: Python<'_>, key_hex: &str, wire: &[u8]) -> PyResult<Py<PyDict>> {
    let key = SessionKey::from_hex(key_hex, 0).map_err(to_py_err)?;
    let packet = parse(wire).map_err(to_py_err)?;
    let frame = decrypt_packet(&packet, &key, &CodecProfile::default()).map_err(to_py_err)?;
    let dict = PyDict::new_bound(py);
    dict.set_item("seq", packet.seq)?;
    dict.set_item("nonce", PyBytes::new_bound(py, &packet.nonce))?;
    dict.set_item("payload", PyBytes::new_bound(py, &frame.payload))?;
    Ok(dict.into())
}

/// Two-state average power in mW at transmit duty cycle `duty_tx`.
#[pyfunction]
#[pyo3(signature = (duty_tx, p_tx_mw=700.0, p_listen_mw=450.0, p_sleep_mw=10.0))]
fn average_power_mw(
    duty_tx: f64,
    p_tx_mw: f64,
    p_listen_mw: f64,
    p_sleep_mw: f64,
) -> PyResult<f64> {
    let profile = PowerProfile {
        p_tx_mw,
        p_listen_mw,
        p_sleep_mw,
        ..PowerProfile::default()
    };
    average_power(duty_tx, &profile).map_err(to_py_err)
}

/// Endurance in hours for a battery of `capacity_mah` at `voltage_v`.
#[pyfunction]
#[pyo3(signature = (avg_power_mw, capacity_mah=2000.0, voltage_v=3.7))]
fn battery_life_hours(avg_power_mw: f64, capacity_mah: f64, voltage_v: f64) -> PyResult<f64> {
    let profile = PowerProfile {
        battery_capacity_mah: capacity_mah,
        battery_voltage_v: voltage_v,
        ..PowerProfile::default()
    };
    core_battery_life(avg_power_mw, &profile).map_err(to_py_err)
}

/// Runs one scenario (JSON string, schema_version 1) and returns the
/// report as a JSON string. Same schema as `taclink simulate`.
#[pyfunction]
fn run_scenario_json(scenario_json: &str) -> PyResult<String> {
    let scenario: Scenario = serde_json::from_str(scenario_json)
        .map_err(|e| PyValueError::new_err(format!("invalid scenario: {e}")))?;
    let sim = run(&scenario).map_err(to_py_err)?;
    serde_json::to_string(&sim.report)
        .map_err(|e| PyRuntimeError::new_err(format!("serializing report: {e}")))
}

/// The built-in default scenario as a JSON string.
#[pyfunction]
fn default_scenario_json() -> PyResult<String> {
    serde_json::to_string_pretty(&Scenario::default())
        .map_err(|e| PyRuntimeError::new_err(format!("serializing scenario: {e}")))
}

#[pymodule]
fn taclink_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(fspl_db, m)?)?;
    m.add_function(wrap_pyfunction!(received_power_dbm, m)?)?;
    m.add_function(wrap_pyfunction!(link_margin_db, m)?)?;
    m.add_function(wrap_pyfunction!(max_range_km, m)?)?;
    m.add_function(wrap_pyfunction!(lora_sensitivity_dbm, m)?)?;
    m.add_function(wrap_pyfunction!(symbol_time_ms, m)?)?;
    m.add_function(wrap_pyfunction!(airtime_ms, m)?)?;
    m.add_function(wrap_pyfunction!(effective_bitrate_bps, m)?)?;
    m.add_function(wrap_pyfunction!(crc16_ccitt, m)?)?;
    m.add_function(wrap_pyfunction!(encrypt_voice_packet, m)?)?;
    m.add_function(wrap_pyfunction!(decrypt_voice_packet, m)?)?;
    m.add_function(wrap_pyfunction!(average_power_mw, m)?)?;
    m.add_function(wrap_pyfunction!(battery_life_hours, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario_json, m)?)?;
    m.add_function(wrap_pyfunction!(default_scenario_json, m)?)?;
    Ok(())
}
