#!/usr/bin/env python3
"""Smoke test for the taclink_py extension module.

Stages the compiled cdylib under the importable name, then checks one
frozen value per exposed operation and a determinism run of the simulator.

Build the extension first:

    cargo build -p taclink-py --release

then run:

    python3 python/smoke_test.py
"""

import json
import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent


def stage_module(tmp: Path) -> None:
    candidates = [
        REPO_ROOT / "target" / "release" / "libtaclink_py.so",
        REPO_ROOT / "target" / "debug" / "libtaclink_py.so",
    ]
    for built in candidates:
        if built.exists():
            shutil.copy2(built, tmp / "taclink_py.so")
            return
    sys.exit("libtaclink_py.so not found; run `cargo build -p taclink-py` first")


def approx(actual: float, expected: float, tol: float = 1e-9) -> None:
    if not math.isclose(actual, expected, rel_tol=0.0, abs_tol=tol):
        raise AssertionError(f"expected {expected}, got {actual} (tol {tol})")


def main() -> None:
    with tempfile.TemporaryDirectory() as tmpdir:
        stage_module(Path(tmpdir))
        sys.path.insert(0, tmpdir)
        import taclink_py as tl

        # Link budget chain at the reference operating point.
        approx(tl.fspl_db(1.5, 868.0), 94.73221968464347, 1e-9)
        approx(
            tl.received_power_dbm(1.5, 868.0, 17.0, tx_gain_dbi=2.0,
                                  rx_gain_dbi=2.0, loss_db=5.0),
            -78.73221968464347, 1e-9,
        )
        margin = tl.link_margin_db(1.5, 868.0, 17.0, tx_gain_dbi=2.0,
                                   rx_gain_dbi=2.0, loss_db=5.0,
                                   sensitivity_dbm=-120.0)
        approx(margin, 41.26778031535653, 1e-9)
        range_km = tl.max_range_km(868.0, 17.0, tx_gain_dbi=2.0,
                                   rx_gain_dbi=2.0, loss_db=5.0,
                                   sensitivity_dbm=-120.0,
                                   threshold_db=margin)
        approx(range_km, 1.5, 1e-6)
        approx(tl.lora_sensitivity_dbm(7), -123.0, 1e-12)
        approx(tl.lora_sensitivity_dbm(12, bw_hz=125_000), -137.0, 1e-12)

        # Airtime and rate.
        approx(tl.symbol_time_ms(7), 1.024, 1e-12)
        breakdown = tl.airtime_ms(7, 125_000, 5, 30)
        approx(breakdown["total_ms"], 71.936, 1e-9)
        assert breakdown["payload_symbols"] == 58
        approx(tl.effective_bitrate_bps(7, 125_000, 5), 5468.75, 1e-9)

        # Bad configuration surfaces as ValueError.
        try:
            tl.airtime_ms(13, 125_000, 5, 30)
        except ValueError:
            pass
        else:
            raise AssertionError("SF13 should raise ValueError")

        # CRC and the packet pipeline.
        assert tl.crc16_ccitt(b"123456789") == 0x29B1
        key = "000102030405060708090a0b0c0d0e0f"
        wire = tl.encrypt_voice_packet(key, b"voice payload", seq=3, salt=9)
        assert len(wire) == 18 + len(b"voice payload")
        opened = tl.decrypt_voice_packet(key, wire)
        assert opened["payload"] == b"voice payload"
        assert opened["seq"] == 3

        corrupted = bytearray(wire)
        corrupted[-1] ^= 0x01
        try:
            tl.decrypt_voice_packet(key, bytes(corrupted))
        except RuntimeError:
            pass
        else:
            raise AssertionError("corrupted packet should raise RuntimeError")

        # Energy model.
        approx(tl.average_power_mw(0.05, p_tx_mw=400.0, p_listen_mw=40.0,
                                   p_sleep_mw=5.0), 24.75, 1e-9)
        approx(tl.battery_life_hours(24.75), 7400.0 / 24.75, 1e-9)

        # Simulator: default scenario, deterministic across calls.
        scenario = tl.default_scenario_json()
        report_a = tl.run_scenario_json(scenario)
        report_b = tl.run_scenario_json(scenario)
        assert report_a == report_b, "same scenario must reproduce byte-identically"
        report = json.loads(report_a)
        assert report["packets_sent"] == report["packets_delivered"] > 0
        approx(report["latency_p50_ms"], 117.176, 1e-9)

        print(f"taclink_py {tl.__version__}: all smoke checks passed")


if __name__ == "__main__":
    main()
