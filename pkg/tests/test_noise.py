from __future__ import annotations

import pytest

from defectvqe.circuit import Gate
from defectvqe.noise import load_calibration, noise_from_calibration


def test_casablanca_table_is_shipped_verbatim():
    cal = load_calibration("casablanca")
    assert len(cal.qubits) == 7
    assert len(cal.pairs) == 6
    assert all(q.t2_us > 0 and 0 < q.readout_err < 0.1 for q in cal.qubits.values())


def test_noise_model_uses_reported_rates_directly():
    cal = load_calibration("casablanca")
    noise = noise_from_calibration(cal, 4)
    assert noise.gate_error(Gate("X", (2,))) == cal.qubits[2].x_err
    assert noise.gate_error(Gate("CNOT", (0, 1))) == cal.cx_error(0, 1)
    assert noise.readout_pair(3) == (cal.qubits[3].readout_err,) * 2
    assert noise.gate_error(Gate("CNOT", (0, 3))) == pytest.approx(cal.mean_cx_error)
    assert noise.t1 is None


def test_damping_and_readout_switches():
    cal = load_calibration("casablanca")
    noise = noise_from_calibration(cal, 2, damping=True, readout=False)
    assert noise.t1 and noise.t2 and not noise.readout


def test_custom_calibration_file(tmp_path):
    path = tmp_path / "dev.toml"
    path.write_text(
        '[device]\nname = "toy"\n'
        "[[qubit]]\nindex = 0\nt1_us = 50.0\nt2_us = 40.0\nx_err = 0.001\nreadout_err = 0.02\n"
        "[[qubit]]\nindex = 1\nt1_us = 60.0\nt2_us = 70.0\nx_err = 0.002\nreadout_err = 0.03\n"
        "[[pair]]\nqubits = [0, 1]\ncx_err = 0.01\n"
    )
    noise = noise_from_calibration(load_calibration(path), 2)
    assert noise.gate_error(Gate("CNOT", (1, 0))) == 0.01


def test_layout_outside_device_rejected():
    with pytest.raises(ValueError):
        noise_from_calibration(load_calibration("casablanca"), 2, layout=[0, 9])
