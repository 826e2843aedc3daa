from __future__ import annotations

import json

import numpy as np
import pytest

from defectvqe.config import ConfigError, RunConfig
from defectvqe.fci import solve_fci
from defectvqe.fixtures import FIXTURES, build_fixture
from defectvqe.pipeline import prepare_problem, run


def config(tmp_path, mode, name="out", **sections):
    raw = {"run": {"mode": mode, "output": str(tmp_path / name), "figures": False},
           "hamiltonian": {"fixture": "triplet-nv-shape"}}
    for section, values in sections.items():
        raw.setdefault(section, {}).update(values)
    return RunConfig.from_dict(raw, tmp_path)


def report(result, name):
    return json.loads(next(p for p in result.files if p.name == name).read_text())


@pytest.fixture(scope="module")
def nv_fci():
    fx = build_fixture("triplet-nv-shape")
    return solve_fci(fx.hamiltonian, sz=fx.sz).energies


def test_fci_mode(tmp_path, nv_fci):
    res = run(config(tmp_path, "fci"))
    assert np.allclose(report(res, "report.json")["results"]["energies_eV"], nv_fci, atol=1e-12)
    assert (tmp_path / "out" / "spectrum.csv").is_file()
    assert (tmp_path / "out" / "run_info.json").is_file()


def test_noiseless_vqe_matches_fci(tmp_path, nv_fci):
    res = run(config(tmp_path, "vqe", estimation={"shots": 0}, optimizer={"kind": "nelder_mead", "tolerance": 1e-10}))
    out = report(res, "summary.json")["results"]
    assert out["energy_eV"] == pytest.approx(nv_fci[0], abs=1e-8)
    assert out["circuit_depth"] == 6


def test_noiseless_scan_minimum_at_quarter_turn(tmp_path, nv_fci):
    res = run(config(tmp_path, "scan", estimation={"shots": 0}, scan={"points": 13}))
    out = report(res, "report.json")["results"]
    assert out["theta_min_rad"] == pytest.approx(np.pi / 2)
    assert min(out["energy_eV"]) == pytest.approx(nv_fci[0], abs=1e-10)


def test_noiseless_qse_matches_fci(tmp_path, nv_fci):
    res = run(config(tmp_path, "qse", estimation={"shots": 0}))
    out = report(res, "qse.json")["results"]
    col = out["columns"]["none"]
    assert out["replications"] == [1]
    assert np.allclose(col["energies_eV"], nv_fci, atol=1e-8)
    assert all(s["splitting_eV"] < 1e-8 for s in col["degeneracy_splitting"])
    assert "needs at least" in out["columns"]["linear"]["notes"][0]


def test_noisy_qse_reports_gaps_and_splittings(tmp_path):
    res = run(config(tmp_path, "qse", noise={"preset": "casablanca"},
                     estimation={"shots": 2048, "readout_mitigation": "table"},
                     zne={"replications": [1, 2, 3]}, qse={"repetitions": 2, "extrapolations": ["linear"]}))
    out = report(res, "qse.json")["results"]
    for kind in ("none", "linear"):
        col = out["columns"][kind]
        assert np.isfinite(col["mean_abs_gap_error_eV"])
        assert len(col["degeneracy_splitting"]) == 3
    assert "H_re" in out["matrices"]["linear"]


def test_zne_mode(tmp_path):
    res = run(config(tmp_path, "zne", noise={"preset": "casablanca"}, estimation={"shots": 2048},
                     zne={"replications": [1, 2, 3], "repetitions": 3}))
    out = report(res, "zne.json")["results"]
    assert [p["n"] for p in out["points"]] == [1, 2, 3]
    assert out["fit_kind"] == "linear" and np.isfinite(out["zero_noise_sigma_eV"])


def test_noisy_vqe_smoke(tmp_path):
    res = run(config(tmp_path, "vqe", noise={"preset": "casablanca"}, estimation={"shots": 1024},
                     optimizer={"max_iterations": 5, "tail": 2}))
    out = report(res, "summary.json")["results"]
    assert len(out["theta"]) == 1 and np.isfinite(out["energy_eV"])


def test_figures_are_written(tmp_path):
    res = run(config(tmp_path, "fci", run={"figures": True}))
    assert any(p.suffix == ".png" for p in res.files)


@pytest.mark.parametrize("mode, extra", [
    ("scan", {"noise": {"preset": "casablanca"}, "estimation": {"shots": 512}, "scan": {"points": 4}}),
    ("zne", {"noise": {"preset": "casablanca"}, "estimation": {"shots": 512},
             "zne": {"replications": [1, 2], "repetitions": 2}}),
])
def test_reruns_are_byte_identical(tmp_path, mode, extra):
    extra = {**extra, "run": {"figures": True, "workers": 2}}
    first = {p.name: p.read_bytes() for p in run(config(tmp_path, mode, **extra)).files}
    second = {p.name: p.read_bytes() for p in run(config(tmp_path, mode, **extra)).files}
    assert first.keys() == second.keys()
    for name in first:
        if name != "run_info.json":
            assert first[name] == second[name], name


def test_inconsistent_sector_rejected(tmp_path):
    with pytest.raises(ConfigError):
        prepare_problem(config(tmp_path, "fci", mapping={"sector": [-1, -1]}))


@pytest.mark.parametrize("name", list(FIXTURES))
def test_prepare_problem_for_every_fixture(tmp_path, name):
    prob = prepare_problem(config(tmp_path, "fci", hamiltonian={"fixture": name}))
    assert prob.qubit_h.n_qubits == prob.spec.n_qubits
