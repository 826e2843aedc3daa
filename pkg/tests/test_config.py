from __future__ import annotations

import json

import pytest

from defectvqe.config import DEFAULTS, ConfigError, RunConfig, load_config, parse_override

NV = {"run": {"mode": "vqe"}, "hamiltonian": {"fixture": "triplet-nv-shape"}}


def keys(exc: ConfigError) -> set[str]:
    return {k for k, _ in exc.problems}


def test_defaults_fill_missing_keys():
    cfg = RunConfig.from_dict(NV)
    assert cfg["estimation"]["shots"] == 8192
    assert cfg["zne"]["replications"] == [1, 2, 3, 4, 5]
    assert set(cfg.to_dict()) == set(DEFAULTS)


@pytest.mark.parametrize("text, expected", [
    ("run.seed=7", ("run", "seed", 7)),
    ("zne.fit=quadratic", ("zne", "fit", "quadratic")),
    ("zne.replications=[1, 2, 3]", ("zne", "replications", [1, 2, 3])),
    ("estimation.post_select=false", ("estimation", "post_select", False)),
    ('run.output="a b"', ("run", "output", "a b")),
    ("hamiltonian.sz=0.5", ("hamiltonian", "sz", 0.5)),
])
def test_parse_override(text, expected):
    assert parse_override(text) == expected


@pytest.mark.parametrize("text", ["noequals", "a.b.c=1", ".x=1"])
def test_malformed_override(text):
    with pytest.raises(ConfigError):
        parse_override(text)


def test_overrides_applied_on_load(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('[run]\nmode = "vqe"\n[hamiltonian]\nfixture = "triplet-nv-shape"\n')
    cfg = load_config(p, ["run.seed=3", "optimizer.kind=nelder_mead"])
    assert cfg.seed == 3 and cfg.optimizer().kind == "nelder_mead"
    assert cfg.output == tmp_path / "out"


def test_unknown_keys_and_sections_are_rejected():
    with pytest.raises(ConfigError) as e:
        RunConfig.from_dict({**NV, "bogus": {}, "zne": {"fitt": "linear"}})
    assert {"bogus", "zne.fitt"} <= keys(e.value)


@pytest.mark.parametrize("section, key, value", [
    ("run", "mode", "train"),
    ("run", "seed", -1),
    ("run", "workers", 0),
    ("mapping", "kind", "bravyi_kitaev"),
    ("mapping", "sector", [1, 2]),
    ("estimation", "shots", 1),
    ("estimation", "readout_mitigation", "magic"),
    ("zne", "replications", [1, 3, 5]),
    ("zne", "fit", "cubic"),
    ("qse", "extrapolations", ["linear", "spline"]),
    ("hamiltonian", "sz", 0.3),
    ("hamiltonian", "fixture", "no-such-fixture"),
])
def test_invalid_values_are_reported(section, key, value):
    raw = {s: dict(v) for s, v in NV.items()}
    raw.setdefault(section, {})[key] = value
    with pytest.raises(ConfigError) as e:
        RunConfig.from_dict(raw)
    assert any(k.startswith(section) for k in keys(e.value))


def test_taper_requires_parity():
    with pytest.raises(ConfigError) as e:
        RunConfig.from_dict({**NV, "mapping": {"kind": "jordan_wigner"}})
    assert "mapping.taper" in keys(e.value)
    RunConfig.from_dict({**NV, "mapping": {"kind": "jordan_wigner", "taper": False}})


def test_hamiltonian_source_is_exclusive(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"run": {"mode": "fci"}})
    with pytest.raises(ConfigError) as e:
        RunConfig.from_dict({"run": {"mode": "fci"}, "hamiltonian": {"fcidump": "missing"}}, tmp_path)
    assert "hamiltonian.fcidump" in keys(e.value)


def test_all_problems_collected_and_serialized():
    with pytest.raises(ConfigError) as e:
        RunConfig.from_dict({"run": {"mode": "x", "seed": "y"}, "hamiltonian": {"fixture": "triplet-nv-shape"}})
    payload = json.loads(e.value.as_json())
    assert {d["key"] for d in payload["errors"]} >= {"run.mode", "run.seed"}


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("[run\n")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_shipped_configs_validate():
    from pathlib import Path

    paths = sorted((Path(__file__).parents[1] / "configs").glob("*.toml"))
    assert paths
    for p in paths:
        load_config(p)
