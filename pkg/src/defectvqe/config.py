"""Run configuration: a single TOML file, dotted-key overrides and validation.

Schema (every key optional unless noted)::

    [run]
    mode = "vqe"                  # fci | vqe | scan | qse | zne  (required)
    output = "out"
    seed = 0
    figures = true
    workers = 1

    [hamiltonian]
    fixture = "triplet-nv-shape"  # or: fcidump = "path/to/FCIDUMP"
    electrons = 4                 # defaults to the Hamiltonian's NELEC
    sz = 0.0
    reference = [0, 1, 3, 5]      # occupied spin orbitals (up block first)

    [mapping]
    kind = "parity"               # parity | jordan_wigner
    taper = true
    sector = [1, 1]               # checked against (electrons, sz) when given

    [ansatz]
    spin_conserving = true
    symmetry_filter = true
    merge = true

    [noise]
    preset = "none"               # none | casablanca | path to a calibration TOML
    damping = false
    readout = true

    [estimation]
    shots = 8192                  # 0 means exact expectation values
    post_select = true
    readout_mitigation = "none"   # none | table | calibrated
    calibration_shots = 8192
    calibration_mode = "product"  # product | full

    [optimizer]                   # fields of OptimizerConfig
    kind = "spsa"

    [scan]
    start = 0.0
    stop = 3.141592653589793
    points = 25

    [zne]
    replications = [1, 2, 3, 4, 5]
    repetitions = 50
    fit = "linear"                # linear | quadratic | exponential
    theta = []                    # empty: noiseless optimum

    [qse]
    reference = "exact"           # exact | vqe
    s_threshold = 0.0             # 0 picks 1e-8 noiseless, 1e-3 noisy
    repetitions = 10
    extrapolations = ["linear", "quadratic", "exponential"]
    degeneracy_tol = 1e-6
"""

from __future__ import annotations

import copy
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .fixtures import FIXTURES
from .solvers import OptimizerConfig

__all__ = ["ConfigError", "RunConfig", "DEFAULTS", "load_config", "apply_overrides", "parse_override"]

MODES = ("fci", "vqe", "scan", "qse", "zne")
FITS = ("linear", "quadratic", "exponential")

DEFAULTS: dict[str, dict[str, Any]] = {
    "run": {"mode": None, "output": "out", "seed": 0, "figures": True, "workers": 1},
    "hamiltonian": {"fixture": None, "fcidump": None, "electrons": None, "sz": 0.0, "reference": None},
    "mapping": {"kind": "parity", "taper": True, "sector": None},
    "ansatz": {"spin_conserving": True, "symmetry_filter": True, "merge": True},
    "noise": {"preset": "none", "damping": False, "readout": True},
    "estimation": {
        "shots": 8192, "post_select": True, "readout_mitigation": "none",
        "calibration_shots": 8192, "calibration_mode": "product",
    },
    "optimizer": {
        "kind": "spsa", "max_iterations": 200, "a": 0.2, "c": 0.1, "alpha": 0.602, "gamma": 0.101,
        "A": 0.0, "tail": 10, "tolerance": 1e-6, "calibrate": False, "target_step": 0.2,
        "calibration_samples": 10, "theta0": None,
    },
    "scan": {"start": 0.0, "stop": 3.141592653589793, "points": 25},
    "zne": {"replications": [1, 2, 3, 4, 5], "repetitions": 50, "fit": "linear", "theta": None},
    "qse": {
        "reference": "exact", "s_threshold": 0.0, "repetitions": 10,
        "extrapolations": ["linear", "quadratic", "exponential"], "degeneracy_tol": 1e-6,
    },
}


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` holds ``(key, message)`` pairs."""

    def __init__(self, problems: Iterable[tuple[str, str]]) -> None:
        self.problems = list(problems)
        super().__init__("; ".join(f"{k}: {m}" for k, m in self.problems))

    def as_json(self) -> str:
        return json.dumps({"errors": [{"key": k, "message": m} for k, m in self.problems]}, indent=2)


@dataclass
class RunConfig:
    """Fully resolved configuration, sections as plain dictionaries."""

    data: dict[str, dict[str, Any]]
    base_dir: Path = field(default_factory=Path.cwd)

    def __getitem__(self, section: str) -> dict[str, Any]:
        return self.data[section]

    @property
    def mode(self) -> str:
        return self.data["run"]["mode"]

    @property
    def seed(self) -> int:
        return int(self.data["run"]["seed"])

    @property
    def output(self) -> Path:
        return self.resolve_path(self.data["run"]["output"])

    def resolve_path(self, value: str | Path) -> Path:
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    def optimizer(self) -> OptimizerConfig:
        opt = {k: v for k, v in self.data["optimizer"].items() if k != "theta0"}
        return OptimizerConfig(seed=self.seed, **opt)

    def to_dict(self) -> dict[str, dict[str, Any]]:
        return copy.deepcopy(self.data)

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path | None = None) -> "RunConfig":
        problems: list[tuple[str, str]] = []
        data = copy.deepcopy(DEFAULTS)
        for section, values in raw.items():
            if section not in data:
                problems.append((section, "unknown section"))
                continue
            if not isinstance(values, dict):
                problems.append((section, "must be a table"))
                continue
            for key, value in values.items():
                if key not in data[section]:
                    problems.append((f"{section}.{key}", "unknown key"))
                else:
                    data[section][key] = value
        cfg = cls(data, base_dir or Path.cwd())
        problems.extend(_validate(cfg))
        if problems:
            raise ConfigError(problems)
        return cfg


def _is_int(v: Any) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_number(v: Any) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _validate(cfg: RunConfig) -> list[tuple[str, str]]:
    d = cfg.data
    bad: list[tuple[str, str]] = []

    def check(cond: bool, key: str, msg: str) -> None:
        if not cond:
            bad.append((key, msg))

    run = d["run"]
    check(run["mode"] in MODES, "run.mode", f"must be one of {', '.join(MODES)}")
    check(_is_int(run["seed"]) and run["seed"] >= 0, "run.seed", "must be a non-negative integer")
    check(isinstance(run["figures"], bool), "run.figures", "must be a boolean")
    check(_is_int(run["workers"]) and run["workers"] >= 1, "run.workers", "must be a positive integer")
    check(isinstance(run["output"], str) and run["output"] != "", "run.output", "must be a non-empty path")

    ham = d["hamiltonian"]
    if (ham["fixture"] is None) == (ham["fcidump"] is None):
        bad.append(("hamiltonian", "exactly one of fixture or fcidump is required"))
    elif ham["fixture"] is not None:
        check(ham["fixture"] in FIXTURES, "hamiltonian.fixture", f"unknown fixture; known: {', '.join(FIXTURES)}")
    else:
        check(isinstance(ham["fcidump"], str) and cfg.resolve_path(ham["fcidump"]).is_file(),
              "hamiltonian.fcidump", "file does not exist")
    check(ham["electrons"] is None or (_is_int(ham["electrons"]) and ham["electrons"] > 0),
          "hamiltonian.electrons", "must be a positive integer")
    check(_is_number(ham["sz"]) and float(ham["sz"]) * 2 == round(float(ham["sz"]) * 2),
          "hamiltonian.sz", "must be a multiple of 1/2")
    ref = ham["reference"]
    check(ref is None or (isinstance(ref, list) and all(_is_int(m) and m >= 0 for m in ref)
                          and len(set(ref)) == len(ref)),
          "hamiltonian.reference", "must be a list of distinct spin-orbital indices")

    mp = d["mapping"]
    check(mp["kind"] in ("parity", "jordan_wigner"), "mapping.kind", "must be parity or jordan_wigner")
    check(isinstance(mp["taper"], bool), "mapping.taper", "must be a boolean")
    check(not (mp["taper"] and mp["kind"] != "parity"), "mapping.taper", "tapering requires the parity mapping")
    check(mp["sector"] is None or (isinstance(mp["sector"], list) and len(mp["sector"]) == 2
                                   and all(v in (1, -1) for v in mp["sector"])),
          "mapping.sector", "must be two entries from {+1, -1}")

    for key in ("spin_conserving", "symmetry_filter", "merge"):
        check(isinstance(d["ansatz"][key], bool), f"ansatz.{key}", "must be a boolean")

    nz = d["noise"]
    preset = nz["preset"]
    if preset not in ("none", "casablanca"):
        check(isinstance(preset, str) and cfg.resolve_path(preset).is_file(), "noise.preset",
              "must be none, casablanca or an existing calibration file")
    check(isinstance(nz["damping"], bool), "noise.damping", "must be a boolean")
    check(isinstance(nz["readout"], bool), "noise.readout", "must be a boolean")

    est = d["estimation"]
    check(_is_int(est["shots"]) and est["shots"] >= 0, "estimation.shots", "must be a non-negative integer")
    check(isinstance(est["post_select"], bool), "estimation.post_select", "must be a boolean")
    check(est["readout_mitigation"] in ("none", "table", "calibrated"), "estimation.readout_mitigation",
          "must be none, table or calibrated")
    check(_is_int(est["calibration_shots"]) and est["calibration_shots"] > 0, "estimation.calibration_shots",
          "must be a positive integer")
    check(est["calibration_mode"] in ("product", "full"), "estimation.calibration_mode", "must be product or full")

    try:
        cfg.optimizer()
    except (TypeError, ValueError) as exc:
        bad.append(("optimizer", str(exc)))
    th0 = d["optimizer"]["theta0"]
    check(th0 is None or (isinstance(th0, list) and all(_is_number(v) for v in th0)),
          "optimizer.theta0", "must be a list of numbers")

    sc = d["scan"]
    check(_is_number(sc["start"]) and _is_number(sc["stop"]), "scan", "start and stop must be numbers")
    check(_is_int(sc["points"]) and sc["points"] >= 2, "scan.points", "must be an integer >= 2")

    z = d["zne"]
    reps = z["replications"]
    check(isinstance(reps, list) and len(reps) >= 1 and reps == list(range(1, len(reps) + 1)),
          "zne.replications", "must be [1, 2, ..., n_max]")
    if run["mode"] == "zne":
        check(isinstance(reps, list) and len(reps) >= 2, "zne.replications", "zne mode needs n_max >= 2")
    check(_is_int(z["repetitions"]) and z["repetitions"] >= 1, "zne.repetitions", "must be a positive integer")
    check(z["fit"] in FITS, "zne.fit", f"must be one of {', '.join(FITS)}")
    check(z["theta"] is None or (isinstance(z["theta"], list) and all(_is_number(v) for v in z["theta"])),
          "zne.theta", "must be a list of numbers")

    q = d["qse"]
    check(q["reference"] in ("exact", "vqe"), "qse.reference", "must be exact or vqe")
    check(_is_number(q["s_threshold"]) and q["s_threshold"] >= 0, "qse.s_threshold", "must be >= 0")
    check(_is_int(q["repetitions"]) and q["repetitions"] >= 1, "qse.repetitions", "must be a positive integer")
    check(isinstance(q["extrapolations"], list) and all(k in FITS for k in q["extrapolations"]),
          "qse.extrapolations", f"entries must be from {', '.join(FITS)}")
    check(_is_number(q["degeneracy_tol"]) and q["degeneracy_tol"] > 0, "qse.degeneracy_tol", "must be > 0")
    if run["mode"] in ("vqe", "scan", "zne", "qse") and est["shots"] > 0 and est["shots"] < 2:
        bad.append(("estimation.shots", "sampling needs at least two shots"))
    return bad


def parse_override(text: str) -> tuple[str, str, Any]:
    """``section.key=value`` with ``value`` read as a TOML value (bare words become strings)."""
    if "=" not in text:
        raise ConfigError([(text, "override must look like section.key=value")])
    lhs, rhs = text.split("=", 1)
    parts = lhs.strip().split(".")
    if len(parts) != 2 or not all(parts):
        raise ConfigError([(lhs, "override key must be section.key")])
    try:
        value = tomllib.loads(f"v = {rhs.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = rhs.strip()
    return parts[0], parts[1], value


def apply_overrides(raw: dict, overrides: Iterable[str]) -> dict:
    raw = copy.deepcopy(raw)
    for text in overrides:
        section, key, value = parse_override(text)
        raw.setdefault(section, {})[key] = value
    return raw


def load_config(path: str | Path, overrides: Iterable[str] = ()) -> RunConfig:
    """Read, override and validate a TOML run file; relative paths resolve against its directory."""
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError([(str(path), "config file does not exist")]) from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([(str(path), f"TOML syntax error: {exc}")]) from None
    return RunConfig.from_dict(apply_overrides(raw, overrides), path.resolve().parent)
