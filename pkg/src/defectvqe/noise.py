"""Device calibration files and their conversion into :class:`NoiseModel`."""

from __future__ import annotations

import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .circuit import NoiseModel

__all__ = ["QubitCalibration", "DeviceCalibration", "load_calibration", "noise_from_calibration", "PRESETS"]

PRESETS = ("casablanca",)


@dataclass(frozen=True)
class QubitCalibration:
    index: int
    t1_us: float
    t2_us: float
    x_err: float
    readout_err: float


@dataclass(frozen=True)
class DeviceCalibration:
    name: str
    qubits: dict[int, QubitCalibration]
    pairs: dict[tuple[int, int], float]

    def cx_error(self, a: int, b: int) -> float | None:
        return self.pairs.get((a, b), self.pairs.get((b, a)))

    @property
    def mean_cx_error(self) -> float:
        return sum(self.pairs.values()) / len(self.pairs)


def _parse(data: dict, source: str) -> DeviceCalibration:
    try:
        qubits = {}
        for row in data["qubit"]:
            q = QubitCalibration(int(row["index"]), float(row["t1_us"]), float(row["t2_us"]),
                                 float(row["x_err"]), float(row["readout_err"]))
            qubits[q.index] = q
        pairs = {}
        for row in data.get("pair", []):
            a, b = (int(v) for v in row["qubits"])
            pairs[(a, b)] = float(row["cx_err"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"{source}: malformed calibration ({exc})") from None
    if not pairs:
        raise ValueError(f"{source}: calibration lists no qubit pairs")
    name = data.get("device", {}).get("name", Path(source).stem)
    return DeviceCalibration(name, qubits, pairs)


def load_calibration(source: str | Path) -> DeviceCalibration:
    """Read a calibration TOML file, or a preset by name."""
    if str(source) in PRESETS:
        text = resources.files("defectvqe.data").joinpath(f"{source}.toml").read_text("utf-8")
        return _parse(tomllib.loads(text), str(source))
    path = Path(source)
    with open(path, "rb") as fh:
        return _parse(tomllib.load(fh), str(path))


def noise_from_calibration(
    cal: DeviceCalibration,
    n_qubits: int,
    layout: Sequence[int] | None = None,
    *,
    damping: bool = False,
    readout: bool = True,
    seed: int | None = None,
) -> NoiseModel:
    """Noise model for ``n_qubits`` logical qubits placed on ``layout``.

    Logical qubit ``i`` sits on physical qubit ``layout[i]`` (identity by
    default).  Error rates are used directly as depolarizing / flip
    probabilities; CNOTs between uncoupled physical qubits get the mean CX
    error (no routing is simulated).
    """
    layout = list(range(n_qubits)) if layout is None else [int(v) for v in layout]
    if len(layout) != n_qubits or len(set(layout)) != n_qubits:
        raise ValueError("layout must list one distinct physical qubit per logical qubit")
    missing = [p for p in layout if p not in cal.qubits]
    if missing:
        raise ValueError(f"physical qubits {missing} are not in the calibration")
    p1 = {i: cal.qubits[p].x_err for i, p in enumerate(layout)}
    p2 = {}
    for i in range(n_qubits):
        for j in range(i + 1, n_qubits):
            v = cal.cx_error(layout[i], layout[j])
            if v is not None:
                p2[(i, j)] = v
    ro = {i: (cal.qubits[p].readout_err,) * 2 for i, p in enumerate(layout)} if readout else None
    t1 = t2 = None
    if damping:
        t1 = {i: cal.qubits[p].t1_us for i, p in enumerate(layout)}
        t2 = {i: cal.qubits[p].t2_us for i, p in enumerate(layout)}
    return NoiseModel(p1=p1, p2=p2, readout=ro, t1=t1, t2=t2, default_p2=cal.mean_cx_error, seed=seed)
