"""Energy estimation from grouped Pauli measurements, with electron-number post-selection."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .circuit import (
    Circuit,
    DensityState,
    NoiseModel,
    ShotTable,
    derive_rng,
    rotated_distribution,
    run,
    table_from_distribution,
)
from .mapping import MappingSpec, electron_counts
from .pauli import MeasurementGroup, PauliSum, group_commuting
from .readout import ConfusionMatrix, unfold

__all__ = [
    "EnergyEstimate",
    "EstimationError",
    "AllShotsDiscardedError",
    "EnergySampler",
    "ShotTable",
    "estimate_energy",
    "post_select",
    "scan_theta",
    "scan_csv",
    "DEFAULT_SHOTS",
]

DEFAULT_SHOTS = 8192


class EstimationError(RuntimeError):
    pass


class AllShotsDiscardedError(EstimationError):
    """Post-selection removed every shot of a group; the estimate is undefined."""


@dataclass
class EnergyEstimate:
    value: float
    std_error: float
    per_group: list[tuple[int, float, int]] = field(default_factory=list)
    discarded_fraction: float = 0.0

    def __post_init__(self) -> None:
        if self.std_error < 0:
            raise ValueError("std_error must be non-negative")


def post_select(table: ShotTable, spec: MappingSpec, n_target: int) -> ShotTable:
    """Drop outcomes whose decoded electron number differs from ``n_target``.

    Only valid on the diagonal group, where the measured bits are the
    encoded occupations.
    """
    if table.group is not None and not table.group.is_diagonal:
        raise EstimationError("post-selection needs the diagonal (I/Z) measurement group")
    counts_n = electron_counts(spec)
    kept = {k: v for k, v in table.counts.items() if counts_n[int(k, 2)] == n_target}
    removed = sum(table.counts.values()) - sum(kept.values())
    return ShotTable(table.group, kept, table.shots, table.discarded + removed)


def _sign_table(group: MeasurementGroup, n_qubits: int) -> np.ndarray:
    """``signs[m, k]`` = eigenvalue of member ``m`` on rotated outcome ``k``."""
    k = np.arange(1 << n_qubits)
    rows = []
    for p in group.members:
        masked = k & p.support
        parity = np.zeros_like(k)
        for j in range(n_qubits):
            parity ^= (masked >> j) & 1
        rows.append(1 - 2 * parity)
    return np.array(rows, dtype=float)


class EnergySampler:
    """Precomputed outcome distributions of one prepared state.

    The state is simulated once; every call to :meth:`sample` only draws new
    shots, so repetitions at fixed parameters are cheap.
    """

    def __init__(
        self,
        state: DensityState,
        h: PauliSum,
        groups: Sequence[MeasurementGroup] | None = None,
        noise: NoiseModel | None = None,
        spec: MappingSpec | None = None,
        n_target: int | None = None,
        post_select: bool = False,
        confusion: ConfusionMatrix | None = None,
    ) -> None:
        if h.n_qubits != state.n_qubits:
            raise ValueError("Hamiltonian and state have different qubit counts")
        if post_select and (spec is None or n_target is None):
            raise ValueError("post-selection needs a mapping spec and a target electron number")
        self.h = h
        self.constant = float(np.real(h.identity_coefficient()))
        non_identity = [(x, z) for x, z, _ in h.raw_items() if (x, z) != (0, 0)]
        self.groups = list(groups) if groups is not None else (group_commuting(h) if non_identity else [])
        covered = {(p.x, p.z) for g in self.groups for p in g.members}
        missing = [t for t in non_identity if t not in covered]
        if missing:
            raise EstimationError(f"{len(missing)} Hamiltonian terms are not covered by the measurement groups")
        n = state.n_qubits
        self.n_qubits = n
        self.post_select = post_select
        self.confusion = confusion
        self.spec = spec
        self.n_target = n_target
        self._keep = None
        if post_select:
            self._keep = electron_counts(spec) == n_target
        self._dist = []
        self._weights = []
        for g in self.groups:
            self._dist.append(rotated_distribution(state, g, noise))
            coeffs = np.array([float(np.real(h.coefficient(p))) for p in g.members])
            self._weights.append(coeffs @ _sign_table(g, n))  # per-outcome value

    def _mask(self, gid: int) -> np.ndarray | None:
        if self._keep is not None and self.groups[gid].is_diagonal:
            return self._keep
        return None

    def exact(self) -> EnergyEstimate:
        """Infinite-shot estimate (readout error and post-selection included)."""
        total = self.constant
        per_group = []
        discarded = 0.0
        for gid, (p, f) in enumerate(zip(self._dist, self._weights)):
            if self.confusion is not None:
                p = unfold(p, self.confusion, clip=False)
            mask = self._mask(gid)
            if mask is not None:
                kept = p[mask].sum()
                if kept <= 0:
                    raise AllShotsDiscardedError(f"group {gid}: no probability mass survives post-selection")
                discarded = 1.0 - kept
                p = np.where(mask, p, 0.0) / kept
            contrib = float(p @ f)
            per_group.append((gid, contrib, 0))
            total += contrib
        return EnergyEstimate(total, 0.0, per_group, discarded)

    def tables(self, shots: int, rng: np.random.Generator) -> list[ShotTable]:
        return [table_from_distribution(p, g, shots, rng) for p, g in zip(self._dist, self.groups)]

    def sample(self, shots: int, rng: np.random.Generator | int | None = None) -> EnergyEstimate:
        if shots <= 0:
            raise ValueError("shots must be positive")
        if not isinstance(rng, np.random.Generator):
            rng = np.random.default_rng(rng)
        total = self.constant
        var = 0.0
        per_group = []
        discarded = 0.0
        for gid, (p, f) in enumerate(zip(self._dist, self._weights)):
            counts = rng.multinomial(shots, p).astype(float)
            freq = counts / shots
            if self.confusion is not None:
                # quasi-probabilities stay unclipped: clipping biases every expectation value
                freq = unfold(freq, self.confusion, clip=False)
            mask = self._mask(gid)
            kept_shots = float(shots)
            if mask is not None:
                kept = freq[mask].sum()
                if kept <= 0:
                    raise AllShotsDiscardedError(f"group {gid}: post-selection discarded all {shots} shots")
                discarded = 1.0 - kept
                kept_shots = kept * shots
                freq = np.where(mask, freq, 0.0) / kept
            mean = float(freq @ f)
            second = float(freq @ (f * f))
            if kept_shots > 1:
                var += max(second - mean * mean, 0.0) / (kept_shots - 1)
            per_group.append((gid, mean, int(round(kept_shots))))
            total += mean
        return EnergyEstimate(total, float(np.sqrt(var)), per_group, discarded)


def estimate_energy(
    circuit: Circuit | DensityState,
    h: PauliSum,
    groups: Sequence[MeasurementGroup] | None = None,
    shots: int | None = DEFAULT_SHOTS,
    noise: NoiseModel | None = None,
    post_select: bool = False,
    n_target: int | None = None,
    spec: MappingSpec | None = None,
    values: Mapping[str, float] | None = None,
    rng: np.random.Generator | int | None = None,
    confusion: ConfusionMatrix | None = None,
) -> EnergyEstimate:
    """Estimate ``<H>`` on a circuit's output (``shots=None`` gives the exact value).

    One execution per measurement group; with ``post_select`` the diagonal
    group is filtered on the decoded electron number before its terms are
    averaged.
    """
    if len(h) == 0 or all((x, z) == (0, 0) for x, z, _ in h.raw_items()):
        return EnergyEstimate(float(np.real(h.identity_coefficient())), 0.0, [], 0.0)
    if isinstance(circuit, DensityState):
        state = circuit
    else:
        state = run(circuit, values, noise)
    sampler = EnergySampler(state, h, groups, noise, spec, n_target, post_select, confusion)
    if shots is None:
        return sampler.exact()
    return sampler.sample(shots, rng)


def scan_theta(
    h: PauliSum,
    compiled,
    thetas: Sequence[float],
    shots: int | None = DEFAULT_SHOTS,
    noise: NoiseModel | None = None,
    post_select: bool = False,
    n_target: int | None = None,
    seed: int | None = None,
    confusion: ConfusionMatrix | None = None,
) -> list[EnergyEstimate]:
    """Energy along a one-parameter line; point ``k`` uses the seed stream ``(seed, k)``."""
    if len(compiled.parameters) != 1:
        raise ValueError("scan_theta needs a single-parameter ansatz")
    groups = group_commuting(h)
    out = []
    for k, theta in enumerate(thetas):
        state = run(compiled.circuit, compiled.values([theta]), noise)
        sampler = EnergySampler(state, h, groups, noise, compiled.mapping, n_target, post_select, confusion)
        out.append(sampler.exact() if shots is None else sampler.sample(shots, derive_rng(seed, k)))
    return out


def scan_csv(thetas: Sequence[float], estimates: Sequence[EnergyEstimate]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["theta_rad", "energy_eV", "std_err_eV", "discarded_fraction"])
    for t, e in zip(thetas, estimates):
        w.writerow([repr(float(t)), repr(e.value), repr(e.std_error), repr(e.discarded_fraction)])
    return buf.getvalue()
