"""Quantum subspace expansion: measured ``H`` and ``S`` matrices and their generalized eigenproblem."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuit import DensityState, NoiseModel, derive_rng, rotated_distribution
from .fci import Determinant, enumerate_sector
from .fermion import ActiveSpace, FermionHamiltonian, FermionOperator, to_fermion_operator
from .mapping import MappingSpec, electron_counts, map_operator
from .mitigation import ZneSeries, fit_series
from .pauli import MeasurementGroup, PauliString, PauliSum, group_commuting
from .readout import ConfusionMatrix, unfold

__all__ = [
    "QseProblem",
    "QseError",
    "PauliMeter",
    "expansion_operators",
    "qse_operator_sums",
    "build_qse",
    "solve_generalized",
    "extrapolate_qse",
    "degenerate_multiplets",
    "multiplet_gaps",
    "splittings",
]


class QseError(np.linalg.LinAlgError):
    pass


@dataclass
class QseProblem:
    operators: list[FermionOperator]
    labels: list[str]
    h: np.ndarray
    s: np.ndarray
    h_err: np.ndarray
    s_err: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.h.shape != self.s.shape or self.h.shape[0] != self.h.shape[1]:
            raise ValueError("H and S must be square matrices of equal size")

    @property
    def dim(self) -> int:
        return self.h.shape[0]


def expansion_operators(space: ActiveSpace, reference: Determinant, sz: float | None = None) -> tuple[list[FermionOperator], list[str]]:
    """Identity plus the excitations taking ``reference`` to every other determinant of its sector.

    For the active spaces used here every such determinant is at most a
    double excitation, so the expansion spans the whole configuration space.
    """
    if sz is None:
        sz = reference.spin_z(space.n_spatial)
    ops = [FermionOperator.identity()]
    labels = ["I"]
    occ = set(reference.modes)
    for det in enumerate_sector(space, space.n_electrons, sz):
        if det == reference:
            continue
        holes = sorted(occ - set(det.modes))
        parts = sorted(set(det.modes) - occ)
        if len(holes) > 2:
            raise QseError("sector contains determinants beyond double excitations of the reference")
        creators = [(a, True) for a in parts]
        annihilators = [(i, False) for i in holes]
        ops.append(FermionOperator.product(creators + annihilators))
        labels.append(",".join(map(str, holes)) + "->" + ",".join(map(str, parts)))
    return ops, labels


def qse_operator_sums(
    h: FermionHamiltonian, ops: Sequence[FermionOperator], spec: MappingSpec
) -> tuple[list[list[PauliSum]], list[list[PauliSum]]]:
    """Mapped ``O_i^dag H O_j`` and ``O_i^dag O_j`` for all pairs."""
    hq = map_operator(to_fermion_operator(h), spec)
    mapped = [map_operator(o, spec) for o in ops]
    adj = [m.adjoint() for m in mapped]
    h_sums = [[adj[i] @ hq @ mapped[j] for j in range(len(ops))] for i in range(len(ops))]
    s_sums = [[adj[i] @ mapped[j] for j in range(len(ops))] for i in range(len(ops))]
    return h_sums, s_sums


class PauliMeter:
    """Joint estimation of many Pauli expectation values on one state.

    All strings are partitioned into qubit-wise commuting groups; each
    group is measured once per draw.  With post-selection the diagonal group
    is filtered on the electron number.
    """

    def __init__(
        self,
        strings: Sequence[tuple[int, int]],
        n_qubits: int,
        spec: MappingSpec | None = None,
        n_target: int | None = None,
        post_select: bool = False,
    ) -> None:
        self.n_qubits = n_qubits
        self.keys = [k for k in dict.fromkeys(strings) if k != (0, 0)]
        self.index = {k: i for i, k in enumerate(self.keys)}
        if self.keys:
            union = PauliSum._from_raw(n_qubits, {k: 1.0 for k in self.keys}, 0.0)
            self.groups: list[MeasurementGroup] = group_commuting(union)
        else:
            self.groups = []
        self.keep = electron_counts(spec) == n_target if post_select else None
        outcomes = np.arange(1 << n_qubits)
        self._signs = []
        for g in self.groups:
            rows = []
            for p in g.members:
                masked = outcomes & p.support
                parity = np.zeros_like(outcomes)
                for j in range(n_qubits):
                    parity ^= (masked >> j) & 1
                rows.append(1.0 - 2.0 * parity)
            self._signs.append(np.array(rows))

    def distributions(self, state: DensityState, noise: NoiseModel | None) -> list[np.ndarray]:
        return [rotated_distribution(state, g, noise) for g in self.groups]

    def measure(
        self,
        dists: list[np.ndarray],
        shots: int | None,
        rng: np.random.Generator | None = None,
        confusion: ConfusionMatrix | None = None,
    ) -> tuple[np.ndarray, np.ndarray]:
        """Expectation values and their variances (zero in exact mode)."""
        values = np.zeros(len(self.keys))
        variances = np.zeros(len(self.keys))
        for g, p, signs in zip(self.groups, dists, self._signs):
            if shots is not None:
                p = rng.multinomial(shots, p) / shots
            if confusion is not None:
                p = unfold(p, confusion, clip=False)
            kept = float(shots) if shots is not None else np.inf
            if self.keep is not None and g.is_diagonal:
                mass = p[self.keep].sum()
                if mass <= 0:
                    raise QseError("post-selection removed every outcome of the diagonal group")
                p = np.where(self.keep, p, 0.0) / mass
                kept = kept * mass
            ev = signs @ p
            for p_str, v in zip(g.members, ev):
                i = self.index[(p_str.x, p_str.z)]
                values[i] = v
                variances[i] = max(1.0 - v * v, 0.0) / max(kept - 1, 1.0) if shots is not None else 0.0
        return values, variances


def _contract(sums: list[list[PauliSum]], meter: PauliMeter, values: np.ndarray, variances: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    dim = len(sums)
    mat = np.zeros((dim, dim), dtype=complex)
    var = np.zeros((dim, dim))
    for i in range(dim):
        for j in range(dim):
            acc = 0j
            v = 0.0
            for x, z, c in sums[i][j].raw_items():
                if (x, z) == (0, 0):
                    acc += c
                    continue
                k = meter.index[(x, z)]
                acc += c * values[k]
                v += abs(c) ** 2 * variances[k]
            mat[i, j] = acc
            var[i, j] = v
    return mat, var


def _hermitize(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


def build_qse(
    state: DensityState | Sequence[DensityState],
    h: FermionHamiltonian,
    reference: Determinant,
    spec: MappingSpec,
    shots: int | None = None,
    noise: NoiseModel | None = None,
    post_select: bool = False,
    confusion: ConfusionMatrix | None = None,
    repetitions: int = 1,
    seed: int | None = 0,
    sz: float | None = None,
    _cache: dict | None = None,
) -> QseProblem:
    """Measure the QSE matrices on ``state``.

    Each of the ``repetitions`` draws uses the stream ``(seed, rep)``; the
    reported matrices are their average and the errors the standard error
    of the mean (or the propagated shot noise for a single draw).
    """
    space = h.space
    if _cache is not None and "ops" in _cache:
        ops, labels, h_sums, s_sums, meter = (_cache[k] for k in ("ops", "labels", "h_sums", "s_sums", "meter"))
    else:
        ops, labels = expansion_operators(space, reference, sz)
        h_sums, s_sums = qse_operator_sums(h, ops, spec)
        strings = [(x, z) for row in h_sums + s_sums for sm in row for x, z, _ in sm.raw_items()]
        meter = PauliMeter(strings, spec.n_qubits, spec, space.n_electrons, post_select)
        if _cache is not None:
            _cache.update(ops=ops, labels=labels, h_sums=h_sums, s_sums=s_sums, meter=meter)
    dists = meter.distributions(state, noise)
    hs, ss, hv, sv = [], [], [], []
    draws = 1 if shots is None else repetitions
    for rep in range(draws):
        rng = derive_rng(seed, rep) if shots is not None else None
        values, variances = meter.measure(dists, shots, rng, confusion)
        hm, hvar = _contract(h_sums, meter, values, variances)
        sm, svar = _contract(s_sums, meter, values, variances)
        hs.append(_hermitize(hm))
        ss.append(_hermitize(sm))
        hv.append(hvar)
        sv.append(svar)
    hmean = np.mean(hs, axis=0)
    smean = np.mean(ss, axis=0)
    if draws > 1:
        herr = np.std(np.real(hs), axis=0, ddof=1) / np.sqrt(draws)
        serr = np.std(np.real(ss), axis=0, ddof=1) / np.sqrt(draws)
    else:
        herr = np.sqrt(hv[0])
        serr = np.sqrt(sv[0])
    meta = {"n_pauli_strings": len(meter.keys), "n_groups": len(meter.groups), "repetitions": draws}
    return QseProblem(ops, labels, hmean, smean, herr, serr, meta)


def solve_generalized(problem: QseProblem | tuple[np.ndarray, np.ndarray], s_threshold: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Canonical orthogonalization: drop ``S`` eigenvalues below ``s_threshold``.

    Returns ascending energies and eigenvectors expressed in the original
    (non-orthogonal) basis as columns.
    """
    if isinstance(problem, QseProblem):
        h, s = problem.h, problem.s
    else:
        h, s = problem
    h = _hermitize(np.asarray(h, dtype=complex))
    s = _hermitize(np.asarray(s, dtype=complex))
    w, u = np.linalg.eigh(s)
    keep = w > s_threshold
    if not np.any(keep):
        raise QseError(f"all overlap eigenvalues fall below the threshold {s_threshold:g}")
    x = u[:, keep] / np.sqrt(w[keep])
    hp = x.conj().T @ h @ x
    e, c = np.linalg.eigh(_hermitize(hp))
    return e, x @ c


def extrapolate_qse(problems: Sequence[QseProblem], ns: Sequence[int], diagonal_kind: str, seed: int | None = 0) -> QseProblem:
    """Element-wise zero-noise extrapolation of QSE matrices.

    Off-diagonal elements (real and imaginary parts) use a linear fit; the
    diagonal uses ``diagonal_kind``.
    """
    dim = problems[0].dim
    out = {}
    non_monotone = 0
    for name in ("h", "s"):
        mats = np.array([getattr(p, name) for p in problems])
        errs = np.array([getattr(p, name + "_err") for p in problems])
        res = np.zeros((dim, dim), dtype=complex)
        res_err = np.zeros((dim, dim))
        for i in range(dim):
            for j in range(i, dim):
                kind = diagonal_kind if i == j else "linear"
                parts = []
                err2 = 0.0
                for comp in (np.real, np.imag):
                    series = ZneSeries.from_arrays(ns, comp(mats[:, i, j]), errs[:, i, j])
                    if i == j and comp is np.imag:
                        parts.append(0.0)
                        continue
                    with warnings.catch_warnings(record=True) as caught:
                        warnings.simplefilter("always")
                        fit = fit_series(series, kind, seed)
                    non_monotone += bool(caught)
                    parts.append(fit.zero_noise[0])
                    err2 += fit.zero_noise[1] ** 2
                res[i, j] = parts[0] + 1j * parts[1]
                res[j, i] = np.conj(res[i, j])
                res_err[i, j] = res_err[j, i] = np.sqrt(err2)
        out[name] = (res, res_err)
    p0 = problems[0]
    meta = dict(p0.metadata, extrapolation=diagonal_kind, replications=list(ns), non_monotone_elements=non_monotone)
    return QseProblem(p0.operators, p0.labels, out["h"][0], out["s"][0], out["h"][1], out["s"][1], meta)


def degenerate_multiplets(energies: Sequence[float], tol: float = 1e-6) -> list[list[int]]:
    """Indices of (reference) levels grouped into degenerate multiplets."""
    energies = np.asarray(energies, dtype=float)
    groups: list[list[int]] = []
    for k, e in enumerate(energies):
        if groups and abs(e - energies[groups[-1][0]]) <= tol:
            groups[-1].append(k)
        else:
            groups.append([k])
    return groups


def multiplet_gaps(energies: Sequence[float], multiplets: list[list[int]]) -> np.ndarray:
    """Mean excitation energy of each excited multiplet (first multiplet is the ground level)."""
    energies = np.asarray(energies, dtype=float)
    ground = float(np.mean(energies[multiplets[0]]))
    return np.array([float(np.mean(energies[m])) - ground for m in multiplets[1:]])


def splittings(energies: Sequence[float], multiplets: list[list[int]]) -> list[dict]:
    """Spread of each multiplet that should be degenerate."""
    energies = np.asarray(energies, dtype=float)
    out = []
    for m in multiplets:
        if len(m) > 1:
            out.append({"levels": list(m), "splitting_eV": float(np.ptp(energies[m]))})
    return out
