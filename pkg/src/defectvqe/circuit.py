"""Gate-level density-matrix simulator with depolarizing/damping noise and readout error.

Qubit ``j`` is bit ``j`` of the basis index.  ``Rz(phi) = exp(-i phi Z / 2)``
and ``Rx(phi) = exp(-i phi X / 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .pauli import MeasurementGroup, PauliSum, _apply_columns

__all__ = [
    "Gate",
    "Circuit",
    "NoiseModel",
    "DensityState",
    "ShotTable",
    "UnboundParameterError",
    "apply",
    "run",
    "expectation",
    "probabilities",
    "sample",
    "derive_rng",
    "statevector",
    "circuit_unitary",
    "readout_fold",
]

_SQ2 = 1 / math.sqrt(2)
_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) * _SQ2
# control is the first listed qubit; matrix index = 2*b_control + b_target
_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
_PAULIS = (_I2, _X, _Y, _Z)


class UnboundParameterError(KeyError):
    pass


def _rx(phi: float) -> np.ndarray:
    c, s = math.cos(phi / 2), math.sin(phi / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def _ry(phi: float) -> np.ndarray:
    c, s = math.cos(phi / 2), math.sin(phi / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz(phi: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * phi), np.exp(0.5j * phi)])


_FIXED = {"H": _H, "X": _X, "Y": _Y, "Z": _Z, "CNOT": _CNOT}
_ROTATIONS = {"RX": _rx, "RY": _ry, "RZ": _rz}


@dataclass(frozen=True)
class Gate:
    """One gate.  Parametric gates carry either a numeric ``angle`` or a
    parameter slot: the angle is then ``scale * values[param]``."""

    name: str
    qubits: tuple[int, ...]
    angle: float | None = None
    param: str | None = None
    scale: float = 1.0

    def __post_init__(self) -> None:
        name = self.name.upper()
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if name not in _FIXED and name not in _ROTATIONS:
            raise ValueError(f"unknown gate {self.name!r}")
        arity = 2 if name == "CNOT" else 1
        if len(self.qubits) != arity:
            raise ValueError(f"{name} acts on {arity} qubit(s)")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError("gate targets must be distinct")
        if name in _ROTATIONS and self.angle is None and self.param is None:
            raise ValueError(f"{name} needs an angle or a parameter slot")

    @property
    def is_parametric(self) -> bool:
        return self.param is not None

    def resolved_angle(self, values: Mapping[str, float] | None = None) -> float | None:
        if self.name not in _ROTATIONS:
            return None
        if self.param is None:
            return self.angle
        if values is None or self.param not in values:
            raise UnboundParameterError(f"parameter {self.param!r} is unbound")
        return self.scale * float(values[self.param])

    def matrix(self, values: Mapping[str, float] | None = None) -> np.ndarray:
        if self.name in _FIXED:
            return _FIXED[self.name]
        return _ROTATIONS[self.name](self.resolved_angle(values))

    def bind(self, values: Mapping[str, float]) -> "Gate":
        if self.param is None:
            return self
        return Gate(self.name, self.qubits, self.resolved_angle(values))

    def netlist(self) -> str:
        qs = " ".join(str(q) for q in self.qubits)
        if self.name not in _ROTATIONS:
            return f"{self.name.lower()} {qs}"
        if self.param is None:
            return f"{self.name.lower()} {qs} {self.angle!r}"
        return f"{self.name.lower()} {qs} {self.scale!r}*{self.param}"


@dataclass
class Circuit:
    n_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def __post_init__(self) -> None:
        for g in self.gates:
            self._check(g)

    def _check(self, g: Gate) -> None:
        if any(q < 0 or q >= self.n_qubits for q in g.qubits):
            raise ValueError(f"gate {g.netlist()} out of range for {self.n_qubits} qubits")

    def append(self, gate: Gate) -> "Circuit":
        self._check(gate)
        self.gates.append(gate)
        return self

    def extend(self, gates: Iterable[Gate]) -> "Circuit":
        for g in gates:
            self.append(g)
        return self

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit-count mismatch")
        return Circuit(self.n_qubits, self.gates + other.gates)

    def __len__(self) -> int:
        return len(self.gates)

    @property
    def parameters(self) -> list[str]:
        seen: dict[str, None] = {}
        for g in self.gates:
            if g.param is not None:
                seen.setdefault(g.param, None)
        return list(seen)

    def bind(self, values: Mapping[str, float]) -> "Circuit":
        return Circuit(self.n_qubits, [g.bind(values) for g in self.gates])

    def depth(self) -> int:
        level = [0] * self.n_qubits
        for g in self.gates:
            d = max(level[q] for q in g.qubits) + 1
            for q in g.qubits:
                level[q] = d
        return max(level, default=0)

    def count(self, name: str) -> int:
        return sum(1 for g in self.gates if g.name == name.upper())

    def netlist(self) -> str:
        return f"qubits {self.n_qubits}\n" + "".join(g.netlist() + "\n" for g in self.gates)

    @classmethod
    def from_netlist(cls, text: str) -> "Circuit":
        lines = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        if not lines or lines[0][0] != "qubits":
            raise ValueError("netlist must start with 'qubits N'")
        circ = cls(int(lines[0][1]))
        for parts in lines[1:]:
            name = parts[0].upper()
            arity = 2 if name == "CNOT" else 1
            qubits = tuple(int(v) for v in parts[1 : 1 + arity])
            rest = parts[1 + arity :]
            if not rest:
                circ.append(Gate(name, qubits))
            elif "*" in rest[0]:
                scale, slot = rest[0].split("*", 1)
                circ.append(Gate(name, qubits, param=slot, scale=float(scale)))
            else:
                circ.append(Gate(name, qubits, float(rest[0])))
        return circ


# -- noise -----------------------------------------------------------------------

@dataclass
class NoiseModel:
    """Gate and readout noise for the logical register.

    ``p1``/``p2`` are depolarizing probabilities (``rho -> (1-p) rho + p I/d``)
    applied after every one-/two-qubit gate; either a single number or a
    per-qubit / per-pair mapping.  ``readout[q] = (p(1|0), p(0|1))``.
    T1/T2 (microseconds) add amplitude and phase damping for the gate
    durations (nanoseconds) when both are set.  ``Rz`` is treated as a
    virtual (error-free) gate unless ``virtual_rz`` is false.
    """

    p1: float | Mapping[int, float] = 0.0
    p2: float | Mapping[tuple[int, int], float] = 0.0
    readout: Mapping[int, tuple[float, float]] | None = None
    t1: Mapping[int, float] | None = None
    t2: Mapping[int, float] | None = None
    gate_time_1q: float = 35.0
    gate_time_2q: float = 300.0
    virtual_rz: bool = True
    default_p2: float | None = None
    seed: int | None = None

    def __post_init__(self) -> None:
        for v in self._all_probabilities():
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"probability {v} outside [0, 1]")
        if self.t1 is not None and self.t2 is not None:
            for q, t2 in self.t2.items():
                t1 = self.t1.get(q)
                if t1 is not None and t2 > 2 * t1 + 1e-12:
                    raise ValueError(f"qubit {q}: T2={t2} exceeds 2*T1={2 * t1}")

    def _all_probabilities(self) -> list[float]:
        out = []
        for p in (self.p1, self.p2):
            out.extend(p.values() if isinstance(p, Mapping) else [p])
        if self.readout:
            for a, b in self.readout.values():
                out.extend([a, b])
        if self.default_p2 is not None:
            out.append(self.default_p2)
        return out

    @classmethod
    def ideal(cls) -> "NoiseModel":
        return cls()

    @property
    def is_ideal(self) -> bool:
        return all(v == 0 for v in self._all_probabilities()) and not (self.t1 and self.t2)

    def gate_error(self, gate: Gate) -> float:
        if gate.name == "CNOT":
            if isinstance(self.p2, Mapping):
                a, b = gate.qubits
                v = self.p2.get((a, b), self.p2.get((b, a)))
                if v is None:
                    if self.default_p2 is None:
                        return float(np.mean(list(self.p2.values()))) if self.p2 else 0.0
                    return self.default_p2
                return v
            return float(self.p2)
        if gate.name == "RZ" and self.virtual_rz:
            return 0.0
        if isinstance(self.p1, Mapping):
            return float(self.p1.get(gate.qubits[0], 0.0))
        return float(self.p1)

    def readout_pair(self, qubit: int) -> tuple[float, float]:
        if not self.readout:
            return (0.0, 0.0)
        return tuple(self.readout.get(qubit, (0.0, 0.0)))

    def scaled(self, factor: float) -> "NoiseModel":
        """Gate-error probabilities multiplied by ``factor`` (readout untouched)."""

        def sc(p):
            if isinstance(p, Mapping):
                return {k: min(1.0, v * factor) for k, v in p.items()}
            return min(1.0, p * factor)

        return replace(
            self,
            p1=sc(self.p1),
            p2=sc(self.p2),
            default_p2=None if self.default_p2 is None else min(1.0, self.default_p2 * factor),
        )

    def without_readout(self) -> "NoiseModel":
        return replace(self, readout=None)


# -- density-matrix state ----------------------------------------------------------

@dataclass
class DensityState:
    n_qubits: int
    rho: np.ndarray

    @classmethod
    def basis(cls, n_qubits: int, index: int = 0) -> "DensityState":
        dim = 1 << n_qubits
        rho = np.zeros((dim, dim), dtype=complex)
        rho[index, index] = 1.0
        return cls(n_qubits, rho)

    @classmethod
    def from_vector(cls, psi: np.ndarray) -> "DensityState":
        psi = np.asarray(psi, dtype=complex)
        n = int(round(math.log2(psi.size)))
        return cls(n, np.outer(psi, psi.conj()))

    def copy(self) -> "DensityState":
        return DensityState(self.n_qubits, self.rho.copy())

    def trace(self) -> float:
        return float(np.trace(self.rho).real)

    def purity(self) -> float:
        return float(np.real(np.vdot(self.rho, self.rho)))

    def fidelity(self, psi: np.ndarray) -> float:
        return float(np.real(np.vdot(psi, self.rho @ psi)))

    def is_valid(self, atol: float = 1e-9) -> bool:
        herm = np.allclose(self.rho, self.rho.conj().T, atol=1e-12)
        return herm and abs(self.trace() - 1.0) <= atol


def _apply_local(rho: np.ndarray, ops: Sequence[np.ndarray], qubits: Sequence[int], n: int) -> np.ndarray:
    """Return ``sum_k K_k rho K_k^dagger`` for operators ``K_k`` acting on ``qubits``.

    ``qubits[0]`` is the most significant index of each local matrix.
    """
    k = len(qubits)
    t = rho.reshape((2,) * (2 * n))
    row_axes = [n - 1 - q for q in qubits]
    col_axes = [2 * n - 1 - q for q in qubits]
    out = None
    for op in ops:
        opt = op.reshape((2,) * (2 * k))
        # act on row indices
        r = np.tensordot(opt, t, axes=(list(range(k, 2 * k)), row_axes))
        r = np.moveaxis(r, list(range(k)), row_axes)
        # act on column indices with the conjugate
        r = np.tensordot(opt.conj(), r, axes=(list(range(k, 2 * k)), col_axes))
        r = np.moveaxis(r, list(range(k)), col_axes)
        out = r if out is None else out + r
    dim = 1 << n
    return out.reshape(dim, dim)


def _depolarizing_kraus(p: float, k: int) -> list[np.ndarray]:
    d2 = 4**k
    ops = [math.sqrt(1 - p + p / d2) * np.eye(2**k, dtype=complex)]
    w = math.sqrt(p / d2)
    if k == 1:
        ops += [w * P for P in _PAULIS[1:]]
    else:
        for i, a in enumerate(_PAULIS):
            for j, b in enumerate(_PAULIS):
                if i or j:
                    ops.append(w * np.kron(a, b))
    return ops


def _damping_kraus(t1: float, t2: float, duration_ns: float) -> list[list[np.ndarray]]:
    t = duration_ns * 1e-3  # microseconds
    gamma = 1 - math.exp(-t / t1)
    amp = [np.array([[1, 0], [0, math.sqrt(1 - gamma)]], dtype=complex),
           np.array([[0, math.sqrt(gamma)], [0, 0]], dtype=complex)]
    rate_phi = max(0.0, 1 / t2 - 1 / (2 * t1))
    lam = 1 - math.exp(-2 * t * rate_phi)
    phase = [np.array([[1, 0], [0, math.sqrt(1 - lam)]], dtype=complex),
             np.array([[0, 0], [0, math.sqrt(lam)]], dtype=complex)]
    return [amp, phase]


def apply(
    state: DensityState,
    gate: Gate,
    noise: NoiseModel | None = None,
    values: Mapping[str, float] | None = None,
) -> DensityState:
    """Apply ``gate`` (and its noise channel) in place and return the state."""
    U = gate.matrix(values)
    state.rho = _apply_local(state.rho, [U], gate.qubits, state.n_qubits)
    if noise is None:
        return state
    p = noise.gate_error(gate)
    if p > 0:
        state.rho = _apply_local(state.rho, _depolarizing_kraus(p, len(gate.qubits)), gate.qubits, state.n_qubits)
    if noise.t1 and noise.t2 and not (gate.name == "RZ" and noise.virtual_rz):
        duration = noise.gate_time_2q if gate.name == "CNOT" else noise.gate_time_1q
        for q in gate.qubits:
            if q in noise.t1 and q in noise.t2:
                for channel in _damping_kraus(noise.t1[q], noise.t2[q], duration):
                    state.rho = _apply_local(state.rho, channel, (q,), state.n_qubits)
    return state


def run(
    circuit: Circuit,
    values: Mapping[str, float] | None = None,
    noise: NoiseModel | None = None,
    initial: DensityState | None = None,
) -> DensityState:
    state = initial.copy() if initial is not None else DensityState.basis(circuit.n_qubits)
    for g in circuit.gates:
        apply(state, g, noise, values)
    return state


def circuit_unitary(circuit: Circuit, values: Mapping[str, float] | None = None) -> np.ndarray:
    """Dense unitary of a noiseless circuit (columns are images of basis states)."""
    dim = 1 << circuit.n_qubits
    out = np.eye(dim, dtype=complex)
    for k in range(dim):
        out[:, k] = statevector(circuit, values, _basis_vec(dim, k))
    return out


def _basis_vec(dim: int, k: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[k] = 1
    return v


def statevector(circuit: Circuit, values: Mapping[str, float] | None = None, initial: np.ndarray | None = None) -> np.ndarray:
    n = circuit.n_qubits
    psi = _basis_vec(1 << n, 0) if initial is None else np.asarray(initial, dtype=complex).copy()
    for g in circuit.gates:
        U = g.matrix(values)
        k = len(g.qubits)
        t = psi.reshape((2,) * n)
        axes = [n - 1 - q for q in g.qubits]
        t = np.tensordot(U.reshape((2,) * (2 * k)), t, axes=(list(range(k, 2 * k)), axes))
        psi = np.moveaxis(t, list(range(k)), axes).reshape(-1)
    return psi


def expectation(state: DensityState, obs: PauliSum) -> float:
    """Exact ``Tr(rho O)`` for a Hermitian Pauli sum."""
    if obs.n_qubits != state.n_qubits:
        raise ValueError("observable and state have different qubit counts")
    total = 0.0
    rho = state.rho
    for x, z, c in obs.raw_items():
        rows, vals = _apply_columns(state.n_qubits, x, z)
        # P|k> = v_k |rows_k>, so <k|rho P|k> = v_k rho[k, rows_k]
        total += c * np.sum(vals * rho[np.arange(rho.shape[0]), rows])
    return float(np.real(total))


# -- measurement -------------------------------------------------------------------

def derive_rng(seed: int | None, *keys: int) -> np.random.Generator:
    """Independent generator for task ``keys`` under a base ``seed``."""
    if seed is None:
        return np.random.default_rng()
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys)))


def rotation_gates(group: MeasurementGroup) -> list[Gate]:
    gates = []
    for q, b in enumerate(group.basis_rotation):
        if b == "X":
            gates.append(Gate("H", (q,)))
        elif b == "Y":
            gates.append(Gate("RX", (q,), math.pi / 2))
    return gates


def probabilities(state: DensityState) -> np.ndarray:
    p = np.clip(np.real(np.diag(state.rho)), 0.0, None)
    return p / p.sum()


def readout_fold(p: np.ndarray, n_qubits: int, noise: NoiseModel | None) -> np.ndarray:
    """Push an outcome distribution through independent per-qubit readout flips."""
    if noise is None or not noise.readout:
        return p
    t = p.reshape((2,) * n_qubits)
    for q in range(n_qubits):
        e01, e10 = noise.readout_pair(q)
        if e01 == 0 and e10 == 0:
            continue
        m = np.array([[1 - e01, e10], [e01, 1 - e10]])  # m[measured, prepared]
        ax = n_qubits - 1 - q
        t = np.moveaxis(np.tensordot(m, t, axes=([1], [ax])), 0, ax)
    return t.reshape(-1)


@dataclass
class ShotTable:
    """Bitstring counts of one measured circuit.

    Keys are kets (qubit 0 rightmost).  After post-selection ``discarded``
    holds the number of removed shots and ``sum(counts) + discarded == shots``.
    """

    group: MeasurementGroup | None
    counts: dict[str, int]
    shots: int
    discarded: int = 0

    @property
    def n_qubits(self) -> int:
        if self.group is not None:
            return self.group.n_qubits
        return len(next(iter(self.counts))) if self.counts else 0

    @property
    def kept(self) -> int:
        return self.shots - self.discarded

    def as_array(self, n_qubits: int | None = None) -> np.ndarray:
        n = self.n_qubits if n_qubits is None else n_qubits
        arr = np.zeros(1 << n, dtype=np.int64)
        for k, v in self.counts.items():
            arr[int(k, 2)] = v
        return arr


def rotated_distribution(
    state: DensityState,
    group: MeasurementGroup,
    noise: NoiseModel | None = None,
) -> np.ndarray:
    """Outcome distribution (readout error included) of measuring ``group``."""
    rotated = state.copy()
    for g in rotation_gates(group):
        apply(rotated, g, noise)
    return readout_fold(probabilities(rotated), state.n_qubits, noise)


def sample(
    state: DensityState,
    group: MeasurementGroup,
    shots: int,
    noise: NoiseModel | None = None,
    rng: np.random.Generator | int | None = None,
) -> ShotTable:
    """Sample ``shots`` outcomes of measuring ``group`` on ``state``.

    Readout error is applied as independent per-qubit flips; flipping each
    sampled bit and sampling from the folded distribution are identical in
    law, and the latter is what is computed.
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng if rng is not None else (noise.seed if noise else None))
    p = rotated_distribution(state, group, noise)
    return table_from_distribution(p, group, shots, rng)


def table_from_distribution(p: np.ndarray, group: MeasurementGroup | None, shots: int, rng: np.random.Generator) -> ShotTable:
    n = int(round(math.log2(p.size)))
    draws = rng.multinomial(shots, p)
    counts = {format(k, f"0{n}b"): int(c) for k, c in enumerate(draws) if c}
    return ShotTable(group, counts, shots, 0)
