"""UCCSD generators, Pauli-gadget compilation and exponential block replication.

Generators are ``G_k = tau_k - tau_k^dagger`` with ``tau = a+_a a_i`` for
singles and ``tau = a+_a a+_b a_i a_j`` (``i < j``, ``a < b``) for doubles.
The circuit realizes ``prod_k exp(theta_k G_k / 2)``; with this half-angle
convention the triplet fixtures reach their ground state at ``theta = pi/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import expm

from .circuit import Circuit, Gate, _rx, statevector
from .fci import Determinant
from .fermion import ActiveSpace, FermionOperator
from .mapping import MappingError, MappingSpec, map_operator, map_state
from .pauli import PauliString, PauliSum, to_dense

__all__ = [
    "Excitation",
    "UccsdAnsatz",
    "CompiledAnsatz",
    "CompilationError",
    "build_uccsd",
    "compile_ansatz",
    "prepare_reference",
    "pauli_gadget",
]

SELF_CHECK_TOLERANCE = 1e-10


class CompilationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Excitation:
    occupied: tuple[int, ...]
    virtual: tuple[int, ...]
    parameter: str

    @property
    def rank(self) -> int:
        return len(self.occupied)

    def tau(self) -> FermionOperator:
        if self.rank == 1:
            (i,), (a,) = self.occupied, self.virtual
            return FermionOperator.product([(a, True), (i, False)])
        (i, j), (a, b) = self.occupied, self.virtual
        return FermionOperator.product([(a, True), (b, True), (i, False), (j, False)])

    def generator(self) -> FermionOperator:
        t = self.tau()
        return t - t.adjoint()

    @property
    def label(self) -> str:
        occ = ",".join(map(str, self.occupied))
        vir = ",".join(map(str, self.virtual))
        return f"{occ}->{vir}"


@dataclass(frozen=True)
class UccsdAnsatz:
    space: ActiveSpace
    reference: Determinant
    excitations: tuple[Excitation, ...]
    spin_conserving_only: bool = True

    @property
    def parameters(self) -> list[str]:
        return [e.parameter for e in self.excitations]

    @property
    def n_parameters(self) -> int:
        return len(self.excitations)


def _spin(mode: int, n_spatial: int) -> int:
    return mode // n_spatial


def build_uccsd(
    space: ActiveSpace,
    reference: Determinant,
    spin_conserving: bool = True,
    orbital_irreps: Sequence[int] | None = None,
) -> UccsdAnsatz:
    """All singles and doubles out of ``reference``.

    ``orbital_irreps`` optionally assigns each spatial orbital an Abelian
    irrep code (direct product = XOR); only totally symmetric excitations
    are then kept.
    """
    n = space.n_spatial
    if reference.n_electrons != space.n_electrons or reference.occupation >> space.n_spin_orbitals:
        raise ValueError("reference determinant does not match the active space")
    if orbital_irreps is not None and len(orbital_irreps) != n:
        raise ValueError("need one irrep per spatial orbital")
    occ = list(reference.modes)
    vir = [m for m in range(space.n_spin_orbitals) if m not in occ]

    def keep(o: tuple[int, ...], v: tuple[int, ...]) -> bool:
        if spin_conserving and sorted(_spin(m, n) for m in o) != sorted(_spin(m, n) for m in v):
            return False
        if orbital_irreps is not None:
            sym = 0
            for m in o + v:
                sym ^= orbital_irreps[m % n]
            if sym:
                return False
        return True

    chosen: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
    for i in occ:
        for a in vir:
            if keep((i,), (a,)):
                chosen.append(((i,), (a,)))
    for ij in combinations(occ, 2):
        for ab in combinations(vir, 2):
            if keep(ij, ab):
                chosen.append((ij, ab))
    excitations = tuple(Excitation(o, v, f"theta{k}") for k, (o, v) in enumerate(chosen))
    return UccsdAnsatz(space, reference, excitations, spin_conserving)


def prepare_reference(reference: Determinant, mapping: MappingSpec) -> Circuit:
    """X gates on the qubits that are 1 in the encoded reference."""
    index = map_state(reference, mapping)
    circ = Circuit(mapping.n_qubits)
    for q in range(mapping.n_qubits):
        if (index >> q) & 1:
            circ.append(Gate("X", (q,)))
    return circ


# Sign of V^dag Z V for the Y-basis change V = Rx(-pi/2).
_Y_BASIS_ANGLE = -math.pi / 2
_Y_SIGN = int(round(np.real(np.trace(_rx(_Y_BASIS_ANGLE).conj().T @ np.diag([1, -1]) @ _rx(_Y_BASIS_ANGLE) @ np.array([[0, -1j], [1j, 0]]))) / 2))


def pauli_gadget(p: PauliString, param: str | None, scale: float, angle: float | None = None) -> list[Gate]:
    """Gates for ``exp(-i alpha P / 2)`` with ``alpha = scale * values[param]``.

    ``p`` must be a Hermitian (phase-normalized) non-identity string.
    """
    support = [q for q in range(p.n_qubits) if p.letter(q) != "I"]
    if not support:
        raise CompilationError("identity has no gadget")
    pre: list[Gate] = []
    post: list[Gate] = []
    sign = 1
    for q in support:
        letter = p.letter(q)
        if letter == "X":
            pre.append(Gate("H", (q,)))
            post.append(Gate("H", (q,)))
        elif letter == "Y":
            pre.append(Gate("RX", (q,), _Y_BASIS_ANGLE))
            post.append(Gate("RX", (q,), -_Y_BASIS_ANGLE))
            sign *= _Y_SIGN
    ladder = [Gate("CNOT", (a, b)) for a, b in zip(support, support[1:])]
    target = support[-1]
    if param is None:
        rz = Gate("RZ", (target,), sign * scale * angle)
    else:
        rz = Gate("RZ", (target,), param=param, scale=sign * scale)
    return pre + ladder + [rz] + ladder[::-1] + post


@dataclass
class CompiledAnsatz:
    """Parametrized circuit (reference preparation included)."""

    ansatz: UccsdAnsatz
    mapping: MappingSpec
    replication: int
    circuit: Circuit
    reference_circuit: Circuit
    merged: tuple[str, ...] = field(default=())

    @property
    def n_qubits(self) -> int:
        return self.circuit.n_qubits

    @property
    def parameters(self) -> list[str]:
        return self.ansatz.parameters

    def values(self, theta: Sequence[float] | Mapping[str, float]) -> dict[str, float]:
        if isinstance(theta, Mapping):
            return {k: float(theta[k]) for k in self.parameters}
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.size != len(self.parameters):
            raise ValueError(f"expected {len(self.parameters)} parameters, got {theta.size}")
        return dict(zip(self.parameters, map(float, theta)))

    def bind(self, theta: Sequence[float] | Mapping[str, float]) -> Circuit:
        return self.circuit.bind(self.values(theta))

    def state(self, theta: Sequence[float] | Mapping[str, float]) -> np.ndarray:
        """Noiseless state vector."""
        return statevector(self.circuit, self.values(theta))

    def depth(self) -> int:
        return self.circuit.depth()


def _hermitian_terms(g: PauliSum) -> list[tuple[PauliString, float]]:
    """Split an anti-Hermitian sum into ``(P, b)`` with ``G = sum i b P``."""
    out = []
    for p, c in g.terms.items():
        if abs(c.real) > 1e-12:
            raise CompilationError("generator is not anti-Hermitian")
        out.append((p, float(c.imag)))
    out.sort(key=lambda pb: pb[0].letters)
    return out


def _block_gates(terms: list[tuple[PauliString, float]], param: str, n: int) -> list[Gate]:
    # exp(theta/(2n) * i b P) = exp(-i alpha P / 2) with alpha = -theta b / n
    gates: list[Gate] = []
    for p, b in terms:
        gates.extend(pauli_gadget(p, param, -b / n))
    return gates


def _try_merge(terms, dense_g: np.ndarray, ref_index: int, n_qubits: int) -> list[tuple[PauliString, float]] | None:
    """Single-string replacement valid on the reference.

    Applies when ``G`` couples the reference to exactly one other basis state
    ``t`` and maps ``t`` back onto the reference.  On that two-level subspace
    ``G`` acts like ``i b P`` for any string ``P`` with ``P|ref> ~ |t>``; the
    lowest-weight such string from the mapped terms is used.
    """
    dim = 1 << n_qubits
    col = dense_g[:, ref_index]
    hits = np.flatnonzero(np.abs(col) > 1e-12)
    if len(hits) != 1 or hits[0] == ref_index:
        return None
    t = int(hits[0])
    back = np.flatnonzero(np.abs(dense_g[:, t]) > 1e-12)
    if list(back) != [ref_index]:
        return None
    flip = ref_index ^ t
    candidates = sorted((p for p, _ in terms if p.x == flip), key=lambda p: (bin(p.support).count("1"), p.letters))
    for p in candidates:
        ket = np.zeros(dim, dtype=complex)
        ket[ref_index] = 1.0
        phase = (to_dense(PauliSum(n_qubits, [(p, 1.0)])) @ ket)[t]
        b = col[t] / (1j * phase)
        if abs(b.imag) < 1e-12:
            return [(p, float(b.real))]
    return None


def _gates_unitary(gates: list[Gate], n_qubits: int, values: Mapping[str, float]) -> np.ndarray:
    circ = Circuit(n_qubits, list(gates))
    dim = 1 << n_qubits
    cols = [statevector(circ, values, np.eye(dim, dtype=complex)[k]) for k in range(dim)]
    return np.stack(cols, axis=1)


def compile_ansatz(ansatz: UccsdAnsatz, mapping: MappingSpec, n: int = 1, merge: bool = True) -> CompiledAnsatz:
    """Compile to gates, repeating every generator block ``n`` times with ``theta / n``.

    With ``merge`` the first generator (the only one acting directly on the
    reference) is reduced to a single Pauli exponential when it only rotates
    the reference into one other basis state; a dense check at compile time
    confirms every block.
    """
    if n < 1:
        raise ValueError("replication must be at least 1")
    if mapping.n_spin_orbitals != ansatz.space.n_spin_orbitals:
        raise MappingError("mapping and active space disagree on the spin-orbital count")
    nq = mapping.n_qubits
    ref_circ = prepare_reference(ansatz.reference, mapping)
    ref_index = map_state(ansatz.reference, mapping)
    ref_vec = np.zeros(1 << nq, dtype=complex)
    ref_vec[ref_index] = 1.0
    circuit = Circuit(nq, list(ref_circ.gates))
    merged: list[str] = []
    probe = 0.7315
    for k, exc in enumerate(ansatz.excitations):
        try:
            g = map_operator(exc.generator(), mapping)
        except MappingError as err:
            raise MappingError(f"generator {exc.label} cannot be mapped: {err}") from None
        terms = _hermitian_terms(g)
        if not terms:
            continue
        for (p, _), (q, _) in combinations(terms, 2):
            if not p.commutes(q):
                raise CompilationError(f"mapped terms of {exc.label} do not commute")
        dense_g = to_dense(g)
        block_terms = terms
        candidate = _try_merge(terms, dense_g, ref_index, nq) if (merge and k == 0) else None
        if candidate is not None:
            gates = _block_gates(candidate, exc.parameter, 1)
            got = _gates_unitary(gates, nq, {exc.parameter: probe}) @ ref_vec
            want = expm(0.5 * probe * dense_g) @ ref_vec
            if np.allclose(got, want, atol=SELF_CHECK_TOLERANCE):
                block_terms = candidate
                merged.append(exc.parameter)
        gates = _block_gates(block_terms, exc.parameter, 1)
        if block_terms is terms:
            got = _gates_unitary(gates, nq, {exc.parameter: probe})
            want = expm(0.5 * probe * dense_g)
            if not np.allclose(got, want, atol=SELF_CHECK_TOLERANCE):
                raise CompilationError(f"gadget for {exc.label} does not reproduce its exponential")
        block = _block_gates(block_terms, exc.parameter, n)
        for _ in range(n):
            circuit.extend(block)
    return CompiledAnsatz(ansatz, mapping, n, circuit, ref_circ, tuple(merged))
