"""Fermion-to-qubit encodings (Jordan-Wigner, parity) and parity-sector tapering.

Basis-state labels are written as kets, highest qubit leftmost, so the
string is the binary form of the basis index (qubit 0 is the last
character).  This is the convention under which the six-qubit parity
encoding of ``|a1 ā1 ex ēy>`` reads ``011001`` and its tapered image reads
``1101``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .fci import Determinant
from .fermion import ActiveSpace, FermionHamiltonian, FermionOperator, number_operator, to_fermion_operator
from .pauli import PauliString, PauliSum

__all__ = [
    "MappingSpec",
    "MappingError",
    "TaperedRegister",
    "map_operator",
    "map_state",
    "state_label",
    "electron_count_of_bitstring",
    "qubit_hamiltonian",
    "sector_parities_for",
    "format_ket",
]


class MappingError(ValueError):
    pass


def format_ket(index: int, n_qubits: int) -> str:
    return format(index, f"0{n_qubits}b") if n_qubits else ""


def sector_parities_for(n_electrons: int, n_up: int) -> tuple[int, int]:
    """Z eigenvalues of the (total parity, spin-up parity) qubits."""
    return (-1 if n_electrons % 2 else 1, -1 if n_up % 2 else 1)


@dataclass(frozen=True)
class MappingSpec:
    kind: str
    n_spin_orbitals: int
    taper: bool = False
    sector_parities: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("jordan_wigner", "parity"):
            raise MappingError(f"unknown mapping {self.kind!r}")
        if self.taper:
            if self.kind != "parity":
                raise MappingError("tapering requires the parity mapping")
            if self.n_spin_orbitals % 2:
                raise MappingError("tapering requires an even number of spin orbitals")
            if self.sector_parities is None:
                raise MappingError("tapering requires sector_parities")
            if any(v not in (1, -1) for v in self.sector_parities):
                raise MappingError("sector parities must be +1 or -1")
            object.__setattr__(self, "sector_parities", tuple(int(v) for v in self.sector_parities))

    @classmethod
    def for_space(cls, space: ActiveSpace, kind: str = "parity", taper: bool = True, sz: float = 0.0) -> "MappingSpec":
        n_up = int(round(space.n_electrons / 2 + sz))
        parities = sector_parities_for(space.n_electrons, n_up) if taper else None
        return cls(kind, space.n_spin_orbitals, taper, parities)

    @property
    def n_qubits(self) -> int:
        return self.n_spin_orbitals - (2 if self.taper else 0)

    @property
    def register(self) -> "TaperedRegister":
        return TaperedRegister.from_spec(self)


@dataclass(frozen=True)
class TaperedRegister:
    n_qubits_full: int
    n_qubits_reduced: int
    removed_positions: tuple[int, ...] = ()
    removed_values: tuple[int, ...] = ()  # bit value kept by each removed qubit
    kept_positions: tuple[int, ...] = field(default=())

    @classmethod
    def from_spec(cls, spec: MappingSpec) -> "TaperedRegister":
        n = spec.n_spin_orbitals
        if not spec.taper:
            return cls(n, n, (), (), tuple(range(n)))
        removed = (n // 2 - 1, n - 1)
        total, upp = spec.sector_parities
        values = (0 if upp == 1 else 1, 0 if total == 1 else 1)
        kept = tuple(j for j in range(n) if j not in removed)
        return cls(n, n - 2, removed, values, kept)

    def encode(self, full_index: int) -> int:
        for pos, val in zip(self.removed_positions, self.removed_values):
            if ((full_index >> pos) & 1) != val:
                raise MappingError("basis state lies outside the tapered symmetry sector")
        out = 0
        for k, pos in enumerate(self.kept_positions):
            out |= ((full_index >> pos) & 1) << k
        return out

    def decode(self, reduced_index: int) -> int:
        out = 0
        for k, pos in enumerate(self.kept_positions):
            out |= ((reduced_index >> k) & 1) << pos
        for pos, val in zip(self.removed_positions, self.removed_values):
            out |= val << pos
        return out


# -- ladder operators ----------------------------------------------------------

@lru_cache(maxsize=None)
def _ladder(kind: str, n: int, mode: int, creation: bool) -> PauliSum:
    sgn = -1j if creation else 1j
    if kind == "jordan_wigner":
        zmask = (1 << mode) - 1
        x = PauliString(n, 1 << mode, zmask)
        y = PauliString(n, 1 << mode, zmask | (1 << mode))
        return PauliSum(n, [(x, 0.5), (y, 0.5 * sgn)], tol=0.0)
    # parity encoding: qubit j holds the parity of modes 0..j
    upd = ((1 << n) - 1) ^ ((1 << (mode + 1)) - 1)  # X on qubits above mode
    zprev = (1 << (mode - 1)) if mode > 0 else 0
    x = PauliString(n, (1 << mode) | upd, zprev)
    y = PauliString(n, (1 << mode) | upd, 1 << mode)
    return PauliSum(n, [(x, 0.5), (y, 0.5 * sgn)], tol=0.0)


def _taper(full: PauliSum, reg: TaperedRegister) -> PauliSum:
    spec_vals = [1 - 2 * v for v in reg.removed_values]
    raw: dict[tuple[int, int], complex] = {}
    for x, z, c in full.raw_items():
        for pos, ev in zip(reg.removed_positions, spec_vals):
            if (x >> pos) & 1:
                raise MappingError(
                    "operator does not commute with the tapered parity symmetries"
                )
            if (z >> pos) & 1:
                c = c * ev
        nx = nz = 0
        for k, pos in enumerate(reg.kept_positions):
            nx |= ((x >> pos) & 1) << k
            nz |= ((z >> pos) & 1) << k
        raw[(nx, nz)] = raw.get((nx, nz), 0) + c
    return PauliSum._from_raw(reg.n_qubits_reduced, raw, full.tol)


def map_operator(op: FermionOperator, spec: MappingSpec, tol: float = 1e-12) -> PauliSum:
    """Encode a fermion operator as a Pauli sum (tapered when requested)."""
    n = spec.n_spin_orbitals
    if op.max_mode() >= n:
        raise MappingError(f"operator touches mode {op.max_mode()} beyond {n} spin orbitals")
    total: dict[tuple[int, int], complex] = {}
    for term, coeff in op.terms.items():
        acc = PauliSum.constant(n, 1.0)
        for mode, creation in term:
            acc = acc @ _ladder(spec.kind, n, mode, creation)
            if len(acc) == 0:
                break
        for x, z, c in acc.raw_items():
            total[(x, z)] = total.get((x, z), 0) + coeff * c
    full = PauliSum._from_raw(n, total, tol)
    if spec.taper:
        return _taper(full, spec.register)
    return full


def _encode_full(occ: int, kind: str, n: int) -> int:
    if kind == "jordan_wigner":
        return occ
    out, parity = 0, 0
    for j in range(n):
        parity ^= (occ >> j) & 1
        out |= parity << j
    return out


def map_state(det: Determinant, spec: MappingSpec) -> int:
    """Computational-basis index encoding ``det`` (tapered when requested)."""
    full = _encode_full(det.occupation, spec.kind, spec.n_spin_orbitals)
    if spec.taper:
        return spec.register.encode(full)
    return full


def state_label(det: Determinant, spec: MappingSpec) -> str:
    return format_ket(map_state(det, spec), spec.n_qubits)


def decode_state(index: int, spec: MappingSpec) -> Determinant:
    """Inverse of :func:`map_state` (basis index back to occupation bitmask)."""
    full = spec.register.decode(index) if spec.taper else index
    if spec.kind == "jordan_wigner":
        return Determinant(full)
    occ, prev = 0, 0
    for j in range(spec.n_spin_orbitals):
        b = (full >> j) & 1
        occ |= (b ^ prev) << j
        prev = b
    return Determinant(occ)


@lru_cache(maxsize=32)
def _number_diagonal(spec: MappingSpec) -> np.ndarray:
    n_op = map_operator(number_operator(spec.n_spin_orbitals), spec)
    return np.rint(n_op.diagonal().real).astype(int)


def electron_count_of_bitstring(bits: str | int, spec: MappingSpec) -> int:
    """Electron number of a measured basis state, read off the mapped number operator."""
    if isinstance(bits, str):
        if len(bits) != spec.n_qubits:
            raise MappingError(f"bitstring {bits!r} does not match {spec.n_qubits} qubits")
        bits = int(bits, 2)
    return int(_number_diagonal(spec)[bits])


def electron_counts(spec: MappingSpec) -> np.ndarray:
    """Electron number of every basis index of the register."""
    return _number_diagonal(spec).copy()


def qubit_hamiltonian(h: FermionHamiltonian, spec: MappingSpec) -> PauliSum:
    q = map_operator(to_fermion_operator(h), spec)
    if not q.is_hermitian(1e-9):
        raise MappingError("mapped Hamiltonian has complex coefficients")
    return q.real()
