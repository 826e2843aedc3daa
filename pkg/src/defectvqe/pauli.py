"""Pauli strings, weighted Pauli sums and qubit-wise commuting measurement groups.

Qubit ``j`` is bit ``j`` of a computational-basis index (little endian).  In
text form a string is written with qubit 0 leftmost, e.g. ``"XIYZ"`` has an
``X`` on qubit 0 and a ``Z`` on qubit 3.

Internally a string is a pair of bitmasks ``(x, z)`` denoting the Hermitian
operator ``i**popcount(x & z) * X**x Z**z`` (so ``x=z=1`` on a qubit is ``Y``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np

__all__ = [
    "PauliString",
    "PauliSum",
    "MeasurementGroup",
    "multiply",
    "to_dense",
    "group_commuting",
    "DENSE_QUBIT_LIMIT",
]

DENSE_QUBIT_LIMIT = 10
PRUNE_TOLERANCE = 1e-12

_PHASES = (1, 1j, -1, -1j)
_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_BITS_LETTER = {v: k for k, v in _LETTER_BITS.items()}


def _popcount(v: int) -> int:
    return bin(v).count("1")


def _product(x1: int, z1: int, x2: int, z2: int) -> tuple[int, int, int]:
    """Return ``(x, z, k)`` with ``P(x1,z1) P(x2,z2) = i**k P(x, z)``."""
    x3 = x1 ^ x2
    z3 = z1 ^ z2
    k = (
        _popcount(x1 & z1)
        + _popcount(x2 & z2)
        + 2 * _popcount(z1 & x2)
        - _popcount(x3 & z3)
    ) % 4
    return x3, z3, k


@dataclass(frozen=True)
class PauliString:
    """A tensor product of single-qubit Paulis with a phase in {1, i, -1, -i}.

    ``phase`` is stored as the exponent ``k`` of ``i**k``.
    """

    n_qubits: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self) -> None:
        if self.n_qubits < 0:
            raise ValueError("n_qubits must be non-negative")
        limit = 1 << self.n_qubits
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValueError("Pauli bitmask exceeds register size")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def from_label(cls, label: str, phase: int = 0) -> "PauliString":
        x = z = 0
        for j, ch in enumerate(label.upper()):
            try:
                bx, bz = _LETTER_BITS[ch]
            except KeyError:
                raise ValueError(f"invalid Pauli letter {ch!r} in {label!r}") from None
            x |= bx << j
            z |= bz << j
        return cls(len(label), x, z, phase)

    @classmethod
    def identity(cls, n_qubits: int) -> "PauliString":
        return cls(n_qubits)

    @classmethod
    def single(cls, n_qubits: int, qubit: int, letter: str) -> "PauliString":
        bx, bz = _LETTER_BITS[letter]
        return cls(n_qubits, bx << qubit, bz << qubit)

    @property
    def letters(self) -> str:
        return "".join(
            _BITS_LETTER[((self.x >> j) & 1, (self.z >> j) & 1)]
            for j in range(self.n_qubits)
        )

    @property
    def coefficient(self) -> complex:
        return _PHASES[self.phase]

    @property
    def support(self) -> int:
        return self.x | self.z

    def normalized(self) -> "PauliString":
        return PauliString(self.n_qubits, self.x, self.z, 0)

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def is_diagonal(self) -> bool:
        return self.x == 0

    def letter(self, qubit: int) -> str:
        return _BITS_LETTER[((self.x >> qubit) & 1, (self.z >> qubit) & 1)]

    def commutes(self, other: "PauliString") -> bool:
        return (_popcount(self.x & other.z) + _popcount(self.z & other.x)) % 2 == 0

    def qubitwise_commutes(self, other: "PauliString") -> bool:
        overlap = self.support & other.support
        return ((self.x ^ other.x) & overlap) == 0 and ((self.z ^ other.z) & overlap) == 0

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def __str__(self) -> str:
        sign = ("", "i", "-", "-i")[self.phase]
        return f"{sign}{self.letters}"


def multiply(a: PauliString, b: PauliString) -> PauliString:
    """Operator product ``a @ b`` as a single phased Pauli string."""
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"qubit-count mismatch: {a.n_qubits} vs {b.n_qubits}")
    x, z, k = _product(a.x, a.z, b.x, b.z)
    return PauliString(a.n_qubits, x, z, a.phase + b.phase + k)


def _apply_columns(n_qubits: int, x: int, z: int) -> tuple[np.ndarray, np.ndarray]:
    """Row indices and values of the (single nonzero per column) Pauli matrix."""
    dim = 1 << n_qubits
    cols = np.arange(dim)
    zbits = cols & z
    parity = np.zeros(dim, dtype=np.int64)
    for j in range(n_qubits):
        parity ^= (zbits >> j) & 1
    sign = 1 - 2 * parity
    vals = _PHASES[_popcount(x & z) % 4] * sign
    return cols ^ x, vals.astype(complex)


class PauliSum:
    """A weighted sum of Pauli strings, ``sum_i g_i P_i``.

    Coefficients are stored as complex numbers so anti-Hermitian generators
    can be represented; Hermitian sums carry real coefficients (see
    :meth:`is_hermitian`).  Terms whose magnitude falls below ``tol`` are
    pruned.
    """

    __slots__ = ("n_qubits", "_terms", "tol")

    def __init__(
        self,
        n_qubits: int,
        terms: Mapping[PauliString, complex] | Iterable[tuple[PauliString, complex]] | None = None,
        tol: float = PRUNE_TOLERANCE,
    ) -> None:
        self.n_qubits = n_qubits
        self.tol = tol
        self._terms: dict[tuple[int, int], complex] = {}
        if terms is None:
            return
        items = terms.items() if isinstance(terms, Mapping) else terms
        for p, c in items:
            if p.n_qubits != n_qubits:
                raise ValueError("term qubit count does not match the sum")
            key = (p.x, p.z)
            self._terms[key] = self._terms.get(key, 0) + c * p.coefficient
        self._prune()

    # -- construction helpers -------------------------------------------------
    @classmethod
    def _from_raw(cls, n_qubits: int, raw: dict[tuple[int, int], complex], tol: float = PRUNE_TOLERANCE) -> "PauliSum":
        out = cls(n_qubits, tol=tol)
        out._terms = raw
        out._prune()
        return out

    @classmethod
    def constant(cls, n_qubits: int, value: complex) -> "PauliSum":
        return cls._from_raw(n_qubits, {(0, 0): complex(value)})

    @classmethod
    def from_labels(cls, items: Mapping[str, complex] | Iterable[tuple[str, complex]]) -> "PauliSum":
        pairs = list(items.items() if isinstance(items, Mapping) else items)
        if not pairs:
            raise ValueError("cannot infer qubit count from an empty term list")
        n = len(pairs[0][0])
        return cls(n, [(PauliString.from_label(lab), c) for lab, c in pairs])

    def _prune(self) -> None:
        tol = self.tol
        self._terms = {k: v for k, v in self._terms.items() if abs(v) > tol}

    # -- views ----------------------------------------------------------------
    @property
    def terms(self) -> dict[PauliString, complex]:
        return {PauliString(self.n_qubits, x, z): c for (x, z), c in self._terms.items()}

    def raw_items(self) -> Iterator[tuple[int, int, complex]]:
        for (x, z), c in self._terms.items():
            yield x, z, c

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[tuple[PauliString, complex]]:
        return iter(self.terms.items())

    def coefficient(self, p: PauliString | str) -> complex:
        if isinstance(p, str):
            p = PauliString.from_label(p)
        return self._terms.get((p.x, p.z), 0.0) * p.coefficient.conjugate()

    def identity_coefficient(self) -> complex:
        return self._terms.get((0, 0), 0.0)

    def is_hermitian(self, atol: float = 1e-10) -> bool:
        return all(abs(c.imag) <= atol for c in self._terms.values())

    def is_antihermitian(self, atol: float = 1e-10) -> bool:
        return all(abs(c.real) <= atol for c in self._terms.values())

    def real(self) -> "PauliSum":
        return PauliSum._from_raw(self.n_qubits, {k: complex(v.real) for k, v in self._terms.items()}, self.tol)

    def diagonal_part(self) -> "PauliSum":
        return PauliSum._from_raw(self.n_qubits, {k: v for k, v in self._terms.items() if k[0] == 0}, self.tol)

    # -- algebra --------------------------------------------------------------
    def _check(self, other: "PauliSum") -> None:
        if other.n_qubits != self.n_qubits:
            raise ValueError(f"qubit-count mismatch: {self.n_qubits} vs {other.n_qubits}")

    def __add__(self, other: "PauliSum | complex") -> "PauliSum":
        if not isinstance(other, PauliSum):
            other = PauliSum.constant(self.n_qubits, other)
        self._check(other)
        raw = dict(self._terms)
        for k, v in other._terms.items():
            raw[k] = raw.get(k, 0) + v
        return PauliSum._from_raw(self.n_qubits, raw, self.tol)

    __radd__ = __add__

    def __neg__(self) -> "PauliSum":
        return self * -1

    def __sub__(self, other: "PauliSum | complex") -> "PauliSum":
        return self + (-other)

    def __mul__(self, other: "PauliSum | complex") -> "PauliSum":
        if not isinstance(other, PauliSum):
            return PauliSum._from_raw(self.n_qubits, {k: v * other for k, v in self._terms.items()}, self.tol)
        return self @ other

    def __rmul__(self, other: complex) -> "PauliSum":
        return self * other

    def __matmul__(self, other: "PauliSum") -> "PauliSum":
        self._check(other)
        raw: dict[tuple[int, int], complex] = {}
        for (x1, z1), c1 in self._terms.items():
            for (x2, z2), c2 in other._terms.items():
                x, z, k = _product(x1, z1, x2, z2)
                raw[(x, z)] = raw.get((x, z), 0) + c1 * c2 * _PHASES[k]
        return PauliSum._from_raw(self.n_qubits, raw, self.tol)

    def adjoint(self) -> "PauliSum":
        return PauliSum._from_raw(self.n_qubits, {k: v.conjugate() for k, v in self._terms.items()}, self.tol)

    def commutator(self, other: "PauliSum") -> "PauliSum":
        return self @ other - other @ self

    def allclose(self, other: "PauliSum", atol: float = 1e-10) -> bool:
        keys = set(self._terms) | set(other._terms)
        return all(abs(self._terms.get(k, 0) - other._terms.get(k, 0)) <= atol for k in keys)

    # -- evaluation -----------------------------------------------------------
    def diagonal(self) -> np.ndarray:
        """Diagonal of the matrix (only the I/Z terms contribute)."""
        dim = 1 << self.n_qubits
        out = np.zeros(dim, dtype=complex)
        for (x, z), c in self._terms.items():
            if x == 0:
                _, vals = _apply_columns(self.n_qubits, 0, z)
                out += c * vals
        return out

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """Matrix-vector product without forming the dense matrix."""
        out = np.zeros_like(psi, dtype=complex)
        for (x, z), c in self._terms.items():
            rows, vals = _apply_columns(self.n_qubits, x, z)
            out[rows] += c * vals * psi
        return out

    def expectation(self, psi: np.ndarray) -> complex:
        return complex(np.vdot(psi, self.apply(psi)))

    # -- text serialization -----------------------------------------------------
    def to_text(self) -> str:
        """One ``<coeff> <letters>`` line per term, sorted by letters."""
        lines = []
        for p, c in sorted(self.terms.items(), key=lambda kv: kv[0].letters):
            if abs(c.imag) > 0:
                coeff = f"({c.real:.17g}{c.imag:+.17g}j)"
            else:
                coeff = f"{c.real:.17g}"
            lines.append(f"{coeff} {p.letters}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str, n_qubits: int | None = None) -> "PauliSum":
        pairs = []
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected '<coeff> <letters>'")
            coeff = complex(parts[0]) if "j" in parts[0] else float(parts[0])
            pairs.append((PauliString.from_label(parts[1]), coeff))
        if n_qubits is None:
            if not pairs:
                raise ValueError("cannot infer qubit count from empty text")
            n_qubits = pairs[0][0].n_qubits
        return cls(n_qubits, pairs)

    def __repr__(self) -> str:
        return f"PauliSum(n_qubits={self.n_qubits}, n_terms={len(self)})"


def to_dense(p: PauliSum | PauliString, limit: int = DENSE_QUBIT_LIMIT) -> np.ndarray:
    """Dense ``2**N x 2**N`` matrix of a Pauli sum (or single string)."""
    if isinstance(p, PauliString):
        p = PauliSum(p.n_qubits, [(p, 1.0)], tol=0.0)
    n = p.n_qubits
    if n > limit:
        raise ValueError(f"{n} qubits exceeds the dense limit of {limit}")
    dim = 1 << n
    mat = np.zeros((dim, dim), dtype=complex)
    cols = np.arange(dim)
    for x, z, c in p.raw_items():
        rows, vals = _apply_columns(n, x, z)
        mat[rows, cols] += c * vals
    return mat


@dataclass
class MeasurementGroup:
    """Qubit-wise commuting strings measured from one rotated circuit.

    ``basis_rotation`` holds one of ``"Z"``, ``"X"``, ``"Y"`` per qubit.
    """

    members: list[PauliString]
    basis_rotation: tuple[str, ...]
    is_diagonal: bool = field(default=False)

    @property
    def n_qubits(self) -> int:
        return len(self.basis_rotation)


def _basis_of(members: list[PauliString], n_qubits: int) -> tuple[str, ...]:
    basis = ["Z"] * n_qubits
    for p in members:
        for j in range(n_qubits):
            ch = p.letter(j)
            if ch != "I":
                basis[j] = ch
    return tuple(basis)


def group_commuting(h: PauliSum) -> list[MeasurementGroup]:
    """Greedy qubit-wise commuting partition of the non-identity terms.

    All I/Z-only strings go into a single leading diagonal group (so electron
    number post-selection always has a home); the remaining strings are
    placed greedily in descending ``|g|`` order.
    """
    items = [(p, c) for p, c in h.terms.items() if not p.is_identity()]
    if not items and len(h) == 0:
        raise ValueError("cannot group an empty Pauli sum")
    items.sort(key=lambda pc: (-abs(pc[1]), pc[0].letters))
    n = h.n_qubits
    diagonal = [p for p, _ in items if p.is_diagonal()]
    groups: list[MeasurementGroup] = []
    if diagonal:
        groups.append(MeasurementGroup(diagonal, ("Z",) * n, True))
    buckets: list[list[PauliString]] = []
    for p, _ in items:
        if p.is_diagonal():
            continue
        for bucket in buckets:
            if all(p.qubitwise_commutes(q) for q in bucket):
                bucket.append(p)
                break
        else:
            buckets.append([p])
    for bucket in buckets:
        groups.append(MeasurementGroup(bucket, _basis_of(bucket, n), False))
    return groups
