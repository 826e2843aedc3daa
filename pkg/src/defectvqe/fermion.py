"""Second-quantized operators and active-space Hamiltonians.

Spin orbitals are numbered spin-up block first: spatial orbital ``p`` with
spin up is mode ``p`` and with spin down is mode ``p + n_spatial``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np

__all__ = [
    "ActiveSpace",
    "FermionHamiltonian",
    "FermionOperator",
    "number_operator",
    "spin_z_operator",
    "to_fermion_operator",
]

Ladder = tuple[int, bool]  # (mode, is_creation)
Term = tuple[Ladder, ...]


@dataclass(frozen=True)
class ActiveSpace:
    n_spatial: int
    n_electrons: int
    multiplicity_hint: int | None = None

    def __post_init__(self) -> None:
        if self.n_spatial <= 0:
            raise ValueError("n_spatial must be positive")
        if not 0 < self.n_electrons <= 2 * self.n_spatial:
            raise ValueError(
                f"{self.n_electrons} electrons do not fit {self.n_spatial} spatial orbitals"
            )

    @property
    def n_spin_orbitals(self) -> int:
        return 2 * self.n_spatial


class FermionOperator:
    """Linear combination of products of creation/annihilation operators.

    A term is a tuple of ``(mode, is_creation)`` pairs read left to right as
    an operator product; the empty tuple is the identity.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Term, complex] | Iterable[tuple[Term, complex]] | None = None) -> None:
        self.terms: dict[Term, complex] = {}
        if terms is None:
            return
        items = terms.items() if isinstance(terms, Mapping) else terms
        for t, c in items:
            t = tuple((int(m), bool(d)) for m, d in t)
            self.terms[t] = self.terms.get(t, 0) + c

    @classmethod
    def identity(cls, coeff: complex = 1.0) -> "FermionOperator":
        return cls({(): coeff})

    @classmethod
    def ladder(cls, mode: int, creation: bool, coeff: complex = 1.0) -> "FermionOperator":
        return cls({((mode, creation),): coeff})

    @classmethod
    def product(cls, ops: Iterable[tuple[int, bool]], coeff: complex = 1.0) -> "FermionOperator":
        return cls({tuple(ops): coeff})

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self) -> Iterator[tuple[Term, complex]]:
        return iter(self.terms.items())

    def max_mode(self) -> int:
        return max((m for t in self.terms for m, _ in t), default=-1)

    def __add__(self, other: "FermionOperator | complex") -> "FermionOperator":
        if not isinstance(other, FermionOperator):
            other = FermionOperator.identity(other)
        out = FermionOperator(self.terms)
        for t, c in other.terms.items():
            out.terms[t] = out.terms.get(t, 0) + c
        return out

    __radd__ = __add__

    def __neg__(self) -> "FermionOperator":
        return self * -1

    def __sub__(self, other: "FermionOperator | complex") -> "FermionOperator":
        return self + (-other)

    def __mul__(self, other: "FermionOperator | complex") -> "FermionOperator":
        if isinstance(other, FermionOperator):
            out = FermionOperator()
            for t1, c1 in self.terms.items():
                for t2, c2 in other.terms.items():
                    t = t1 + t2
                    out.terms[t] = out.terms.get(t, 0) + c1 * c2
            return out
        return FermionOperator({t: c * other for t, c in self.terms.items()})

    def __rmul__(self, other: complex) -> "FermionOperator":
        return self * other

    def adjoint(self) -> "FermionOperator":
        return FermionOperator(
            {tuple((m, not d) for m, d in reversed(t)): np.conj(c) for t, c in self.terms.items()}
        )

    def is_normal_ordered(self) -> bool:
        for t in self.terms:
            seen_annihilator = False
            for m, d in t:
                if not d:
                    seen_annihilator = True
                elif seen_annihilator:
                    return False
        return True

    def normal_ordered(self, tol: float = 1e-14) -> "FermionOperator":
        """Canonical form: creators left of annihilators, each block in descending mode order."""
        out: dict[Term, complex] = {}
        for t, c in self.terms.items():
            for nt, nc in _normal_order_term(list(t), c):
                out[nt] = out.get(nt, 0) + nc
        return FermionOperator({t: c for t, c in out.items() if abs(c) > tol})

    def allclose(self, other: "FermionOperator", atol: float = 1e-12) -> bool:
        a = self.normal_ordered().terms
        b = other.normal_ordered().terms
        return all(abs(a.get(k, 0) - b.get(k, 0)) <= atol for k in set(a) | set(b))

    def particle_change(self) -> set[int]:
        return {sum(1 if d else -1 for _, d in t) for t in self.terms}

    def __repr__(self) -> str:
        return f"FermionOperator(n_terms={len(self)})"


def _normal_order_term(ops: list[Ladder], coeff: complex) -> list[tuple[Term, complex]]:
    # Insertion sort by (creation first, higher mode first); anticommutators spawn extra terms.
    def key(op: Ladder) -> tuple[int, int]:
        m, d = op
        return (0 if d else 1, -m)

    results: list[tuple[Term, complex]] = []
    stack = [(ops, coeff)]
    while stack:
        cur, c = stack.pop()
        cur = list(cur)
        done = True
        for i in range(1, len(cur)):
            j = i
            while j > 0 and key(cur[j]) < key(cur[j - 1]):
                a, b = cur[j - 1], cur[j]
                if a[0] == b[0] and a[1] != b[1]:
                    # a b = delta - b a  for {a_p, a_p^dag} = 1
                    stack.append((cur[: j - 1] + cur[j + 1 :], c))
                cur[j - 1], cur[j] = b, a
                c = -c
                j -= 1
        for i in range(1, len(cur)):
            if cur[i] == cur[i - 1]:
                done = False
                break
        if done:
            results.append((tuple(cur), c))
    return results


def number_operator(space: ActiveSpace | int) -> FermionOperator:
    """Total electron number ``sum_j a_j^dag a_j`` over all spin orbitals."""
    n_modes = space.n_spin_orbitals if isinstance(space, ActiveSpace) else int(space)
    return FermionOperator({((j, True), (j, False)): 1.0 for j in range(n_modes)})


def spin_z_operator(n_spatial: int) -> FermionOperator:
    terms: dict[Term, complex] = {}
    for p in range(n_spatial):
        terms[((p, True), (p, False))] = 0.5
        terms[((p + n_spatial, True), (p + n_spatial, False))] = -0.5
    return FermionOperator(terms)


@dataclass
class FermionHamiltonian:
    """Active-space Hamiltonian with real integrals in eV.

    ``h2[p, q, r, s]`` is the chemists'-notation integral ``(pq|rs)``.
    """

    space: ActiveSpace
    h1: np.ndarray
    h2: np.ndarray
    e_core: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = self.space.n_spatial
        self.h1 = np.asarray(self.h1, dtype=float)
        self.h2 = np.asarray(self.h2, dtype=float)
        if self.h1.shape != (n, n) or self.h2.shape != (n, n, n, n):
            raise ValueError("integral shapes do not match the active space")
        if not (np.all(np.isfinite(self.h1)) and np.all(np.isfinite(self.h2)) and np.isfinite(self.e_core)):
            raise ValueError("integrals must be finite")
        if not np.allclose(self.h1, self.h1.T, atol=1e-12):
            raise ValueError("h1 is not symmetric")
        h2 = self.h2
        for perm in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)):
            if not np.allclose(h2, h2.transpose(perm), atol=1e-12):
                raise ValueError("h2 lacks 8-fold permutational symmetry")

    @property
    def n_spatial(self) -> int:
        return self.space.n_spatial

    def spin_orbital_integrals(self) -> tuple[np.ndarray, np.ndarray]:
        """One-body ``h[p, q]`` and physicists' two-body ``<pq|rs>`` over spin orbitals."""
        n = self.n_spatial
        m = 2 * n
        spatial = np.arange(m) % n
        spin = np.arange(m) // n
        same = spin[:, None] == spin[None, :]
        h = np.where(same, self.h1[np.ix_(spatial, spatial)], 0.0)
        # <pq|rs> = (pr|qs) delta(s_p, s_r) delta(s_q, s_s)
        g = self.h2[np.ix_(spatial, spatial, spatial, spatial)].transpose(0, 2, 1, 3)
        mask = same[:, None, :, None] & same[None, :, None, :]
        return h, np.where(mask, g, 0.0)

    def permuted(self, order: Iterable[int]) -> "FermionHamiltonian":
        """Relabel spatial orbitals: new orbital ``k`` is old orbital ``order[k]``."""
        idx = np.asarray(list(order))
        h1 = self.h1[np.ix_(idx, idx)]
        h2 = self.h2[np.ix_(idx, idx, idx, idx)]
        return FermionHamiltonian(self.space, h1, h2, self.e_core, dict(self.metadata))

    def shifted(self, c: float) -> "FermionHamiltonian":
        """Hamiltonian ``H + c * N`` (adds ``c`` to the one-body diagonal)."""
        return FermionHamiltonian(
            self.space, self.h1 + c * np.eye(self.n_spatial), self.h2, self.e_core, dict(self.metadata)
        )


def to_fermion_operator(h: FermionHamiltonian, tol: float = 0.0) -> FermionOperator:
    """Second-quantized form of ``h`` with the up-then-down mode ordering."""
    n = h.n_spatial
    terms: dict[Term, complex] = {}
    if h.e_core != 0:
        terms[()] = h.e_core
    for s in (0, n):
        for p in range(n):
            for q in range(n):
                v = h.h1[p, q]
                if abs(v) > tol:
                    terms[((p + s, True), (q + s, False))] = v
    for p, q, r, s in np.ndindex(n, n, n, n):
        v = h.h2[p, q, r, s]
        if abs(v) <= tol:
            continue
        for sig in (0, n):
            for tau in (0, n):
                a, b, c, d = p + sig, r + tau, s + tau, q + sig
                if a == b or c == d:
                    continue
                t = ((a, True), (b, True), (c, False), (d, False))
                terms[t] = terms.get(t, 0) + 0.5 * v
    return FermionOperator(terms)
