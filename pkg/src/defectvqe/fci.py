"""Exact diagonalization in fixed particle-number (and optionally S_z) sectors.

Determinants are bitmasks over spin orbitals.  The phase convention is
``|D> = a+_{j1} a+_{j2} ... a+_{jk} |vac>`` with ``j1 < j2 < ... < jk``,
i.e. creation operators applied to the vacuum in descending mode order.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from .fermion import ActiveSpace, FermionHamiltonian

__all__ = [
    "Determinant",
    "FciSolution",
    "SectorError",
    "enumerate_sector",
    "hamiltonian_matrix",
    "solve_fci",
    "excitation_energies",
    "apply_ladder",
    "interleaved_sign",
    "spectrum_csv",
    "FCI_BASIS_LIMIT",
]

FCI_BASIS_LIMIT = 5000


class SectorError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class Determinant:
    occupation: int

    @classmethod
    def from_modes(cls, modes) -> "Determinant":
        occ = 0
        for m in modes:
            occ |= 1 << m
        return cls(occ)

    @property
    def modes(self) -> tuple[int, ...]:
        occ, out, j = self.occupation, [], 0
        while occ:
            if occ & 1:
                out.append(j)
            occ >>= 1
            j += 1
        return tuple(out)

    @property
    def n_electrons(self) -> int:
        return bin(self.occupation).count("1")

    def spin_z(self, n_spatial: int) -> float:
        upmask = (1 << n_spatial) - 1
        n_up = bin(self.occupation & upmask).count("1")
        return 0.5 * (n_up - (self.n_electrons - n_up))

    def occupation_string(self, n_modes: int) -> str:
        """Occupations of modes 0..n-1 written left to right."""
        return "".join("1" if (self.occupation >> j) & 1 else "0" for j in range(n_modes))


def apply_ladder(occ: int, mode: int, creation: bool) -> tuple[int, int]:
    """Apply one ladder operator to a determinant bitmask.

    Returns ``(new_occ, sign)``; ``sign == 0`` when the result vanishes.
    """
    bit = 1 << mode
    if creation == bool(occ & bit):
        return occ, 0
    below = bin(occ & (bit - 1)).count("1")
    return occ ^ bit, -1 if below & 1 else 1


def _apply_string(occ: int, ops) -> tuple[int, int]:
    sign = 1
    for mode, creation in reversed(ops):
        occ, s = apply_ladder(occ, mode, creation)
        if s == 0:
            return occ, 0
        sign *= s
    return occ, sign


def interleaved_sign(det: Determinant, n_spatial: int) -> int:
    """Phase between spatial-major notation and the up-then-down ordering.

    Chemists usually write determinants orbital by orbital (``|a1 ā1 ex ēy>``,
    each spin-up partner before its spin-down partner).  Returns ``s`` such
    that the spatial-major product equals ``s`` times the canonical basis
    state.
    """
    order = sorted(det.modes, key=lambda m: (m % n_spatial, m // n_spatial))
    inversions = sum(1 for a, b in combinations(order, 2) if a > b)
    return -1 if inversions & 1 else 1


def enumerate_sector(space: ActiveSpace | int, n_e: int, sz: float | None = None) -> list[Determinant]:
    """All determinants with ``n_e`` electrons (and ``S_z`` when given), ascending."""
    n_spatial = space.n_spatial if isinstance(space, ActiveSpace) else int(space)
    n_modes = 2 * n_spatial
    if not 0 <= n_e <= n_modes:
        raise SectorError(f"{n_e} electrons cannot occupy {n_modes} spin orbitals")
    dets = []
    for modes in combinations(range(n_modes), n_e):
        d = Determinant.from_modes(modes)
        if sz is None or abs(d.spin_z(n_spatial) - sz) < 1e-9:
            dets.append(d)
    dets.sort()
    return dets


def hamiltonian_matrix(h: FermionHamiltonian, dets: list[Determinant]) -> np.ndarray:
    """Slater–Condon matrix over a determinant basis (includes ``e_core``)."""
    hso, g = h.spin_orbital_integrals()
    # antisymmetrized <pq||rs>
    gas = g - g.transpose(0, 1, 3, 2)
    dim = len(dets)
    mat = np.zeros((dim, dim))
    index = {d.occupation: k for k, d in enumerate(dets)}
    for col, dj in enumerate(dets):
        occ = dj.occupation
        modes = dj.modes
        # diagonal
        e = h.e_core
        for i in modes:
            e += hso[i, i]
        for a_, i in enumerate(modes):
            for j in modes[a_ + 1 :]:
                e += gas[i, j, i, j]
        mat[col, col] = e
        virt = [m for m in range(hso.shape[0]) if not (occ >> m) & 1]
        # singles i -> a
        for i in modes:
            for a in virt:
                new, s = _apply_string(occ, ((a, True), (i, False)))
                row = index.get(new)
                if row is None or s == 0:
                    continue
                v = hso[a, i] + sum(gas[a, k, i, k] for k in modes if k != i)
                mat[row, col] += s * v
        # doubles i<j -> a<b
        for i, j in combinations(modes, 2):
            for a, b in combinations(virt, 2):
                v = gas[a, b, i, j]
                if v == 0.0:
                    continue
                new, s = _apply_string(occ, ((a, True), (b, True), (j, False), (i, False)))
                row = index.get(new)
                if row is None or s == 0:
                    continue
                mat[row, col] += s * v
    return mat


@dataclass
class FciSolution:
    energies: np.ndarray
    states: np.ndarray  # columns are eigenvectors over ``basis``
    basis: list[Determinant]
    sector: tuple[int, float | None]

    @property
    def ground_energy(self) -> float:
        return float(self.energies[0])

    def ground_state(self) -> np.ndarray:
        return self.states[:, 0]

    def amplitude(self, level: int, det: Determinant) -> float:
        return float(self.states[self.basis.index(det), level])


def solve_fci(
    h: FermionHamiltonian,
    n_e: int | None = None,
    sz: float | None = None,
    limit: int = FCI_BASIS_LIMIT,
) -> FciSolution:
    """Dense eigen-decomposition of ``h`` in the requested sector."""
    if n_e is None:
        n_e = h.space.n_electrons
    n_modes = 2 * h.n_spatial
    size_bound = comb(n_modes, n_e) if 0 <= n_e <= n_modes else 0
    if size_bound > limit and sz is None:
        raise SectorError(f"sector of {size_bound} determinants exceeds the limit of {limit}")
    dets = enumerate_sector(h.space, n_e, sz)
    if not dets:
        raise SectorError(f"no determinants with n_e={n_e}, S_z={sz}")
    if len(dets) > limit:
        raise SectorError(f"sector of {len(dets)} determinants exceeds the limit of {limit}")
    mat = hamiltonian_matrix(h, dets)
    if not np.allclose(mat, mat.T, atol=1e-9):
        raise RuntimeError("Slater–Condon matrix is not symmetric")
    w, v = np.linalg.eigh(0.5 * (mat + mat.T))
    # deterministic eigenvector signs: largest-magnitude component positive
    for k in range(v.shape[1]):
        pivot = np.argmax(np.abs(v[:, k]) + 1e-12 * np.arange(v.shape[0])[::-1])
        if v[pivot, k] < 0:
            v[:, k] *= -1
    return FciSolution(w, v, dets, (n_e, sz))


def excitation_energies(sol: FciSolution | np.ndarray) -> np.ndarray:
    energies = np.asarray(sol.energies if isinstance(sol, FciSolution) else sol, dtype=float)
    if energies.size < 2:
        raise ValueError("need at least two levels for excitation energies")
    return energies[1:] - energies[0]


def spectrum_csv(energies) -> str:
    """``level,energy_eV,gap_eV`` rows."""
    energies = np.asarray(energies, dtype=float)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["level", "energy_eV", "gap_eV"])
    for k, e in enumerate(energies):
        w.writerow([k, repr(float(e)), repr(float(e - energies[0]))])
    return buf.getvalue()
