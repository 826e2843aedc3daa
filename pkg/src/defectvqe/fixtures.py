"""Built-in model Hamiltonians with frozen integrals (eV).

Each triplet fixture is written in a C2v-like orbital basis: one or two
totally symmetric orbitals below a degenerate ``(ex, ey)`` pair.  The
``(ex, ey)`` block uses the rotationally invariant parametrization
``(xx|xx) = (yy|yy) = A``, ``(xy|xy) = C``, ``(xx|yy) = A - 2C`` so the
exchange integral ``C`` favors the open-shell triplet.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fci import Determinant
from .fermion import ActiveSpace, FermionHamiltonian

__all__ = ["Fixture", "FIXTURES", "build_fixture", "IRREP_CODES"]

# Abelian irreps as bit codes; the direct product is bitwise XOR.
IRREP_CODES = {"A1": 0, "B1": 1, "B2": 2, "A2": 3}


@dataclass(frozen=True)
class Fixture:
    name: str
    hamiltonian: FermionHamiltonian
    reference: Determinant
    sz: float
    orbital_labels: tuple[str, ...]
    orbital_irreps: tuple[int, ...]
    description: str = ""
    ground_determinants: tuple[Determinant, ...] = field(default=())

    @property
    def space(self) -> ActiveSpace:
        return self.hamiltonian.space


def _h2_from_unique(n: int, entries: dict[tuple[int, int, int, int], float]) -> np.ndarray:
    h2 = np.zeros((n, n, n, n))
    for (p, q, r, s), v in entries.items():
        for a, b, c, d in {(p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r)}:
            h2[a, b, c, d] = h2[c, d, a, b] = v
    return h2


def _eg_block(x: int, y: int, a: float, c: float) -> dict:
    return {(x, x, x, x): a, (y, y, y, y): a, (x, x, y, y): a - 2 * c, (x, y, x, y): c}


def _hubbard1() -> Fixture:
    space = ActiveSpace(1, 2)
    h = FermionHamiltonian(space, [[-1.0]], _h2_from_unique(1, {(0, 0, 0, 0): 0.5}), 0.0)
    return Fixture(
        "hubbard1", h, Determinant.from_modes((0, 1)), 0.0, ("s",), (0,),
        "one orbital, two electrons: h = -1, U = 0.5; ground energy -1.5",
        (Determinant.from_modes((0, 1)),),
    )


def _triplet_nv() -> Fixture:
    # orbitals: a1 = 0, ex = 1, ey = 2
    space = ActiveSpace(3, 4, multiplicity_hint=3)
    h1 = np.diag([-3.5, -1.0, -1.0])
    unique = {(0, 0, 0, 0): 3.0, (0, 0, 1, 1): 2.0, (0, 0, 2, 2): 2.0, (0, 1, 0, 1): 0.4, (0, 2, 0, 2): 0.4}
    unique.update(_eg_block(1, 2, 2.5, 0.25))
    h = FermionHamiltonian(space, h1, _h2_from_unique(3, unique), 0.0, {"ms2": 0})
    d1 = Determinant.from_modes((0, 1, 3, 5))  # a1 ā1 ex ēy
    d2 = Determinant.from_modes((0, 2, 3, 4))  # a1 ā1 ey ēx
    return Fixture(
        "triplet-nv-shape", h, d1, 0.0, ("a1", "ex", "ey"), (0, 1, 2),
        "4 electrons in (a1, ex, ey); exchange C = 0.25 makes the S_z = 0 triplet the ground state",
        (d1, d2),
    )


def _triplet_vv() -> Fixture:
    # orbitals: a1' = 0, a1 = 1, ex = 2, ey = 3
    space = ActiveSpace(4, 6, multiplicity_hint=3)
    h1 = np.diag([-5.5, -3.5, -1.0, -1.0])
    unique = {
        (0, 0, 0, 0): 3.2, (1, 1, 1, 1): 3.0, (0, 0, 1, 1): 2.1, (0, 1, 0, 1): 0.35,
        (1, 1, 2, 2): 2.0, (1, 1, 3, 3): 2.0, (1, 2, 1, 2): 0.4, (1, 3, 1, 3): 0.4,
        (0, 0, 2, 2): 1.8, (0, 0, 3, 3): 1.8, (0, 2, 0, 2): 0.3, (0, 3, 0, 3): 0.3,
    }
    unique.update(_eg_block(2, 3, 2.5, 0.2))
    h = FermionHamiltonian(space, h1, _h2_from_unique(4, unique), 0.0, {"ms2": 0})
    d1 = Determinant.from_modes((0, 1, 2, 4, 5, 7))
    d2 = Determinant.from_modes((0, 1, 3, 4, 5, 6))
    return Fixture(
        "triplet-vv-shape", h, d1, 0.0, ("a1'", "a1", "ex", "ey"), (0, 0, 1, 2),
        "6 electrons in (a1', a1, ex, ey); exchange C = 0.2 makes the S_z = 0 triplet the ground state",
        (d1, d2),
    )


FIXTURES = {"hubbard1": _hubbard1, "triplet-nv-shape": _triplet_nv, "triplet-vv-shape": _triplet_vv}


def build_fixture(name: str) -> Fixture:
    try:
        return FIXTURES[name]()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(FIXTURES)}") from None
