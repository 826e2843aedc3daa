from __future__ import annotations

import numpy as np
import pytest

from defectvqe.fci import enumerate_sector, hamiltonian_matrix, solve_fci
from defectvqe.fermion import FermionOperator
from defectvqe.mapping import (
    MappingError,
    MappingSpec,
    decode_state,
    electron_count_of_bitstring,
    map_operator,
    map_state,
    qubit_hamiltonian,
    state_label,
)
from defectvqe.pauli import to_dense

from conftest import random_hamiltonian


def fock_spectrum(h):
    n_modes = h.space.n_spin_orbitals
    return np.sort(np.concatenate([solve_fci(h, n).energies for n in range(n_modes + 1)]))


CASES = [(1 + s % 3, s) for s in range(20)]


@pytest.mark.parametrize("n_spatial, seed", CASES)
@pytest.mark.parametrize("kind", ["jordan_wigner", "parity"])
def test_untapered_spectrum_equals_fock_space(n_spatial, seed, kind):
    h = random_hamiltonian(n_spatial, 1, seed)
    q = qubit_hamiltonian(h, MappingSpec(kind, 2 * n_spatial))
    assert np.allclose(np.linalg.eigvalsh(to_dense(q)), fock_spectrum(h), atol=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_tapered_register_holds_the_declared_sector(seed):
    h = random_hamiltonian(3, 4, seed)
    spec = MappingSpec.for_space(h.space, sz=0.0)
    dense = to_dense(qubit_hamiltonian(h, spec)).real
    idx = [i for i in range(1 << spec.n_qubits)
           if decode_state(i, spec).n_electrons == 4 and decode_state(i, spec).spin_z(3) == 0]
    block = np.linalg.eigvalsh(dense[np.ix_(idx, idx)])
    assert np.allclose(block, solve_fci(h, 4, 0.0).energies, atol=1e-10)
    # the full tapered spectrum is the union of parity-compatible sectors
    union = []
    for n_e in range(0, 7, 2):
        for n_up in range(max(0, n_e - 3), min(3, n_e) + 1):
            if n_up % 2 == 0:
                union.extend(solve_fci(h, n_e, n_up - n_e / 2).energies)
    assert np.allclose(np.linalg.eigvalsh(dense), np.sort(union), atol=1e-10)


def test_reference_ket_transformation(nv):
    full = MappingSpec("parity", 6)
    assert state_label(nv.reference, full) == "011001"
    assert state_label(nv.reference, MappingSpec.for_space(nv.space)) == "1101"


def test_state_encoding_round_trips(nv):
    spec = MappingSpec.for_space(nv.space)
    for det in enumerate_sector(nv.space, 4, 0.0):
        assert decode_state(map_state(det, spec), spec) == det


def test_electron_count_of_bitstring(nv_spec):
    assert electron_count_of_bitstring("1101", nv_spec) == 4


def test_tapering_rejects_symmetry_breaking_operators():
    spec = MappingSpec("parity", 4, True, (1, 1))
    with pytest.raises(MappingError):
        map_operator(FermionOperator.ladder(0, True), spec)


def test_taper_requires_parity_mapping():
    with pytest.raises(MappingError):
        MappingSpec("jordan_wigner", 4, True, (1, 1))


def test_vv_sector_parities(vv):
    assert MappingSpec.for_space(vv.space).sector_parities == (1, -1)
