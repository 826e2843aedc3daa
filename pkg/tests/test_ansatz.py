from __future__ import annotations

import numpy as np
import pytest
from scipy.linalg import expm

from defectvqe.ansatz import build_uccsd, compile_ansatz, pauli_gadget, prepare_reference
from defectvqe.circuit import Circuit, circuit_unitary, statevector
from defectvqe.fci import interleaved_sign, solve_fci
from defectvqe.fixtures import build_fixture
from defectvqe.mapping import MappingSpec, map_operator, map_state, qubit_hamiltonian
from defectvqe.pauli import PauliString, to_dense

THETAS = np.linspace(-np.pi, np.pi, 25)


@pytest.fixture(scope="module", params=["triplet-nv-shape", "triplet-vv-shape"])
def compiled(request):
    fx = build_fixture(request.param)
    spec = MappingSpec.for_space(fx.space)
    ans = build_uccsd(fx.space, fx.reference, True, fx.orbital_irreps)
    return fx, spec, ans, compile_ansatz(ans, spec)


def test_reference_preparation_flips_expected_qubits(nv, nv_spec):
    c = prepare_reference(nv.reference, nv_spec)
    assert sorted(g.qubits[0] for g in c.gates) == [0, 2, 3]
    assert abs(statevector(c)[map_state(nv.reference, nv_spec)]) == pytest.approx(1.0)


def test_symmetry_filter_leaves_one_parameter(compiled):
    _, _, ans, comp = compiled
    assert ans.n_parameters == 1
    assert comp.parameters == ["theta0"]


def test_unfiltered_parameter_counts(nv, vv):
    assert build_uccsd(nv.space, nv.reference).n_parameters == 8
    assert build_uccsd(vv.space, vv.reference).n_parameters == 15


def test_merged_circuit_is_shallow(compiled):
    _, _, _, comp = compiled
    assert comp.merged == ("theta0",)
    assert comp.depth() == 6
    assert comp.circuit.count("CNOT") == 2


def test_two_determinant_amplitudes_over_theta_grid(compiled):
    fx, spec, _, comp = compiled
    d1, d2 = fx.ground_determinants
    n = fx.space.n_spatial

    def amplitudes(t):
        psi = comp.state([t])
        return np.array([psi[map_state(d1, spec)] * interleaved_sign(d1, n),
                         psi[map_state(d2, spec)] * interleaved_sign(d2, n)])

    phase = amplitudes(0.0)[0]  # one global phase for the whole grid
    assert abs(phase) == pytest.approx(1.0)
    for t in THETAS:
        assert np.allclose(amplitudes(t) / phase, [np.cos(t / 2), np.sin(t / 2)], atol=1e-10)


def test_compiled_block_matches_exponential_of_generator(compiled):
    _, spec, ans, comp = compiled
    g = to_dense(map_operator(ans.excitations[0].generator(), spec))
    ref = statevector(prepare_reference(ans.reference, spec))
    for t in (0.3, 1.1, -2.0):
        assert np.allclose(comp.state([t]), expm(0.5 * t * g) @ ref, atol=1e-10)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_replication_leaves_noiseless_unitary_invariant(compiled, n):
    _, spec, ans, comp = compiled
    base = circuit_unitary(comp.circuit, comp.values([0.83]))
    rep = compile_ansatz(ans, spec, n)
    assert np.allclose(circuit_unitary(rep.circuit, rep.values([0.83])), base, atol=1e-10)
    assert rep.circuit.count("CNOT") == 2 * n


def test_replication_without_merge_also_invariant(nv, nv_spec):
    ans = build_uccsd(nv.space, nv.reference, True, nv.orbital_irreps)
    u1 = compile_ansatz(ans, nv_spec, 1, merge=False)
    u3 = compile_ansatz(ans, nv_spec, 3, merge=False)
    assert not u1.merged
    assert np.allclose(u1.state([0.4]), u3.state([0.4]), atol=1e-10)
    assert np.allclose(u1.state([0.4]), compile_ansatz(ans, nv_spec).state([0.4]), atol=1e-10)


def test_noiseless_energy_minimum_at_half_pi(compiled):
    fx, spec, _, comp = compiled
    h = to_dense(qubit_hamiltonian(fx.hamiltonian, spec))
    grid = np.arange(0, 24) * np.pi / 12
    energies = [np.real(np.vdot(comp.state([t]), h @ comp.state([t]))) for t in grid]
    assert grid[int(np.argmin(energies))] == pytest.approx(np.pi / 2)
    assert min(energies) == pytest.approx(solve_fci(fx.hamiltonian, sz=0).ground_energy, abs=1e-10)


def test_unfiltered_ansatz_compiles_and_reaches_reference(nv, nv_spec):
    ans = build_uccsd(nv.space, nv.reference)
    comp = compile_ansatz(ans, nv_spec)
    psi = comp.state(np.zeros(ans.n_parameters))
    assert abs(psi[map_state(nv.reference, nv_spec)]) == pytest.approx(1.0)


@pytest.mark.parametrize("label", ["X", "YZ", "XYZ", "ZZIY"])
def test_pauli_gadget_realizes_rotation(label):
    p = PauliString.from_label(label)
    n = len(label)
    u = circuit_unitary(Circuit(n, pauli_gadget(p, None, 1.0, angle=0.77)))
    assert np.allclose(u, expm(-0.5j * 0.77 * to_dense(p)), atol=1e-12)
