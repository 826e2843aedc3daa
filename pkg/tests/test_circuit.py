from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from defectvqe.circuit import (
    Circuit,
    DensityState,
    Gate,
    NoiseModel,
    UnboundParameterError,
    circuit_unitary,
    derive_rng,
    expectation,
    probabilities,
    run,
    sample,
    statevector,
)
from defectvqe.pauli import PauliSum, group_commuting, to_dense

GATE_NAMES_1Q = ["H", "X", "Y", "Z", "RX", "RY", "RZ"]


def random_circuit(n, depth, seed):
    rng = np.random.default_rng(seed)
    c = Circuit(n)
    for _ in range(depth):
        if n > 1 and rng.random() < 0.4:
            a, b = rng.choice(n, 2, replace=False)
            c.append(Gate("CNOT", (int(a), int(b))))
        else:
            name = GATE_NAMES_1Q[rng.integers(len(GATE_NAMES_1Q))]
            angle = float(rng.uniform(-np.pi, np.pi)) if name.startswith("R") else None
            c.append(Gate(name, (int(rng.integers(n)),), angle))
    return c


def test_bell_state():
    c = Circuit(2, [Gate("H", (0,)), Gate("CNOT", (0, 1))])
    psi = statevector(c)
    assert np.allclose(psi, np.array([1, 0, 0, 1]) / math.sqrt(2))


def test_qubit_zero_is_least_significant_bit():
    psi = statevector(Circuit(3, [Gate("X", (0,))]))
    assert np.argmax(np.abs(psi)) == 1


@given(st.integers(0, 10_000))
@settings(max_examples=25, deadline=None)
def test_noiseless_density_matches_statevector(seed):
    c = random_circuit(3, 12, seed)
    psi = statevector(c)
    assert np.allclose(run(c).rho, np.outer(psi, psi.conj()), atol=1e-12)


@given(st.integers(0, 10_000), st.floats(0.0, 0.2), st.floats(0.0, 0.2))
@settings(max_examples=25, deadline=None)
def test_noisy_evolution_preserves_trace_and_positivity(seed, p1, p2):
    noise = NoiseModel(p1=p1, p2=p2)
    state = run(random_circuit(3, 12, seed), noise=noise)
    assert state.is_valid()
    assert state.trace() == pytest.approx(1.0, abs=1e-12)


def test_damping_channels_keep_state_valid():
    noise = NoiseModel(p1=0.01, p2=0.02, t1={0: 50.0, 1: 60.0}, t2={0: 40.0, 1: 80.0})
    c = Circuit(2, [Gate("H", (0,)), Gate("CNOT", (0, 1)), Gate("RX", (1,), 0.4)])
    assert run(c, noise=noise).is_valid()


def test_full_depolarizing_gives_maximally_mixed_state():
    state = run(Circuit(1, [Gate("H", (0,))]), noise=NoiseModel(p1=1.0))
    assert np.allclose(state.rho, np.eye(2) / 2)


def test_rz_is_virtual_by_default():
    c = Circuit(1, [Gate("H", (0,)), Gate("RZ", (0,), 0.3)])
    assert run(c, noise=NoiseModel(p1=0.5)).purity() < 1
    only_rz = Circuit(1, [Gate("RZ", (0,), 0.3)])
    assert run(only_rz, noise=NoiseModel(p1=0.5)).purity() == pytest.approx(1.0)


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel(p1=1.5)
    with pytest.raises(ValueError):
        NoiseModel(t1={0: 10.0}, t2={0: 30.0})


def test_uncoupled_pairs_default_to_mean_cx_error():
    noise = NoiseModel(p2={(0, 1): 0.01, (1, 2): 0.03})
    assert noise.gate_error(Gate("CNOT", (0, 2))) == pytest.approx(0.02)
    assert noise.gate_error(Gate("CNOT", (1, 0))) == 0.01


def test_symbolic_parameters_bind_and_scale():
    c = Circuit(1, [Gate("RY", (0,), param="t", scale=-0.5)])
    assert c.parameters == ["t"]
    with pytest.raises(UnboundParameterError):
        run(c)
    psi = statevector(c, {"t": 1.0})
    assert np.allclose(psi, [math.cos(-0.25), math.sin(-0.25)])


def test_unitary_is_unitary():
    u = circuit_unitary(random_circuit(3, 15, 3))
    assert np.allclose(u.conj().T @ u, np.eye(8), atol=1e-12)


def test_netlist_round_trip():
    c = Circuit(2, [Gate("H", (0,)), Gate("CNOT", (0, 1)), Gate("RZ", (1,), param="theta0", scale=-1.0)])
    back = Circuit.from_netlist(c.netlist())
    assert back.netlist() == c.netlist()


def test_depth_counts_parallel_layers():
    c = Circuit(3, [Gate("H", (0,)), Gate("H", (1,)), Gate("CNOT", (0, 1)), Gate("X", (2,))])
    assert c.depth() == 2


def test_expectation_matches_dense():
    c = random_circuit(3, 10, 11)
    state = run(c, noise=NoiseModel(p1=0.05, p2=0.1))
    obs = PauliSum.from_labels({"XYZ": 0.7, "ZIZ": -0.4, "III": 1.0})
    assert expectation(state, obs) == pytest.approx(np.trace(state.rho @ to_dense(obs)).real, abs=1e-12)


def test_sampled_means_lie_within_five_sigma():
    c = random_circuit(3, 10, 5)
    state = run(c, noise=NoiseModel(p1=0.02, p2=0.05))
    obs = PauliSum.from_labels({"XXI": 1.0, "ZIZ": 1.0, "YIY": 1.0})
    shots = 20_000
    for g in group_commuting(obs):
        table = sample(state, g, shots, rng=derive_rng(0, 1))
        arr = table.as_array(3) / shots
        for p in g.members:
            signs = np.array([(-1) ** bin(k & p.support).count("1") for k in range(8)])
            est = signs @ arr
            exact = expectation(state, PauliSum(3, [(p, 1.0)]))
            sigma = math.sqrt(max(1 - exact**2, 1e-12) / shots)
            assert abs(est - exact) < 5 * sigma


def test_readout_flips_fold_the_distribution():
    noise = NoiseModel(readout={0: (0.1, 0.1)})
    g = group_commuting(PauliSum.from_labels({"Z": 1.0}))[0]
    table = sample(DensityState.basis(1), g, 50_000, noise, rng=1)
    assert table.counts.get("1", 0) / 50_000 == pytest.approx(0.1, abs=0.01)


def test_derive_rng_streams_are_reproducible_and_distinct():
    a = derive_rng(5, 1, 2).random(3)
    assert np.array_equal(a, derive_rng(5, 1, 2).random(3))
    assert not np.array_equal(a, derive_rng(5, 1, 3).random(3))


def test_probabilities_of_basis_state():
    assert probabilities(DensityState.basis(2, 3)).tolist() == [0, 0, 0, 1]
