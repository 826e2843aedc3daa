from __future__ import annotations

import warnings

import numpy as np
import pytest

from defectvqe.ansatz import build_uccsd, compile_ansatz
from defectvqe.circuit import derive_rng, run
from defectvqe.estimation import EnergySampler
from defectvqe.mapping import qubit_hamiltonian
from defectvqe.mitigation import (
    FitError,
    ZnePoint,
    ZneSeries,
    fit_exponential,
    fit_polynomial,
    run_zne,
    zne_report,
)
from defectvqe.pauli import group_commuting
from defectvqe.readout import ConfusionMatrix

N = np.arange(1, 6)


def test_exact_line():
    fit = fit_polynomial(ZneSeries.from_arrays([1, 2, 3], [2, 3, 4]), 1)
    assert np.allclose(fit.coefficients, [1, 1], atol=1e-12)
    assert fit.zero_noise == pytest.approx((1.0, 0.0))


def test_quadratic_interpolation_residuals():
    y = 0.3 - 0.2 * N + 0.05 * N**2
    fit = fit_polynomial(ZneSeries.from_arrays(N, y), 2)
    assert np.max(np.abs(fit.residuals)) <= 1e-12
    assert fit.zero_noise[0] == pytest.approx(0.3, abs=1e-12)


def test_equal_sigma_propagation_closed_form():
    fit = fit_polynomial(ZneSeries.from_arrays(N, N * 0.1, np.full(5, 0.01)), 1)
    weights = np.array([0.8, 0.5, 0.2, -0.1, -0.4])
    assert fit.zero_noise[1] == pytest.approx(0.01 * np.sqrt(np.sum(weights**2)), rel=1e-12)


@pytest.mark.parametrize("degree", [1, 2])
def test_propagated_sigma_matches_resampling(degree):
    rng = np.random.default_rng(2024)
    for _ in range(20):
        means = rng.normal(size=5)
        sigmas = rng.uniform(0.005, 0.05, 5)
        fit = fit_polynomial(ZneSeries.from_arrays(N, means, sigmas), degree)
        draws = means + sigmas * rng.normal(size=(10_000, 5))
        v = np.vander(N, degree + 1, increasing=True).astype(float)
        alpha0 = np.linalg.lstsq(v, draws.T, rcond=None)[0][0]
        assert fit.zero_noise[1] == pytest.approx(alpha0.std(ddof=1), rel=0.10)


def test_rank_deficient_and_underdetermined_fits_rejected():
    with pytest.raises(FitError):
        fit_polynomial(ZneSeries.from_arrays([1, 2], [1, 2]), 2)


def test_series_validation():
    with pytest.raises(ValueError):
        ZneSeries.from_arrays([1, 1], [0, 0])
    with pytest.raises(ValueError):
        ZneSeries.from_arrays([0, 1], [0, 0])
    with pytest.raises(ValueError):
        ZneSeries.from_arrays([1, 2], [0, 0], [0.1, -0.1])


def test_exponential_recovers_exact_parameters():
    a, b, r = -1.0, 0.2, 0.6
    y = a + b * r**N
    fit = fit_exponential(ZneSeries.from_arrays(N, y))
    assert np.allclose(fit.coefficients, [a, b, r], atol=1e-6)
    assert fit.zero_noise[0] == pytest.approx(a + b, abs=1e-6)


def test_exponential_constant_series():
    fit = fit_exponential(ZneSeries.from_arrays(N, np.full(5, 0.7)))
    assert fit.zero_noise[0] == pytest.approx(0.7)
    assert fit.predict(N) == pytest.approx(np.full(5, 0.7))


def test_exponential_warns_on_non_monotone_data():
    with pytest.warns(RuntimeWarning):
        fit_exponential(ZneSeries.from_arrays(N, [0.0, 0.3, 0.1, 0.4, 0.2]))


def test_exponential_coverage():
    rng = np.random.default_rng(11)
    a, b, r, s = -1.0, 0.2, 0.6, 0.002
    hits = 0
    for trial in range(100):
        y = a + b * r**N + rng.normal(0, s, 5)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fit = fit_exponential(ZneSeries.from_arrays(N, y, np.full(5, s)), seed=trial)
        hits += abs(fit.zero_noise[0] - (a + b)) <= 2 * fit.zero_noise[1]
    assert hits >= 90


def test_point_statistics():
    p = ZnePoint.from_samples(2, [1.0, 2.0, 3.0])
    assert p.mean == 2.0 and p.sigma == pytest.approx(1 / np.sqrt(3))


def test_run_zne_recovers_model_matched_linear_noise():
    truth = -2.0

    def experiment(n, rep):
        return truth + 0.05 * n + derive_rng(7, n, rep).normal(0, 0.01)

    fit, series = run_zne(experiment, range(1, 6), 50, "linear")
    assert abs(fit.zero_noise[0] - truth) <= 2 * fit.zero_noise[1]
    report = zne_report(fit, series, label="synthetic")
    assert len(report["points"]) == 5 and len(report["points"][0]["raw_eV"]) == 50


def test_run_zne_rejects_bad_replications():
    with pytest.raises(ValueError):
        run_zne(lambda n, r: 0.0, [1, 3], 5)


def test_repetition_count_changes_fixture_estimate_by_under_a_millielectronvolt(nv, nv_spec, device_noise_4q):
    ans = build_uccsd(nv.space, nv.reference, True, nv.orbital_irreps)
    h = qubit_hamiltonian(nv.hamiltonian, nv_spec)
    groups = group_commuting(h)
    conf = ConfusionMatrix.from_noise(device_noise_4q, 4)
    samplers = {}
    for n in range(1, 6):
        c = compile_ansatz(ans, nv_spec, n)
        samplers[n] = EnergySampler(run(c.circuit, c.values([np.pi / 2]), device_noise_4q), h, groups,
                                    device_noise_4q, nv_spec, 4, True, conf)

    def experiment(n, rep):
        return samplers[n].sample(8192, derive_rng(0, n, rep)).value

    e25 = run_zne(experiment, range(1, 6), 25)[0].zero_noise[0]
    e50 = run_zne(experiment, range(1, 6), 50)[0].zero_noise[0]
    assert abs(e50 - e25) < 1e-3
