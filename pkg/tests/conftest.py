from __future__ import annotations

import numpy as np
import pytest

from defectvqe.fermion import ActiveSpace, FermionHamiltonian
from defectvqe.fixtures import build_fixture
from defectvqe.mapping import MappingSpec
from defectvqe.noise import load_calibration, noise_from_calibration

_H2_PERMS = [(0, 1, 2, 3), (1, 0, 2, 3), (0, 1, 3, 2), (1, 0, 3, 2),
             (2, 3, 0, 1), (3, 2, 0, 1), (2, 3, 1, 0), (3, 2, 1, 0)]


def random_hamiltonian(n_spatial: int, n_electrons: int, seed: int) -> FermionHamiltonian:
    """Random real integrals with the 8-fold permutational symmetry."""
    rng = np.random.default_rng(seed)
    h1 = rng.normal(size=(n_spatial, n_spatial))
    h1 = 0.5 * (h1 + h1.T)
    raw = rng.normal(scale=0.5, size=(n_spatial,) * 4)
    h2 = sum(raw.transpose(p) for p in _H2_PERMS) / 8
    return FermionHamiltonian(ActiveSpace(n_spatial, n_electrons), h1, h2, float(rng.normal()))


@pytest.fixture(scope="session")
def nv():
    return build_fixture("triplet-nv-shape")


@pytest.fixture(scope="session")
def vv():
    return build_fixture("triplet-vv-shape")


@pytest.fixture(scope="session")
def nv_spec(nv):
    return MappingSpec.for_space(nv.space)


@pytest.fixture(scope="session")
def device_noise_4q():
    return noise_from_calibration(load_calibration("casablanca"), 4)


# one pass/fail line per acceptance criterion, printed after the run
_CRITERIA: dict[int, tuple[str, bool]] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not report.failed:
        return
    mark = report.user_properties and dict(report.user_properties).get("criterion")
    if not mark:
        return
    number, title = mark
    ok = _CRITERIA.get(number, (title, True))[1] and report.passed
    _CRITERIA[number] = (title, ok)


def pytest_runtest_setup(item):
    mark = item.get_closest_marker("criterion")
    if mark:
        item.user_properties.append(("criterion", tuple(mark.args)))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number} {title}: {'PASS' if ok else 'FAIL'}")
