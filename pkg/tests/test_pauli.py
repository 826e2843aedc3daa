from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from defectvqe.pauli import PauliString, PauliSum, group_commuting, multiply, to_dense

LETTERS = "IXYZ"
labels = st.integers(1, 4).flatmap(lambda n: st.tuples(st.text(LETTERS, min_size=n, max_size=n),
                                                        st.text(LETTERS, min_size=n, max_size=n)))


def test_two_qubit_products_match_dense_exhaustively():
    for a, b in itertools.product(map("".join, itertools.product(LETTERS, repeat=2)), repeat=2):
        pa, pb = PauliString.from_label(a), PauliString.from_label(b)
        prod = multiply(pa, pb)
        assert np.allclose(to_dense(prod), to_dense(pa) @ to_dense(pb))


def test_single_qubit_relations():
    x, y, z = (PauliString.from_label(c) for c in "XYZ")
    assert multiply(x, y).letters == "Z" and multiply(x, y).coefficient == 1j
    assert multiply(y, x).coefficient == -1j
    assert multiply(x, x).is_identity()


@given(labels)
def test_commutation_agrees_with_dense(pair):
    pa, pb = (PauliString.from_label(s) for s in pair)
    a, b = to_dense(pa), to_dense(pb)
    assert pa.commutes(pb) == np.allclose(a @ b, b @ a)


@given(labels)
@settings(max_examples=50)
def test_sum_product_matches_dense(pair):
    s1 = PauliSum.from_labels({pair[0]: 0.3, "I" * len(pair[0]): -1.2})
    s2 = PauliSum.from_labels({pair[1]: 0.7 - 0.2j})
    assert np.allclose(to_dense(s1 @ s2), to_dense(s1) @ to_dense(s2))


def test_label_order_puts_qubit_zero_first():
    p = PauliString.from_label("XZ")
    assert p.x == 0b01 and p.z == 0b10


def test_sum_merges_duplicates_and_prunes_zeros():
    s = PauliSum.from_labels([("XX", 0.5), ("XX", -0.5), ("ZI", 1.0)])
    assert len(s) == 1
    assert s.coefficient("ZI") == 1.0


def test_hermiticity_and_adjoint():
    s = PauliSum.from_labels({"XY": 1.0 + 0.5j, "ZZ": 2.0})
    assert not s.is_hermitian()
    assert np.allclose(to_dense(s.adjoint()), to_dense(s).conj().T)


def test_expectation_matches_dense():
    rng = np.random.default_rng(0)
    psi = rng.normal(size=8) + 1j * rng.normal(size=8)
    psi /= np.linalg.norm(psi)
    s = PauliSum.from_labels({"XYZ": 0.4, "ZZI": -1.1, "III": 0.3})
    assert s.expectation(psi) == pytest.approx(psi.conj() @ to_dense(s) @ psi)


def test_text_round_trip():
    s = PauliSum.from_labels({"XYZ": 0.4, "ZZI": -1.1})
    assert PauliSum.from_text(s.to_text()).allclose(s)


def test_grouping_is_qubitwise_commuting_and_complete():
    s = PauliSum.from_labels({"XXI": 1, "YYI": 1, "ZZI": 1, "ZIZ": 0.5, "IXX": 0.3, "XIX": 0.2, "III": 4})
    groups = group_commuting(s)
    assert groups[0].is_diagonal
    members = [p for g in groups for p in g.members]
    assert sorted(p.letters for p in members) == sorted(p.letters for p in s.terms if not p.is_identity())
    for g in groups:
        for p, q in itertools.combinations(g.members, 2):
            assert p.qubitwise_commutes(q)


def test_dense_limit_enforced():
    with pytest.raises(ValueError):
        to_dense(PauliSum.from_labels({"Z" * 11: 1.0}))
