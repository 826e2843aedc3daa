from __future__ import annotations

import itertools

from defectvqe.fermion import ActiveSpace, FermionOperator, number_operator


def a(m):
    return FermionOperator.ladder(m, False)


def adag(m):
    return FermionOperator.ladder(m, True)


def test_canonical_anticommutation_relations():
    for p, q in itertools.product(range(3), repeat=2):
        anti = adag(p) * a(q) + a(q) * adag(p)
        assert anti.allclose(FermionOperator.identity(1.0 if p == q else 0.0))
        assert (a(p) * a(q) + a(q) * a(p)).allclose(FermionOperator())


def test_normal_order_is_idempotent():
    op = a(0) * adag(1) * a(2) * adag(0)
    once = op.normal_ordered()
    assert once.is_normal_ordered()
    assert once.allclose(once.normal_ordered())


def test_adjoint_reverses_and_conjugates():
    op = FermionOperator.product([(2, True), (0, False)], 1j)
    adj = op.adjoint()
    assert adj.terms == {((0, True), (2, False)): -1j}


def test_number_operator_counts_spin_orbitals():
    assert len(number_operator(ActiveSpace(2, 2))) == 4
    assert len(number_operator(3)) == 3
