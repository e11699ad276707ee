import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy import Matrix

from lcagroups.fgab import (
    FgAbGroup,
    Subgroup,
    elementary_rank,
    frattini,
    hnf,
    invariant_factors,
    kernel_basis,
    member,
    primary_component,
    snf,
    socle,
    solve,
    sub_meet,
    sub_sum,
)
from oracles import divides_chain, matmul, span

matrices = st.integers(1, 4).flatmap(
    lambda r: st.integers(1, 4).flatmap(
        lambda c: st.lists(st.lists(st.integers(-9, 9), min_size=c, max_size=c), min_size=r, max_size=r)
    )
)


def random_unimodular(rng: random.Random, n: int):
    u = [[int(i == j) for j in range(n)] for i in range(n)]
    for _ in range(3 * n):
        i, j = rng.sample(range(n), 2) if n > 1 else (0, 0)
        if i == j:
            continue
        k = rng.randint(-3, 3)
        u[i] = [a + k * b for a, b in zip(u[i], u[j])]
    if rng.random() < 0.5:
        u[0] = [-a for a in u[0]]
    return u


@settings(max_examples=200, deadline=None)
@given(matrices, st.integers(0, 10**6))
def test_hnf_is_canonical_under_row_operations(m, seed):
    u = random_unimodular(random.Random(seed), len(m))
    assert hnf(matmul(u, m)) == hnf(m)


@settings(max_examples=200, deadline=None)
@given(matrices)
def test_snf_factorization(m):
    d, left, right = snf(m)
    assert matmul(matmul(left, m), right) == d
    assert abs(Matrix(left).det()) == 1 and abs(Matrix(right).det()) == 1
    diag = [d[i][i] for i in range(min(len(d), len(d[0])))]
    off = [d[i][j] for i in range(len(d)) for j in range(len(d[0])) if i != j]
    assert not any(off)
    nonzero = [x for x in diag if x]
    assert all(x > 0 for x in nonzero)
    assert divides_chain(nonzero)


def test_invariant_factors_examples():
    assert invariant_factors([[2, 0], [0, 3]]) == [1, 6]
    assert invariant_factors([[4, 0], [0, 6]]) == [2, 12]
    assert FgAbGroup.from_cyclic_orders([2, 3, 4]).torsion_orders == (2, 12)
    assert FgAbGroup.from_cyclic_orders([0, 5]) == FgAbGroup(1, (5,))


def test_divisor_chain_is_required():
    with pytest.raises(ValueError):
        FgAbGroup(0, (4, 2))


def test_sum_meet_member_on_z_plus_z9():
    g = FgAbGroup(1, (9,))
    a = Subgroup.generated(g, [(2, 0)])
    b = Subgroup.generated(g, [(1, 1)])
    assert sub_sum(a, b) == g.whole()
    meet = sub_meet(b, Subgroup.generated(g, [(1, 0)]))
    assert meet == Subgroup.generated(g, [(9, 0)])
    assert (0, 1) in sub_sum(a, b)
    assert (1, 0) not in a


def test_solve_and_kernel():
    g = FgAbGroup(0, (6,))
    coeffs = solve(g, [(2,), (3,)], (1,))
    assert coeffs is not None
    assert (2 * coeffs[0] + 3 * coeffs[1]) % 6 == 1
    assert solve(g, [(2,)], (1,)) is None
    ker = kernel_basis([(2,), (3,)], g)
    for row in ker:
        assert (2 * row[0] + 3 * row[1]) % 6 == 0


def test_socle_primary_frattini():
    g = FgAbGroup.from_cyclic_orders([4, 2, 3])
    assert socle(g, 2).order() == 4
    assert primary_component(g, 2).order() == 8
    assert primary_component(g, 3).order() == 3
    # Frattini of Z(4)+Z(2)+Z(3) is 2Z(4)
    assert frattini(g).order() == 2


@pytest.mark.parametrize("orders,p,rank", [([4, 2], 2, 2), ([0, 0, 4], 2, 3), ([9, 3, 2], 3, 2), ([5], 2, 0)])
def test_elementary_rank(orders, p, rank):
    assert elementary_rank(FgAbGroup.from_cyclic_orders(orders), p) == rank


@pytest.mark.parametrize("orders", [[2, 2], [4, 2], [3, 9], [2, 2, 2], [6, 4]])
def test_operations_against_enumeration(orders):
    rng = random.Random(7)
    g = FgAbGroup.from_cyclic_orders(orders)
    elems = list(g.elements())
    for _ in range(60):
        xs = rng.sample(elems, rng.randint(0, 2))
        ys = rng.sample(elems, rng.randint(0, 2))
        a, b = Subgroup.generated(g, xs), Subgroup.generated(g, ys)
        sa, sb = span(g, xs), span(g, ys)
        assert set(a.elements()) == sa
        assert a.order() == len(sa) and a.index() == len(elems) // len(sa)
        assert set(sub_sum(a, b).elements()) == span(g, xs + ys)
        assert set(sub_meet(a, b).elements()) == sa & sb
        probe = rng.choice(elems)
        assert member(probe, a) == (probe in sa)
