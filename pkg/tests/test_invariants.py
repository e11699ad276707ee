import random

import pytest

from lcagroups.dsl import parse, render
from lcagroups.fgab import FgAbGroup, elementary_rank
from lcagroups.generate import random_dualizable, random_expr, random_fg_pgroup, random_pgroup
from lcagroups.invariants import (
    NotDualizable,
    canonical_form,
    chosen_U,
    dual,
    invariants,
    p_rank,
    primary_decompose,
)
from lcagroups.model import INF, Card
from oracles import fg_orders, respell


def test_primary_decompose_examples():
    dec = primary_decompose(parse("Z(4) + Zinf(2) + Zp(3)"))
    d2, d3 = dec.descriptor(2), dec.descriptor(3)
    assert d2.cyclic_discrete == ((2, Card(1)),)
    assert d2.pruefer_discrete_mult == Card(1)
    assert d3.zp_mult_compact == Card(1)
    assert d3.rank() == Card(1) and d2.rank() == Card(2)


def test_primary_decompose_distinct_sequence():
    dec = primary_decompose(parse("let P = primes distinct in dsum[inf](Z(P)) + prod[inf](Z(P))"))
    assert dec.by_prime == {} and dec.tail_start == 2
    for p in (2, 3, 101):
        d = dec.descriptor(p)
        assert d.cyclic_discrete == ((1, Card(1)),)
        assert d.cyclic_compact_power == ((1, Card(1)),)
    assert dec.descriptor(4).is_trivial()


def test_primary_decompose_local_square():
    d = primary_decompose(parse("locprod[inf](Z(2^2), sub(2^1))")).descriptor(2)
    assert d.cyclic_local == ((2, 1, INF),)


@pytest.mark.parametrize(
    "text,p,rank",
    [("prod[3](Zp(2)) + Z(4)", 2, Card(4)), ("Qp(2)", 2, Card(1)), ("prod[inf](Z(2))", 2, INF), ("Z(9)", 2, Card(0))],
)
def test_p_rank(text, p, rank):
    assert p_rank(parse(text), p) == rank


def test_invariants_examples():
    z = invariants(parse("Z"))
    assert z.is_discrete and not z.is_periodic
    assert render(z.comp_part) == "0" and render(z.torsion_part) == "0"
    q = invariants(parse("Qp(2)"))
    assert q.is_periodic and q.is_divisible and render(q.torsion_part) == "0"
    assert render(q.comp_part) == "Qp(2)"
    s = invariants(parse("dsum[inf](Z(2)) + prod[inf](Z(2))"))
    assert s.is_torsion and s.is_periodic and not s.is_compact and not s.is_discrete
    assert s.per_prime["2"]["rank"] == "inf"


def test_record_implications_on_generated_expressions():
    rng = random.Random(8)
    for _ in range(300):
        rec = invariants(random_expr(rng))
        assert not rec.is_periodic or rec.is_totally_disconnected
        assert not rec.is_torsion or rec.is_periodic


@pytest.mark.parametrize(
    "text,expected",
    [
        ("Z", "T"),
        ("Zp(3)", "Zinf(3)"),
        ("dsum[inf](Z(2))", "prod[inf](Z(2))"),
        ("Qp(5) + R", "R + Qp(5)"),
        ("locprod[inf](Z(2^3), sub(2^1))", "locprod[inf](Z(2^3), sub(2^2))"),
        ("locprod[inf](Qp(3), Zp(3))", "locprod[inf](Qp(3), Zp(3))"),
    ],
)
def test_dual_examples(text, expected):
    assert render(dual(parse(text))) == expected


def test_dual_leaving_grammar():
    with pytest.raises(NotDualizable):
        dual(parse("dsum[inf](Z)"))


def test_dual_properties():
    rng = random.Random(12)
    for _ in range(300):
        e = random_dualizable(rng)
        d = dual(e)
        assert render(dual(d)) == render(e)
        a, b = invariants(e), invariants(d)
        assert a.is_compact == b.is_discrete and a.is_discrete == b.is_compact


def test_chosen_u():
    assert render(chosen_U(parse("Z(4) + Zinf(2) + Zp(3)"))) == "Zp(3)"
    assert chosen_U(parse("R + Zp(2)")) is None


@pytest.mark.parametrize(
    "text,tup",
    [
        ("Qp(2) + Zinf(2) + Zp(2) + Z(4)", (1, 1, 1, (4,))),
        ("Z(2) + Z(2)", (0, 0, 0, (2, 2))),
        ("Zinf(3) + Qp(3)", (1, 1, 0, ())),
        ("Qp(3) + Zinf(3)", (1, 1, 0, ())),
    ],
)
def test_canonical_form_examples(text, tup):
    (t,) = canonical_form(parse(text)).tuples
    assert (t.m, t.n, t.k, t.F) == tup


def test_canonical_form_residual():
    cf = canonical_form(parse("prod[inf](Z(2)) + Zp(3) + Z"))
    assert [t.prime for t in cf.tuples] == [3]
    assert render(cf.residual) == "Z + prod[inf](Z(2))"


def test_canonical_form_properties():
    rng = random.Random(99)
    for _ in range(300):
        e = random_pgroup(rng, finite_rank=True)
        cf = canonical_form(e)
        assert canonical_form(cf.to_expr()) == cf
        assert canonical_form(respell(e, rng)) == cf
        (t,) = cf.tuples
        assert Card(t.rank()) == p_rank(e, t.prime)


def test_p_rank_matches_fgab_oracle():
    rng = random.Random(4)
    for _ in range(200):
        p = rng.choice((2, 3, 5))
        e = random_fg_pgroup(rng, p)
        g = FgAbGroup.from_cyclic_orders(fg_orders(e, p))
        assert p_rank(e, p) == Card(elementary_rank(g, p))


@pytest.mark.parametrize("m,k", [(0, 1), (1, 0), (2, 3), (1, 1)])
def test_rank_of_torsion_free_group_equals_rank_of_u(m, k):
    e = parse(f"prod[{m}](Qp(2)) + prod[{k}](Zp(2))")
    d = primary_decompose(e).descriptor(2)
    assert d.rank() == d.rank_U() == Card(m + k)
