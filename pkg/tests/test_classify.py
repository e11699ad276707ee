import itertools
import random

import pytest

from lcagroups.classify import (
    ROUTES,
    NotApplicable,
    classify,
    classify_stqh,
    classify_tm,
    decompose,
    partition_periodic,
)
from lcagroups.dsl import parse, render
from lcagroups.generate import random_dualizable, random_expr, random_pgroup
from lcagroups.invariants import NotPeriodic, dual, invariants
from lcagroups.model import Atom, Kind, LocalProduct, Product, Sum, Trivial


def verdict(text):
    v = classify(parse(text))
    return v.tm, v.stqh


@pytest.mark.parametrize(
    "text,tm,stqh",
    [
        ("R", False, False),
        ("dsum[inf](Z(2)) + prod[inf](Z(2))", False, False),
        ("let P = primes distinct in dsum[inf](Z(P)) + prod[inf](Z(P))", True, False),
        ("let P = primes const(2) in dsum[inf](Z(P)) + prod[inf](Z(P))", False, False),
        ("let P = primes const(2) in dsum[3](Z(P)) + prod[3](Z(P))", True, True),
        ("Qp(2) + dsum[inf](Zinf(2))", True, True),
        ("Zp(2)", True, True),
        ("locprod[inf](Z(2^2), sub(2^1))", False, False),
        ("Z + Zp(3)", False, False),
        ("Z + prod[inf](Z(2))", True, True),
        ("T + dsum[inf](Z(3))", True, True),
        ("T + Z", False, False),
    ],
)
def test_verdicts(text, tm, stqh):
    assert verdict(text) == (tm, stqh)


def test_routes():
    cases = {
        "dsum[inf](Z(2)) + Z": "Discrete",
        "prod[inf](Zp(3)) + T": "Compact",
        "R + Zp(2)": "NoncompactComponent",
        "T + dsum[inf](Z(2))": "ConnectedViaDual",
        "Qp(2) + Z(4)": "PGroup",
        "Zinf(2) + prod[3](Z(3)) + Zp(2)": "Periodic",
        "Zinf(2) + prod[inf](Z(3))": "Torsion",
        "Z + prod[inf](Z(2))": "TotallyDisconnectedNonperiodic",
    }
    for text, route in cases.items():
        assert classify(parse(text)).route == route
    assert set(cases.values()) == set(ROUTES)


def test_verdict_json_and_trace():
    v = classify(parse("Qp(2) + dsum[inf](Zinf(2))"))
    data = v.to_json(True)
    assert set(data) == {"tm", "stqh", "route", "chosenU", "clauses"}
    assert data["clauses"] and all(set(c) == {"theorem", "quote", "ok", "witness"} for c in data["clauses"])
    assert "clauses" not in v.to_json(False)


def test_partition_examples():
    part = partition_periodic(parse("Z(3) + Zp(5) + Qp(7) + Z(2) + Zinf(2) + Zp(2)"))
    assert (part.delta, part.gamma, part.phi, part.mu) == ((3,), (5,), (2,), (7,))
    part = partition_periodic(parse("Zp(2)"))
    assert part.gamma == (2,) and not (part.delta or part.phi or part.mu)
    part = partition_periodic(parse("let P = primes distinct in dsum[inf](Z(P)) + prod[inf](Z(P))"))
    assert part.tail_class == "phi" and not part.phi_finite()
    assert part.class_of(101) == "phi"
    with pytest.raises(NotPeriodic):
        partition_periodic(parse("Z + Zp(2)"))


def labels(text):
    return [(label, render(e)) for label, e in decompose(parse(text)).summands]


def test_decompositions():
    assert labels("Zinf(2) + prod[3](Z(2)) + let P = primes distinct(3) in dsum[inf](Z(P))") == [
        ("D_phi", "Zinf(2)"),
        ("V_phi", "prod[3](Z(2))"),
        ("A_delta", "let P = primes distinct(3) in dsum[inf](Z(P))"),
    ]
    assert labels("Zinf(2) + prod[inf](Z(2))") == [("R", "prod[inf](Z(2))"), ("D", "Zinf(2)")]
    assert labels("dsum[inf](Z(3)) + Z") == [("discrete", "Z + dsum[inf](Z(3))")]
    with pytest.raises(NotApplicable):
        decompose(parse("R"))


def test_decomposition_preserves_invariants():
    rng = random.Random(21)
    checked = 0
    for _ in range(400):
        e = random_expr(rng)
        try:
            d = decompose(e)
        except NotApplicable:
            continue
        checked += 1
        assert invariants(d.total()) == invariants(e)
    assert checked > 100


def test_stqh_implies_tm_and_nonempty_clauses():
    rng = random.Random(1)
    for _ in range(500):
        v = classify(random_expr(rng))
        assert v.clauses
        assert not v.stqh or v.tm


def test_compact_and_discrete_are_stqh():
    rng = random.Random(2)
    for _ in range(500):
        e = random_expr(rng)
        rec = invariants(e)
        if rec.is_compact or rec.is_discrete:
            assert classify_stqh(e).stqh


def test_tm_is_invariant_under_duality():
    rng = random.Random(3)
    for _ in range(300):
        e = random_dualizable(rng)
        assert classify_tm(e).tm == classify_tm(dual(e)).tm


def test_pgroups_agree():
    rng = random.Random(4)
    for _ in range(300):
        e = random_pgroup(rng)
        assert classify_tm(e).tm == classify_stqh(e).stqh


def compact_part(x: LocalProduct):
    """The designated compact open subgroup of a local product."""
    a, s = x.atom, x.sub
    if a.kind is Kind.CYCLIC:
        if s.exponent == a.exponent:
            return Trivial()
        t = Atom(Kind.CYCLIC, a.prime, a.exponent - s.exponent)
    elif a.kind is Kind.PRUEFER:
        if s.exponent == 0:
            return Trivial()
        t = Atom(Kind.CYCLIC, a.prime, s.exponent)
    else:
        t = Atom(Kind.ZP, a.prime)
    return Product(t, x.card, x.primes)


def test_positive_verdicts_pass_to_closed_subgroups():
    rng = random.Random(5)
    for _ in range(400):
        e = random_expr(rng)
        v = classify(e)
        parts = list(e.parts) if isinstance(e, Sum) else [e]
        subs = [Sum.of(*c) for r in range(1, len(parts)) for c in itertools.combinations(parts, r)]
        subs.append(Sum.of(*(compact_part(x) if isinstance(x, LocalProduct) else x for x in parts)))
        for s in subs:
            w = classify(s)
            assert w.tm or not v.tm
            assert w.stqh or not v.stqh
