import itertools
import random

import pytest

from lcagroups.dsl import DSLSyntaxError, ParseError, UnboundPrimeSequence, UnknownAtom, parse, render
from lcagroups.generate import random_expr
from lcagroups.model import (
    INF,
    ONE,
    ZERO,
    Atom,
    Card,
    ConstantPrime,
    DiscreteSum,
    DistinctPrimes,
    Kind,
    LocalProduct,
    Product,
    SubDesignator,
    Sum,
    Trivial,
    Z,
    cyclic,
    padic_integers,
    pruefer,
    prime_power,
)


def test_cardinal_arithmetic_saturates():
    assert Card(2) + Card(3) == Card(5)
    assert Card(2) + INF == INF
    assert INF * ZERO == ZERO
    assert Card(3) * INF == INF
    assert Card(4) < INF and not INF < INF and INF <= INF
    assert max([Card(7), INF, ONE]) == INF
    assert str(INF) == "inf" and Card.of("inf") is INF


def test_distinct_primes_seed_is_trimmed():
    assert DistinctPrimes((2, 3, 5)) == DistinctPrimes((2,))
    assert DistinctPrimes((3, 7)).first(4) == [3, 7, 11, 13]
    assert DistinctPrimes((3, 7)).contains(11) and not DistinctPrimes((3, 7)).contains(5)
    assert ConstantPrime(5).first(3) == [5, 5, 5]


def test_prime_power():
    assert prime_power(8) == (2, 3)
    assert prime_power(12) is None
    assert prime_power(1) is None


def test_parse_examples():
    assert parse("Zp(2)") == padic_integers(2)
    e = parse("let P = primes distinct in dsum[inf](Z(P)) + prod[inf](Z(P))")
    seq = DistinctPrimes((2,))
    assert e == Sum((DiscreteSum(cyclic(None), INF, seq), Product(cyclic(None), INF, seq)))
    assert parse("locprod[inf](Z(2^2), sub(2^1))") == LocalProduct(cyclic(2, 2), SubDesignator(1), INF)
    assert parse("Z(4)") == parse("Z(2^2)") == cyclic(2, 2)
    assert parse("0") == Trivial()
    assert parse("(Z + Z(3)) + # comment\n Zinf(5)") == parse("Z + Z(3) + Zinf(5)")


def test_render_examples():
    assert render(pruefer(3)) == "Zinf(3)"
    assert render(Sum.of(padic_integers(2), Z())) == "Z + Zp(2)"
    text = "let P = primes distinct in dsum[inf](Z(P)) + prod[inf](Z(P))"
    assert render(parse(text)) == text
    assert render(parse("locprod[inf](Qp(3), Zp(3))")) == "locprod[inf](Qp(3), Zp(3))"


@pytest.mark.parametrize(
    "text,error",
    [
        ("Z(", DSLSyntaxError),
        ("Z + ", DSLSyntaxError),
        ("dsum[x](Z)", DSLSyntaxError),
        ("Foo(2)", UnknownAtom),
        ("dsum[inf](Z(P))", UnboundPrimeSequence),
        ("let in = primes distinct in Z", DSLSyntaxError),
        ("Z $", DSLSyntaxError),
    ],
)
def test_parse_errors(text, error):
    with pytest.raises(error) as info:
        parse(text)
    assert isinstance(info.value, ParseError)
    payload = info.value.to_json()
    assert payload["error"] == error.__name__ and "position" in payload


def test_syntax_error_reports_expected_set():
    with pytest.raises(DSLSyntaxError) as info:
        parse("prod[3]")
    assert info.value.position == 7
    assert "(" in info.value.expected


def _atoms():
    out = [Atom(Kind.Z), Atom(Kind.R), Atom(Kind.T)]
    for p in (2, 3, 5, 7, 11, 13):
        out += [Atom(Kind.PRUEFER, p), Atom(Kind.ZP, p), Atom(Kind.QP, p)]
        out += [Atom(Kind.CYCLIC, p, a) for a in range(1, 5)]
    return out


def test_atom_order_is_strict_total():
    atoms = _atoms()
    key = {a: a.sort_key() for a in atoms}
    for a, b in itertools.product(atoms, repeat=2):
        lt, gt = key[a] < key[b], key[b] < key[a]
        assert (a == b) == (not lt and not gt)
        assert not (lt and gt)
    for a, b, c in itertools.combinations(atoms[:20], 3):
        for x, y, z in itertools.permutations((a, b, c)):
            if key[x] < key[y] and key[y] < key[z]:
                assert key[x] < key[z]


def test_sum_order_independent():
    atoms = _atoms()
    rng = random.Random(3)
    for _ in range(50):
        parts = rng.sample(atoms, 4)
        shuffled = parts[:]
        rng.shuffle(shuffled)
        assert render(Sum.of(*parts)) == render(Sum.of(*shuffled))


def test_round_trip_on_generated_expressions():
    rng = random.Random(2024)
    for _ in range(1000):
        e = random_expr(rng)
        assert parse(render(e)) == e
