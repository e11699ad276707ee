from fractions import Fraction
from math import isqrt

import numpy as np
import pytest

from lcagroups.fgab import FgAbGroup, Subgroup
from lcagroups.witness import (
    BadParams,
    NotApplicable,
    UnknownLabel,
    closure_level,
    escape_certificate,
    exact_meet,
    gfp_solve,
    local_square_confirms,
    make_family,
    pentagon_instance,
    sqrt2_convergents,
    sqrt2_density_witness,
)


def test_make_family_levels():
    f = make_family("GraphOverMonothetic", 2, 3)
    lv = f.level(2)
    assert lv.group == FgAbGroup(1, (9,))
    assert lv.subgroup("B") == Subgroup.generated(lv.group, [(1, 1)])
    assert make_family("socle-sum", 2).level(1).group == FgAbGroup(0, (2, 2))
    lv = make_family("local-square", 2).level(3)
    assert lv.group == FgAbGroup(0, (4, 4, 4))
    assert lv.subgroup("socle") == Subgroup.generated(lv.group, [(2, 0, 0), (0, 2, 0), (0, 0, 2)])


@pytest.mark.parametrize("args", [("graph-monothetic", 2, 2), ("graph-monothetic", 2, None), ("socle-sum", 4), ("nope", 2)])
def test_bad_params(args):
    with pytest.raises(BadParams):
        make_family(*args)


def test_unknown_label():
    with pytest.raises(UnknownLabel):
        closure_level(make_family("socle-sum", 2), "A", "X", 2)


def test_closure_levels():
    s = make_family("socle-sum", 2)
    g = make_family("graph-monothetic", 2, 3)
    for n in range(1, 6):
        assert closure_level(s, "A", "B", n) == s.level(n).subgroup("G")
        assert closure_level(g, "A", "B", n) == g.level(n).subgroup("G")
        assert closure_level(s, "C", "C", n) == s.level(n).subgroup("C")


@pytest.mark.parametrize("family,params", [("graph-monothetic", (2, 3)), ("socle-sum", (3,)), ("local-square", (2,))])
def test_level_compatibility(family, params):
    f = make_family(family, *params)
    for n in range(2, 65):
        for label in f.labels():
            assert f.compatible(n, label), (n, label)


def test_escape_certificate_examples():
    s2 = escape_certificate(make_family("socle-sum", 2), 8)
    assert s2.lower_bound == (1, 2, 3, 4, 5, 6, 7, 8) and s2.monotone and s2.confirms_non_closed
    assert escape_certificate(make_family("socle-sum", 3), 5).lower_bound[4] == 5
    finite = escape_certificate(make_family("socle-sum", 2), 8, target=[1, 1])
    assert finite.lower_bound == (1, 2, 2, 2, 2, 2, 2, 2) and not finite.confirms_non_closed
    with pytest.raises(NotApplicable):
        escape_certificate(make_family("graph-monothetic", 2, 3), 4)


def test_local_square_reduces_to_socle_sum():
    cert = escape_certificate(make_family("local-square", 3), 12)
    assert cert.reduced_from["mapsAgree"]
    assert cert.lower_bound == tuple(n // 2 for n in range(1, 13))
    assert local_square_confirms(cert)


def test_exact_meet_examples():
    f = make_family("graph-monothetic", 2, 3)
    r = exact_meet(f, levels=6)
    assert r.meet_at_infinity == ()
    assert r.finite_level_meets[2] == Subgroup.generated(f.level(2).group, [(9, 0)])
    assert exact_meet(make_family("graph-monothetic", 3, 2), levels=6).meet_at_infinity == ()
    assert exact_meet(f, "B", "G", levels=4).meet_at_infinity == ((1, 1),)
    with pytest.raises(NotApplicable):
        exact_meet(make_family("socle-sum", 2))


def test_pentagon_instance():
    for p, q in ((2, 3), (2, 5)):
        inst = pentagon_instance(make_family("graph-monothetic", p, q), levels=6)
        assert inst.ok and len(inst.certificates) == 10
        pairs = {frozenset((c.inside, c.outside)) for c in inst.certificates}
        assert len(pairs) == 10
    with pytest.raises(NotApplicable):
        pentagon_instance(make_family("graph-monothetic", 2, 3), "G", levels=4)


def test_separating_elements_are_honest():
    f = make_family("graph-monothetic", 2, 3)
    inst = pentagon_instance(f, levels=5)
    for c in inst.certificates:
        if c.outside == "bottom":
            continue
        label = {"top": "G", "c": "C", "a": "A", "b": "B"}[c.outside]
        assert c.element not in f.level(c.level).subgroup(label)


def test_gfp_solve():
    gens = np.array([[1, 1, 0], [0, 1, 1]])
    x, null = gfp_solve(gens, np.array([1, 0, 1]), 2)
    assert ((x @ gens) % 2 == [1, 0, 1]).all() and len(null) == 0
    x, _ = gfp_solve(gens, np.array([1, 0, 0]), 2)
    assert x is None


def test_sqrt2_convergents():
    conv = sqrt2_convergents()
    firsts = [next(conv) for _ in range(6)]
    assert firsts == [(1, 1), (3, 2), (7, 5), (17, 12), (41, 29), (99, 70)]
    assert all(abs(h * h - 2 * k * k) == 1 for h, k in firsts)


def brute_sqrt2(eps: Fraction):
    """Smallest |b| with some a giving 0 < |2a + b sqrt 2| < eps (exact)."""
    for b in range(1, 10**6):
        # 2a nearest to -b sqrt 2
        r = isqrt(2 * b * b)
        for two_a in (-r - (r % 2), -r + (r % 2), -r - 2 + (r % 2)):
            a = two_a // 2
            x = 2 * a
            n = abs(x * x - 2 * b * b)
            if n and x < 0 and Fraction(n) < eps * (abs(x) + Fraction(isqrt(2 * b * b * 10**12), 10**6)):
                return a, b
    return None


@pytest.mark.parametrize("eps,pair", [(Fraction(1, 10), (-12, 17)), (Fraction(1, 2), (-2, 3))])
def test_sqrt2_witness_examples(eps, pair):
    w = sqrt2_density_witness(eps)
    assert (w.a, w.b) == pair
    assert w.bound_holds() and abs(w.norm) <= 3 and w.norm != 0
    assert brute_sqrt2(eps) == pair


def test_sqrt2_rejects_bad_epsilon():
    with pytest.raises(BadParams):
        sqrt2_density_witness(Fraction(3, 2))
