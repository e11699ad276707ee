"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -s`` to see the lines inline; they are
also written to the terminal summary by ``conftest.py``.
"""

from __future__ import annotations

import random
import time
from fractions import Fraction
from math import isqrt

from lcagroups.classify import classify, classify_stqh, classify_tm
from lcagroups.corpus import run_corpus
from lcagroups.dsl import render
from lcagroups.fgab import FgAbGroup, Subgroup, elementary_rank, member, sub_meet, sub_sum
from lcagroups.generate import random_dualizable, random_fg_pgroup, random_pgroup
from lcagroups.invariants import canonical_form, dual, p_rank
from lcagroups.lattice import check_modular_law, find_pentagon, pentagon_lattice, subgroup_lattice
from lcagroups.model import Card
from lcagroups.witness import (
    escape_certificate,
    exact_meet,
    local_square_confirms,
    make_family,
    pentagon_instance,
    sqrt2_density_witness,
)
from oracles import abelian_groups, fg_orders, respell, span

SAMPLES = 1000
REPORT: dict[int, str] = {}


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})"
    REPORT[n] = line
    print(line)


def test_criterion_1_corpus():
    t0 = time.perf_counter()
    res = run_corpus()
    dt = time.perf_counter() - t0
    bad = [e["name"] for e in res["entries"] if not e["ok"]]
    ok = res["ok"] and dt < 10
    record(1, ok, f"{res['passed']}/{res['total']} entries in {dt:.2f}s")
    assert not bad, bad
    assert dt < 10


def test_criterion_2_pgroups_tm_equals_stqh():
    rng = random.Random(2)
    bad = []
    for _ in range(SAMPLES):
        e = random_pgroup(rng)
        if classify_tm(e).tm != classify_stqh(e).stqh:
            bad.append(render(e))
    record(2, not bad, f"{SAMPLES} p-group samples, {len(bad)} disagreements")
    assert not bad, bad[:5]


def test_criterion_3_duality():
    rng = random.Random(3)
    bad = []
    for _ in range(SAMPLES):
        e = random_dualizable(rng)
        d = dual(e)
        if render(dual(d)) != render(e) or classify(e).tm != classify(d).tm:
            bad.append(render(e))
    record(3, not bad, f"{SAMPLES} dualizable samples, {len(bad)} failures")
    assert not bad, bad[:5]


def test_criterion_4_finite_abelian_lattices_are_modular():
    t0 = time.perf_counter()
    groups = list(abelian_groups(64))
    bad = []
    for g in groups:
        lat = subgroup_lattice(g, with_subgroups=False)
        if check_modular_law(lat) is not None or find_pentagon(lat) is not None:
            bad.append(g.torsion_orders)
    n5 = find_pentagon(pentagon_lattice())
    dt = time.perf_counter() - t0
    ok = not bad and n5 is not None and dt < 60
    record(4, ok, f"{len(groups)} groups of order <= 64 modular, N5 pentagon found, {dt:.1f}s")
    assert not bad, bad
    assert n5 is not None and n5.holds_in(pentagon_lattice())
    assert dt < 60


def test_criterion_5_subgroup_operations_against_brute_force():
    rng = random.Random(5)
    groups = list(abelian_groups(200))
    per_group = -(-10_000 // len(groups))
    pairs = 0
    bad = []
    for g in groups:
        elems = list(g.elements())
        for _ in range(per_group):
            xs = [rng.choice(elems) for _ in range(rng.randint(0, 2))]
            ys = [rng.choice(elems) for _ in range(rng.randint(0, 2))]
            a, b = Subgroup.generated(g, xs), Subgroup.generated(g, ys)
            sa, sb = span(g, xs), span(g, ys)
            probe = rng.choice(elems)
            if (
                set(sub_sum(a, b).elements()) != span(g, xs + ys)
                or set(sub_meet(a, b).elements()) != sa & sb
                or member(probe, a) != (probe in sa)
            ):
                bad.append((g.torsion_orders, xs, ys))
            pairs += 1
    record(5, not bad, f"{pairs} subgroup pairs over all {len(groups)} groups of order <= 200, {len(bad)} mismatches")
    assert not bad, bad[:5]


def test_criterion_6_witnesses():
    checks = {}

    # (i) the socle sum escapes every finite level
    t0 = time.perf_counter()
    cert = escape_certificate(make_family("socle-sum", 2), 64)
    dt = time.perf_counter() - t0
    checks["socle bound = n for n <= 64"] = cert.lower_bound == tuple(range(1, 65)) and cert.confirms_non_closed
    checks["socle under 5s"] = dt < 5

    # (ii) graph over a monothetic group: trivial meet and a pentagon
    for p, q in ((2, 3), (3, 2), (2, 5)):
        f = make_family("graph-monothetic", p, q)
        meet = exact_meet(f, levels=20)
        idx_ok = all(meet.index_in(f, "C", n) == q**n for n in meet.finite_level_meets)
        checks[f"graph ({p},{q}) meet"] = meet.meet_at_infinity == () and idx_ok and len(meet.finite_level_meets) == 20
        checks[f"graph ({p},{q}) pentagon"] = pentagon_instance(f, levels=20).ok

    # (iii) the local square reduces to the socle sum
    ls = escape_certificate(make_family("local-square", 2), 64)
    checks["local square reduces"] = (
        local_square_confirms(ls) and ls.lower_bound == tuple(n // 2 for n in range(1, 65))
    )

    # (iv) density in R
    t0 = time.perf_counter()
    w = sqrt2_density_witness(Fraction(1, 10**12))
    dt = time.perf_counter() - t0
    # independent check: |2a + b sqrt 2| = |N| / (|2a| + b sqrt 2) with N = 4a^2 - 2b^2,
    # using a rational lower bound for b sqrt 2
    x, b = 2 * w.a, w.b
    norm = x * x - 2 * b * b
    root_lo = Fraction(isqrt(2 * b * b * 10**40), 10**20)
    checks["sqrt2 at 1e-12"] = x < 0 < b and norm != 0 and Fraction(abs(norm)) < Fraction(1, 10**12) * (-x + root_lo)
    checks["sqrt2 under 1s"] = dt < 1

    failed = [k for k, v in checks.items() if not v]
    record(6, not failed, f"{len(checks) - len(failed)}/{len(checks)} witness checks" + (f", failed {failed}" if failed else ""))
    assert not failed, failed


def test_criterion_7_canonical_form():
    rng = random.Random(7)
    bad = []
    for _ in range(SAMPLES):
        e = random_pgroup(rng, finite_rank=True)
        cf = canonical_form(e)
        (t,) = cf.tuples
        if (
            canonical_form(cf.to_expr()) != cf
            or canonical_form(respell(e, rng)) != cf
            or Card(t.rank()) != p_rank(e, t.prime)
        ):
            bad.append(render(e))
    for _ in range(SAMPLES):
        p = rng.choice((2, 3, 5, 7))
        e = random_fg_pgroup(rng, p)
        (t,) = canonical_form(e).tuples
        if t.rank() != elementary_rank(FgAbGroup.from_cyclic_orders(fg_orders(e, p)), p):
            bad.append(render(e))
    record(7, not bad, f"{2 * SAMPLES} samples, {len(bad)} failures")
    assert not bad, bad[:5]
