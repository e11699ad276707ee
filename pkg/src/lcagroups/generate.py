"""Seeded random expressions for property tests.

Every sampler takes a ``random.Random`` and only returns expressions that pass
validation.
"""

from __future__ import annotations

import random

from .invariants import NotDualizable, dual
from .model import (
    INF,
    Atom,
    Card,
    ConstantPrime,
    DiscreteSum,
    DistinctPrimes,
    GroupExpr,
    Kind,
    LocalProduct,
    Product,
    SubDesignator,
    Sum,
)
from .validation import validate

SMALL_PRIMES = (2, 3, 5, 7, 11, 13)


def _card(rng: random.Random, finite_only: bool = False) -> Card:
    if not finite_only and rng.random() < 0.35:
        return INF
    return Card(rng.randint(0, 4))


def _prime_atom(rng: random.Random, kind: Kind, p: int | None) -> Atom:
    return Atom(kind, p, rng.randint(1, 3) if kind is Kind.CYCLIC else 0)


def _local(rng: random.Random, atom: Atom, card: Card, seq=None) -> LocalProduct:
    if atom.kind is Kind.QP:
        sub = SubDesignator(0, None, padic=True)
    elif atom.kind is Kind.CYCLIC:
        sub = SubDesignator(rng.randint(0, atom.exponent))
    else:
        sub = SubDesignator(rng.randint(0, 2))
    return LocalProduct(atom, sub, card, seq)


def _family(rng: random.Random, atom: Atom, card: Card, seq=None) -> GroupExpr:
    kind = atom.kind
    choices = ["local"] if kind.has_prime else []
    if card.is_finite or kind in (Kind.Z, Kind.CYCLIC, Kind.PRUEFER):
        choices.append("dsum")
    if card.is_finite or kind in (Kind.T, Kind.CYCLIC, Kind.ZP):
        choices.append("prod")
    if not choices:
        return atom if atom.prime is not None or not kind.has_prime else atom.with_prime(2)
    c = rng.choice(choices)
    if c == "local":
        return _local(rng, atom, card, seq)
    return (DiscreteSum if c == "dsum" else Product)(atom, card, seq)


def random_term(rng: random.Random, kinds: tuple[Kind, ...] = tuple(Kind), primes=SMALL_PRIMES,
                sequences: bool = True, finite_only: bool = False) -> GroupExpr:
    kind = rng.choice(kinds)
    r = rng.random()
    if r < 0.35:
        return _prime_atom(rng, kind, rng.choice(primes) if kind.has_prime else None)
    card = _card(rng, finite_only)
    if kind in (Kind.R, Kind.T) and card.is_infinite:
        card = Card(rng.randint(0, 3))
    if sequences and kind.has_prime and r > 0.75:
        if rng.random() < 0.5:
            seq = ConstantPrime(rng.choice(primes))
        else:
            start = rng.choice(primes)
            seq = DistinctPrimes((start,))
        return _family(rng, _prime_atom(rng, kind, None), card, seq)
    atom = _prime_atom(rng, kind, rng.choice(primes) if kind.has_prime else None)
    return _family(rng, atom, card)


def random_expr(rng: random.Random, max_terms: int = 4, **kw) -> GroupExpr:
    """Any valid expression of the grammar."""
    while True:
        e = Sum.of(*(random_term(rng, **kw) for _ in range(rng.randint(1, max_terms))))
        if validate(e).ok:
            return e


def random_dualizable(rng: random.Random, max_terms: int = 4) -> GroupExpr:
    while True:
        e = random_expr(rng, max_terms)
        try:
            dual(e)
        except NotDualizable:
            continue
        return e


P_KINDS = (Kind.CYCLIC, Kind.PRUEFER, Kind.ZP, Kind.QP)


def random_pgroup(rng: random.Random, p: int | None = None, max_terms: int = 4, finite_rank: bool = False) -> GroupExpr:
    """A p-group: every term lives at the single prime ``p``.

    With ``finite_rank`` only finitely many copies of each atom occur, and
    local products are left out.
    """
    p = p if p is not None else rng.choice(SMALL_PRIMES[:4])
    while True:
        parts = []
        for _ in range(rng.randint(1, max_terms)):
            if finite_rank:
                kind = rng.choice(P_KINDS)
                atom = _prime_atom(rng, kind, p)
                k = rng.randint(1, 3)
                parts.append(atom if k == 1 else rng.choice((DiscreteSum, Product))(atom, Card(k)))
                continue
            seq = ConstantPrime(p) if rng.random() < 0.2 else None
            t = random_term(rng, kinds=P_KINDS, primes=(p,), sequences=False)
            if seq is not None and isinstance(t, LocalProduct):
                t = LocalProduct(t.atom.with_prime(None), SubDesignator(t.sub.exponent, None, t.sub.padic), t.card, seq)
            elif seq is not None and isinstance(t, (DiscreteSum, Product)):
                t = type(t)(t.atom.with_prime(None), t.card, seq)
            parts.append(t)
        e = Sum.of(*parts)
        if validate(e).ok:
            return e


def random_fg_pgroup(rng: random.Random, p: int | None = None, max_terms: int = 4) -> GroupExpr:
    """Finite sums of Z(p^a) and Z_p: the topologically finitely generated p-groups."""
    p = p if p is not None else rng.choice(SMALL_PRIMES[:4])
    parts = []
    for _ in range(rng.randint(1, max_terms)):
        atom = _prime_atom(rng, rng.choice((Kind.CYCLIC, Kind.ZP)), p)
        k = rng.randint(1, 3)
        parts.append(atom if k == 1 else rng.choice((DiscreteSum, Product))(atom, Card(k)))
    return Sum.of(*parts)
