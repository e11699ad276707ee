"""Structural invariants of group expressions.

An expression is first expanded into *pieces*: one constituent per prime (or
per non-primary atom), each with a multiplicity.  Families over an infinite
sequence of distinct primes keep their finitely many low primes as concrete
pieces and contribute one *tail* piece standing for all primes from
``tail_start`` on.  Below ``tail_start`` every prime is spelled explicitly;
from ``tail_start`` on the primary components are all alike.

Per-prime data is gathered in :class:`PrimaryDescriptor`; the whole-group
record is :class:`InvariantRecord`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable

from .model import (
    INF,
    ONE,
    ZERO,
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
    Trivial,
    next_prime,
)
from .validation import require_valid


class NotPeriodic(ValueError):
    def __init__(self, path: str):
        self.path = path
        super().__init__(f"non-periodic constituent at {path}")


class NotDualizable(ValueError):
    def __init__(self, path: str, reason: str):
        self.path = path
        super().__init__(f"{path}: {reason}")


# ----------------------------------------------------------------------------
# pieces


@dataclass(frozen=True)
class Piece:
    """One constituent after expansion.

    ``ctor`` records how it was written ("atom", "dsum", "prod", "local") so
    that :meth:`to_expr` rebuilds the same expression.  ``shape`` is the
    topological type after removing degenerate local products: "discrete",
    "compact", "local" or "plain" (Q_p, Z, R, T).
    """

    kind: Kind
    prime: int | None
    exponent: int
    ctor: str
    card: Card
    sub: int = 0
    padic_sub: bool = False
    tail: bool = False

    @property
    def shape(self) -> str:
        k, c = self.kind, self.ctor
        if k is Kind.CYCLIC:
            if c == "local":
                if self.sub == self.exponent:
                    return "discrete"
                return "compact" if self.sub == 0 else "local"
            return "compact" if c == "prod" else "discrete"
        if k is Kind.PRUEFER:
            return "local" if c == "local" and self.sub > 0 else "discrete"
        if k is Kind.ZP:
            return "local" if c == "local" and self.sub > 0 else "compact"
        if k is Kind.QP:
            return "local" if c == "local" and self.card.is_infinite else "plain"
        return "plain"

    @property
    def is_torsion_kind(self) -> bool:
        return self.kind in (Kind.CYCLIC, Kind.PRUEFER)

    def sort_key(self) -> tuple:
        return (self.tail, self.prime or 0, self.kind.value, self.exponent, self.ctor, self.sub, self.card.sort_key())

    def to_expr(self, tail_start: int | None = None) -> GroupExpr:
        atom = Atom(self.kind, None if self.tail else self.prime, self.exponent)
        seq = DistinctPrimes((tail_start,)) if self.tail else None
        if self.ctor == "atom":
            return atom
        if self.ctor == "dsum":
            return DiscreteSum(atom, self.card, seq)
        if self.ctor == "prod":
            return Product(atom, self.card, seq)
        return LocalProduct(atom, SubDesignator(self.sub, None, self.padic_sub), self.card, seq)

    def u_part(self) -> "Piece | None":
        """The piece's share of the chosen open compact subgroup."""
        sh = self.shape
        if self.kind is Kind.T:
            return self
        if self.kind is Kind.CYCLIC:
            if sh == "compact":
                return self
            if sh == "local":
                return self._compact(Kind.CYCLIC, self.exponent - self.sub)
            return None
        if self.kind is Kind.PRUEFER:
            return self._compact(Kind.CYCLIC, self.sub) if sh == "local" else None
        if self.kind is Kind.ZP:
            return self if sh == "compact" else self._compact(Kind.ZP, 0)
        if self.kind is Kind.QP:
            return self._compact(Kind.ZP, 0)
        return None

    def _compact(self, kind: Kind, exponent: int) -> "Piece":
        return Piece(kind, self.prime, exponent, "prod", self.card, tail=self.tail)


def _family_pieces(e) -> list[tuple[int | None, Card]]:
    """(prime, multiplicity) pairs of a family; prime None marks the tail."""
    seq = e.primes
    if seq is None:
        return [(e.atom.prime, e.card)]
    if isinstance(seq, ConstantPrime):
        return [(seq.p, e.card)]
    if e.card.is_finite:
        return [(p, ONE) for p in seq.first(e.card.n)]
    return []  # handled by the caller once tail_start is known


def _make_piece(e, prime: int | None, card: Card, tail: bool = False) -> Piece | None:
    if card == ZERO:
        return None
    if isinstance(e, Atom):
        return Piece(e.kind, e.prime, e.exponent, "atom", ONE)
    a = e.atom
    ctor = {DiscreteSum: "dsum", Product: "prod", LocalProduct: "local"}[type(e)]
    if ctor == "dsum" and card == ONE and not tail:
        ctor = "atom"
    sub = e.sub.exponent if isinstance(e, LocalProduct) else 0
    padic = e.sub.padic if isinstance(e, LocalProduct) else False
    return Piece(a.kind, prime, a.exponent, ctor, card if not tail else INF, sub, padic, tail)


def _leaves(e: GroupExpr) -> list[GroupExpr]:
    if isinstance(e, Sum):
        return list(e.parts)
    if isinstance(e, Trivial):
        return []
    return [e]


@dataclass(frozen=True)
class Expansion:
    pieces: tuple[Piece, ...]
    tail_start: int | None

    @property
    def concrete(self) -> tuple[Piece, ...]:
        return tuple(p for p in self.pieces if not p.tail)

    @property
    def tail(self) -> tuple[Piece, ...]:
        return tuple(p for p in self.pieces if p.tail)

    def primes(self) -> list[int]:
        return sorted({p.prime for p in self.concrete if p.prime is not None})

    def of_kind(self, *kinds: Kind) -> list[Piece]:
        return [p for p in self.pieces if p.kind in kinds]

    def count(self, *kinds: Kind) -> Card:
        total = ZERO
        for p in self.of_kind(*kinds):
            total = total + p.card
        return total

    def to_expr(self, pieces: Iterable[Piece] | None = None) -> GroupExpr:
        chosen = self.pieces if pieces is None else tuple(pieces)
        return Sum.of(*(p.to_expr(self.tail_start) for p in chosen))


def expand(e: GroupExpr) -> Expansion:
    leaves = _leaves(e)
    infinite_distinct = [
        x for x in leaves
        if not isinstance(x, Atom) and isinstance(x.primes, DistinctPrimes) and x.card.is_infinite
    ]
    explicit: set[int] = set()
    for x in leaves:
        if isinstance(x, Atom):
            if x.prime is not None:
                explicit.add(x.prime)
        elif x not in infinite_distinct:
            explicit.update(p for p, _ in _family_pieces(x) if p is not None)
    tail_start = None
    if infinite_distinct:
        tail_start = max(x.primes.uniform_from for x in infinite_distinct)
        if explicit:
            tail_start = max(tail_start, next_prime(max(explicit)))
    pieces: list[Piece] = []
    for x in leaves:
        if x in infinite_distinct:
            seq = x.primes
            n = 0
            while True:
                p = seq.first(n + 1)[-1]
                if p >= tail_start:
                    break
                pieces.append(_make_piece(x, p, ONE))
                n += 1
            pieces.append(_make_piece(x, None, INF, tail=True))
        elif isinstance(x, Atom):
            pieces.append(_make_piece(x, x.prime, ONE))
        else:
            pieces.extend(_make_piece(x, p, c) for p, c in _family_pieces(x))
    pieces = [p for p in pieces if p is not None]
    return Expansion(tuple(sorted(pieces, key=Piece.sort_key)), tail_start)


def normalize(e: GroupExpr) -> GroupExpr:
    """Expression rebuilt from its expansion (distinct families split at the tail)."""
    return expand(e).to_expr()


# ----------------------------------------------------------------------------
# primary descriptors


def _merge(items: Iterable[tuple[tuple, Card]]) -> tuple:
    acc: dict[tuple, Card] = {}
    for key, c in items:
        acc[key] = acc.get(key, ZERO) + c
    return tuple(sorted((k + (c,) for k, c in acc.items() if c != ZERO), key=lambda t: t[:-1]))


def _total(cards: Iterable[Card]) -> Card:
    s = ZERO
    for c in cards:
        s = s + c
    return s


@dataclass(frozen=True)
class PrimaryDescriptor:
    """The p-primary constituent, up to isomorphism within the grammar.

    Multisets are tuples ``(exponent, [sub,] multiplicity)``.  For the tail
    descriptor ``prime`` is None and multiplicities are per prime.
    """

    prime: int | None
    qp_mult: Card = ZERO
    qp_local_mult: Card = ZERO
    pruefer_discrete_mult: Card = ZERO
    pruefer_via_local: tuple = ()
    zp_mult_compact: Card = ZERO
    zp_local: tuple = ()
    cyclic_discrete: tuple = ()
    cyclic_compact_power: tuple = ()
    cyclic_local: tuple = ()

    @classmethod
    def from_pieces(cls, prime: int | None, pieces: Iterable[Piece]) -> "PrimaryDescriptor":
        ps = list(pieces)

        def mult(p: Piece) -> Card:
            return ONE if p.tail else p.card

        def pick(kind: Kind, shape: str) -> list[Piece]:
            return [p for p in ps if p.kind is kind and p.shape == shape]

        return cls(
            prime=prime,
            qp_mult=_total(mult(p) for p in pick(Kind.QP, "plain")),
            qp_local_mult=_total(mult(p) for p in pick(Kind.QP, "local")),
            pruefer_discrete_mult=_total(mult(p) for p in pick(Kind.PRUEFER, "discrete")),
            pruefer_via_local=_merge(((p.sub,), mult(p)) for p in pick(Kind.PRUEFER, "local")),
            zp_mult_compact=_total(mult(p) for p in pick(Kind.ZP, "compact")),
            zp_local=_merge(((p.sub,), mult(p)) for p in pick(Kind.ZP, "local")),
            cyclic_discrete=_merge(((p.exponent,), mult(p)) for p in pick(Kind.CYCLIC, "discrete")),
            cyclic_compact_power=_merge(((p.exponent,), mult(p)) for p in pick(Kind.CYCLIC, "compact")),
            cyclic_local=_merge(((p.exponent, p.sub), mult(p)) for p in pick(Kind.CYCLIC, "local")),
        )

    # multiplicity totals
    @staticmethod
    def _sum(ms: tuple) -> Card:
        return _total(t[-1] for t in ms)

    @property
    def pruefer_local_mult(self) -> Card:
        return self._sum(self.pruefer_via_local)

    @property
    def zp_local_mult(self) -> Card:
        return self._sum(self.zp_local)

    @property
    def cyclic_discrete_mult(self) -> Card:
        return self._sum(self.cyclic_discrete)

    @property
    def cyclic_compact_mult(self) -> Card:
        return self._sum(self.cyclic_compact_power)

    @property
    def cyclic_local_mult(self) -> Card:
        return self._sum(self.cyclic_local)

    def rank(self) -> Card:
        return _total([
            self.qp_mult, self.qp_local_mult, self.pruefer_discrete_mult, self.pruefer_local_mult,
            self.zp_mult_compact, self.zp_local_mult, self.cyclic_discrete_mult,
            self.cyclic_compact_mult, self.cyclic_local_mult,
        ])

    def is_trivial(self) -> bool:
        return self.rank() == ZERO

    def rank_U(self) -> Card:
        """p-rank of the chosen open compact subgroup."""
        return _total([
            self.qp_mult, self.qp_local_mult, self.zp_mult_compact, self.zp_local_mult,
            self.cyclic_compact_mult, self.cyclic_local_mult, self.pruefer_local_mult,
        ])

    def rank_GU(self) -> Card:
        """p-rank of the discrete quotient by the chosen open compact subgroup."""
        return _total([
            self.qp_mult, self.qp_local_mult, self.pruefer_discrete_mult, self.pruefer_local_mult,
            self.zp_local_mult, self.cyclic_discrete_mult, self.cyclic_local_mult,
        ])

    def is_discrete(self) -> bool:
        return (
            self.qp_mult == ZERO and self.qp_local_mult == ZERO
            and self.zp_mult_compact == ZERO and self.zp_local_mult == ZERO
            and self.cyclic_compact_mult.is_finite and self.cyclic_local_mult.is_finite
            and self.pruefer_local_mult.is_finite
        )

    def is_compact(self) -> bool:
        return (
            self.qp_mult == ZERO and self.qp_local_mult == ZERO
            and self.pruefer_discrete_mult == ZERO and self.pruefer_local_mult == ZERO
            and self.cyclic_discrete_mult.is_finite and self.cyclic_local_mult.is_finite
            and self.zp_local_mult.is_finite
        )

    def is_torsion(self) -> bool:
        return self.rank_mod_torsion() == ZERO

    def rank_mod_torsion(self) -> Card:
        return _total([self.qp_mult, self.qp_local_mult, self.zp_mult_compact, self.zp_local_mult])

    def divisible_closed(self) -> bool:
        """div(A_p) is closed: no infinite local product of Q_p or Z(p^inf)."""
        return self.qp_local_mult.is_finite and self.pruefer_local_mult.is_finite

    def divisible_rank(self) -> Card:
        return _total([self.qp_mult, self.qp_local_mult, self.pruefer_discrete_mult, self.pruefer_local_mult])

    def is_divisible(self) -> bool:
        return (
            self.divisible_closed()
            and self.zp_mult_compact == ZERO and self.zp_local_mult == ZERO
            and self.cyclic_discrete_mult == ZERO and self.cyclic_compact_mult == ZERO
            and self.cyclic_local_mult == ZERO
        )

    def is_reduced(self) -> bool:
        return self.divisible_rank() == ZERO

    def reduced_part_compact(self) -> bool:
        """A_p / div(A_p) is compact (requires div closed)."""
        return (
            self.divisible_closed()
            and self.cyclic_discrete_mult.is_finite and self.cyclic_local_mult.is_finite
            and self.zp_local_mult.is_finite
        )

    def torsion_discrete(self) -> bool:
        """tor(A_p) meets the open compact subgroup in a finite group."""
        return (
            self.cyclic_compact_mult.is_finite and self.cyclic_local_mult.is_finite
            and self.pruefer_local_mult.is_finite
        )

    def meets_U(self) -> bool:
        return self.rank_U() != ZERO

    def inside_U(self) -> bool:
        return self.rank_GU() == ZERO

    def to_json(self) -> dict:
        def ms(t):
            return [[*x[:-1], x[-1].to_json()] for x in t]

        return {
            "prime": self.prime if self.prime is not None else "tail",
            "qp": self.qp_mult.to_json(),
            "qp_local": self.qp_local_mult.to_json(),
            "pruefer": self.pruefer_discrete_mult.to_json(),
            "pruefer_local": ms(self.pruefer_via_local),
            "zp": self.zp_mult_compact.to_json(),
            "zp_local": ms(self.zp_local),
            "cyclic_discrete": ms(self.cyclic_discrete),
            "cyclic_compact": ms(self.cyclic_compact_power),
            "cyclic_local": ms(self.cyclic_local),
        }


@dataclass(frozen=True)
class PrimaryDecomposition:
    by_prime: dict[int, PrimaryDescriptor]
    tail: PrimaryDescriptor | None
    tail_start: int | None
    remainder: GroupExpr  # the Z, R and T constituents

    def descriptor(self, p: int) -> PrimaryDescriptor:
        if p in self.by_prime:
            return self.by_prime[p]
        if self.tail is not None and p >= self.tail_start:
            from .model import is_prime

            if is_prime(p):
                return PrimaryDescriptor(**{**self.tail.__dict__, "prime": p})
        return PrimaryDescriptor(p)

    def all(self) -> list[PrimaryDescriptor]:
        out = [self.by_prime[p] for p in sorted(self.by_prime)]
        if self.tail is not None:
            out.append(self.tail)
        return out

    def to_json(self) -> dict:
        return {
            "primes": {str(p): d.to_json() for p, d in sorted(self.by_prime.items())},
            "tail": None if self.tail is None else {"from": self.tail_start, **self.tail.to_json()},
        }


PRIMARY_KINDS = (Kind.CYCLIC, Kind.PRUEFER, Kind.ZP, Kind.QP)


def primary_decompose(e: GroupExpr, total: bool = False) -> PrimaryDecomposition:
    """Split the periodic constituent of ``e`` into primary descriptors.

    With ``total`` set a non-periodic constituent raises :class:`NotPeriodic`.
    """
    ex = expand(e)
    rest = [p for p in ex.pieces if p.kind not in PRIMARY_KINDS]
    if total and rest:
        raise NotPeriodic(f"$ ({rest[0].kind.value})")
    by_prime = {
        p: PrimaryDescriptor.from_pieces(p, [x for x in ex.concrete if x.prime == p])
        for p in ex.primes()
    }
    by_prime = {p: d for p, d in by_prime.items() if not d.is_trivial()}
    tail = None
    if ex.tail:
        tail = PrimaryDescriptor.from_pieces(None, ex.tail)
    return PrimaryDecomposition(by_prime, tail, ex.tail_start, ex.to_expr(rest))


def p_rank(e: GroupExpr, p: int) -> Card:
    return primary_decompose(e).descriptor(p).rank()


# ----------------------------------------------------------------------------
# the invariant record


@dataclass(frozen=True)
class InvariantRecord:
    is_discrete: bool
    is_compact: bool
    is_periodic: bool
    is_totally_disconnected: bool
    is_torsion: bool
    is_divisible: bool
    is_reduced: bool
    is_inductively_monothetic: bool
    primes: dict
    per_prime: dict
    torsion_part: GroupExpr | None
    divisible_part: GroupExpr | None
    comp_part: GroupExpr | None
    connected_part: GroupExpr | None
    torsion_discrete: bool
    divisible_closed_finite_rank: bool
    zrank_of_G_mod_U: Card
    dim_connected: Card

    def to_json(self) -> dict:
        from .dsl import render

        def part(x):
            return None if x is None else render(x)

        return {
            "is_discrete": self.is_discrete,
            "is_compact": self.is_compact,
            "is_periodic": self.is_periodic,
            "is_totally_disconnected": self.is_totally_disconnected,
            "is_torsion": self.is_torsion,
            "is_divisible": self.is_divisible,
            "is_reduced": self.is_reduced,
            "is_inductively_monothetic": self.is_inductively_monothetic,
            "primes": self.primes,
            "per_prime": self.per_prime,
            "torsion_part": part(self.torsion_part),
            "divisible_part": part(self.divisible_part),
            "comp_part": part(self.comp_part),
            "connected_part": part(self.connected_part),
            "torsion_discrete": self.torsion_discrete,
            "divisible_closed_finite_rank": self.divisible_closed_finite_rank,
            "zrank_of_G_mod_U": self.zrank_of_G_mod_U.to_json(),
            "dim_connected": self.dim_connected.to_json(),
        }


def _global(d: PrimaryDescriptor) -> PrimaryDescriptor:
    """The tail descriptor scaled to infinitely many primes."""

    def sc(ms):
        return tuple(t[:-1] + (t[-1] * INF,) for t in ms)

    return PrimaryDescriptor(
        None, d.qp_mult * INF, d.qp_local_mult * INF, d.pruefer_discrete_mult * INF,
        sc(d.pruefer_via_local), d.zp_mult_compact * INF, sc(d.zp_local),
        sc(d.cyclic_discrete), sc(d.cyclic_compact_power), sc(d.cyclic_local),
    )


def invariants(e: GroupExpr) -> InvariantRecord:
    require_valid(e)
    ex = expand(e)
    dec = primary_decompose(e)
    nz, nr, nt = ex.count(Kind.Z), ex.count(Kind.R), ex.count(Kind.T)
    descs = list(dec.by_prime.values())
    tail = dec.tail
    tail_g = _global(tail) if tail is not None else None

    is_td = nr == ZERO and nt == ZERO
    is_periodic = is_td and nz == ZERO
    # tail: per-prime discreteness is not enough, infinitely many primes
    # with a nonzero compact share rule out discreteness of the whole
    is_discrete = nr == ZERO and nt == ZERO and all(d.is_discrete() for d in descs) and (
        tail is None or (tail.is_discrete() and not tail.meets_U())
    )
    is_compact = nr == ZERO and nz == ZERO and all(d.is_compact() for d in descs) and (
        tail is None or tail_g.is_compact()
    )
    tail_torsion_ok = tail is None or (tail.is_torsion() and not tail.meets_U())
    is_torsion = is_periodic and all(d.is_torsion() for d in descs) and tail_torsion_ok

    # the tail local product of Q_p is divisible as a whole (it is closed);
    # a tail local product of Prüfer groups has dense, non-closed div
    div_closed = all(d.divisible_closed() for d in descs) and (
        tail is None or tail.pruefer_local_mult == ZERO
    )
    div_pieces = [
        p for p in ex.pieces
        if p.kind in (Kind.R, Kind.T, Kind.QP) or (p.kind is Kind.PRUEFER and (p.shape == "discrete" or p.card.is_finite and not p.tail))
    ]
    is_divisible = (
        div_closed and len(div_pieces) == len(ex.pieces)
    )
    is_reduced = not div_pieces and not any(p.kind is Kind.PRUEFER for p in ex.pieces)

    per_prime = {
        str(p): {"rank": d.rank().to_json(), "rank_of_open_compact": d.rank_U().to_json(),
                 "rank_of_quotient_by_open_compact": d.rank_GU().to_json()}
        for p, d in sorted(dec.by_prime.items())
    }
    if tail is not None:
        per_prime["tail"] = {"from": dec.tail_start, "rank": tail.rank().to_json(),
                             "rank_of_open_compact": tail.rank_U().to_json(),
                             "rank_of_quotient_by_open_compact": tail.rank_GU().to_json()}
    is_im = is_periodic and all(d.rank() == ONE for d in dec.all())

    # closed subgroups named by the record
    tor_pieces = [p for p in ex.pieces if p.is_torsion_kind]
    tor_closed = nt == ZERO and (tail is None or not any(
        p.tail and p.is_torsion_kind and p.u_part() is not None for p in ex.pieces
    ))
    torsion_part = ex.to_expr(tor_pieces) if tor_closed else None
    divisible_part = ex.to_expr(div_pieces) if div_closed else None
    comp_part = ex.to_expr(p for p in ex.pieces if p.kind not in (Kind.Z, Kind.R))
    connected_part = ex.to_expr(ex.of_kind(Kind.R, Kind.T))

    torsion_discrete = tor_closed and all(d.torsion_discrete() for d in descs)
    div_rank = _total(d.divisible_rank() for d in descs)
    if tail is not None and tail.divisible_rank() != ZERO:
        div_rank = INF
    return InvariantRecord(
        is_discrete=is_discrete,
        is_compact=is_compact,
        is_periodic=is_periodic,
        is_totally_disconnected=is_td,
        is_torsion=is_torsion,
        is_divisible=is_divisible,
        is_reduced=is_reduced,
        is_inductively_monothetic=is_im,
        primes={"finite": sorted(dec.by_prime), "tail_from": dec.tail_start},
        per_prime=per_prime,
        torsion_part=torsion_part,
        divisible_part=divisible_part,
        comp_part=comp_part,
        connected_part=connected_part,
        torsion_discrete=torsion_discrete,
        divisible_closed_finite_rank=div_closed and div_rank.is_finite,
        zrank_of_G_mod_U=nz,
        dim_connected=nr + nt,
    )


def chosen_U(e: GroupExpr) -> GroupExpr | None:
    """The deterministic open compact subgroup: compact constituents plus the
    designated parts of local products.  None when a copy of R is present."""
    ex = expand(e)
    if ex.count(Kind.R) != ZERO:
        return None
    parts = [p.u_part() for p in ex.pieces]
    # a single synthesised copy reads better as the bare atom
    parts = [replace(p, ctor="atom") if p is not None and p.ctor == "prod" and p.card == ONE and not p.tail
             else p for p in parts]
    return ex.to_expr(p for p in parts if p is not None)


# ----------------------------------------------------------------------------
# duality

_DUAL_KIND = {
    Kind.Z: Kind.T, Kind.T: Kind.Z, Kind.R: Kind.R, Kind.CYCLIC: Kind.CYCLIC,
    Kind.PRUEFER: Kind.ZP, Kind.ZP: Kind.PRUEFER, Kind.QP: Kind.QP,
}


def _dual_atom(a: Atom) -> Atom:
    return Atom(_DUAL_KIND[a.kind], a.prime, a.exponent)


def _dual(e: GroupExpr, path: str) -> GroupExpr:
    if isinstance(e, Trivial):
        return e
    if isinstance(e, Atom):
        return _dual_atom(e)
    if isinstance(e, Sum):
        return Sum.of(*(_dual(p, f"{path}.parts[{i}]") for i, p in enumerate(e.parts)))
    if isinstance(e, DiscreteSum):
        return Product(_dual_atom(e.atom), e.card, e.primes)
    if isinstance(e, Product):
        return DiscreteSum(_dual_atom(e.atom), e.card, e.primes)
    if isinstance(e, LocalProduct):
        k, s = e.atom.kind, e.sub
        if k is Kind.CYCLIC:
            sub = SubDesignator(e.atom.exponent - s.exponent, s.prime)
        elif k in (Kind.ZP, Kind.PRUEFER):
            # the annihilator of p^b Z_p is Z(p^b), and conversely
            sub = SubDesignator(s.exponent, s.prime)
        elif k is Kind.QP:
            sub = s
        else:
            raise NotDualizable(path, f"no local pairing for {k.value}")
        return LocalProduct(_dual_atom(e.atom), sub, e.card, e.primes)
    raise NotDualizable(path, f"unsupported node {type(e).__name__}")


def dual(e: GroupExpr) -> GroupExpr:
    """Pontryagin dual, constituent by constituent."""
    require_valid(e)
    d = _dual(e, "$")
    from .validation import validate

    rep = validate(d)
    if not rep.ok:
        v = rep.violations[0]
        raise NotDualizable(v.path, f"dual leaves the grammar ({v.message})")
    return d


# ----------------------------------------------------------------------------
# canonical form for finite-rank primary parts


@dataclass(frozen=True)
class CarinTuple:
    """Q_p^m + Z(p^inf)^n + Z_p^k + F, F given by its invariant factors."""

    prime: int
    m: int
    n: int
    k: int
    F: tuple[int, ...]

    def rank(self) -> int:
        return self.m + self.n + self.k + len(self.F)

    def to_expr(self) -> GroupExpr:
        p = self.prime
        parts: list[GroupExpr] = []
        for kind, count, ctor in ((Kind.QP, self.m, Product), (Kind.PRUEFER, self.n, DiscreteSum), (Kind.ZP, self.k, Product)):
            if count == 1:
                parts.append(Atom(kind, p))
            elif count > 1:
                parts.append(ctor(Atom(kind, p), Card(count)))
        for q in self.F:
            a = 0
            while q > 1:
                q //= p
                a += 1
            parts.append(Atom(Kind.CYCLIC, p, a))
        return Sum.of(*parts)

    def to_json(self) -> dict:
        return {"prime": self.prime, "m": self.m, "n": self.n, "k": self.k, "F": list(self.F)}


@dataclass(frozen=True)
class CanonicalForm:
    tuples: tuple[CarinTuple, ...]
    residual: GroupExpr

    def to_expr(self) -> GroupExpr:
        return Sum.of(*(t.to_expr() for t in self.tuples), self.residual)

    def to_json(self) -> dict:
        from .dsl import render

        return {"tuples": [t.to_json() for t in self.tuples], "residual": render(self.residual)}


def _carin(p: int, pieces: list[Piece]) -> CarinTuple:
    m = n = k = 0
    cyclic: list[int] = []
    for x in pieces:
        c = x.card.n
        if x.kind is Kind.QP:
            m += c
        elif x.kind is Kind.PRUEFER:
            # a finite local product of Prüfer groups is just a power
            n += c
        elif x.kind is Kind.ZP:
            k += c
        else:
            cyclic.extend([p ** x.exponent] * c)
    return CarinTuple(p, m, n, k, tuple(sorted(cyclic)))


def canonical_form(e: GroupExpr) -> CanonicalForm:
    require_valid(e)
    ex = expand(e)
    tuples = []
    residual: list[Piece] = []
    for p in ex.primes():
        ps = [x for x in ex.concrete if x.prime == p]
        if all(x.card.is_finite for x in ps):
            tuples.append(_carin(p, ps))
        else:
            residual.extend(ps)
    residual.extend(x for x in ex.pieces if x.tail or x.prime is None)
    return CanonicalForm(tuple(tuples), ex.to_expr(sorted(residual, key=Piece.sort_key)))
