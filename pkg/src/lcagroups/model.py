"""Expression grammar for the supported class of LCA groups.

Every value here is immutable.  ``Sum`` flattens and sorts its parts on
construction, so two sums that differ only in the order of summands are equal
and render identically.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

from sympy.ntheory import factorint
from sympy.ntheory import isprime as _isprime
from sympy.ntheory import nextprime as _nextprime


@lru_cache(maxsize=4096)
def is_prime(n: int) -> bool:
    return n >= 2 and bool(_isprime(n))


@lru_cache(maxsize=4096)
def next_prime(n: int) -> int:
    """Smallest prime strictly greater than ``n``."""
    return int(_nextprime(n))


def prime_power(n: int) -> tuple[int, int] | None:
    """``(p, k)`` with ``n == p**k`` and ``k >= 1``, or None."""
    if n < 2:
        return None
    f = factorint(n)
    if len(f) != 1:
        return None
    (p, k), = f.items()
    return int(p), int(k)


@dataclass(frozen=True)
class Card:
    """A cardinal that is finite or countably infinite (``n is None``)."""

    n: int | None

    @classmethod
    def of(cls, value: "int | str | Card") -> "Card":
        if isinstance(value, Card):
            return value
        if value in ("inf", None):
            return INF
        return cls(int(value))

    @property
    def is_finite(self) -> bool:
        return self.n is not None

    @property
    def is_infinite(self) -> bool:
        return self.n is None

    def __add__(self, other: "Card | int") -> "Card":
        other = Card.of(other)
        if self.n is None or other.n is None:
            return INF
        return Card(self.n + other.n)

    __radd__ = __add__

    def __mul__(self, other: "Card | int") -> "Card":
        other = Card.of(other)
        if self.n == 0 or other.n == 0:
            return Card(0)
        if self.n is None or other.n is None:
            return INF
        return Card(self.n * other.n)

    def __lt__(self, other: "Card") -> bool:  # type: ignore[override]
        other = Card.of(other)
        if self.n is None:
            return False
        return other.n is None or self.n < other.n

    def __le__(self, other: "Card") -> bool:  # type: ignore[override]
        return self == Card.of(other) or self < other

    def __gt__(self, other: "Card") -> bool:
        return Card.of(other) < self

    def __ge__(self, other: "Card") -> bool:
        return Card.of(other) <= self

    def __bool__(self) -> bool:
        return self.n != 0

    def __str__(self) -> str:
        return "inf" if self.n is None else str(self.n)

    def to_json(self) -> int | str:
        return "inf" if self.n is None else self.n

    def sort_key(self) -> tuple[int, int]:
        return (1, 0) if self.n is None else (0, self.n)


INF = Card(None)
ZERO = Card(0)
ONE = Card(1)

# ranks use the same two-point extension of the naturals
ExtNat = Card


@dataclass(frozen=True)
class ConstantPrime:
    p: int

    def first(self, n: int) -> list[int]:
        return [self.p] * n

    def sort_key(self) -> tuple:
        return (1, self.p)


@dataclass(frozen=True)
class DistinctPrimes:
    """Strictly increasing primes: the seed, then every prime above it.

    The seed is trimmed to its shortest prefix that regenerates the same
    sequence, so equal sequences compare equal.
    """

    seed: tuple[int, ...] = (2,)

    def __post_init__(self) -> None:
        seed = tuple(int(p) for p in self.seed)
        if seed and all(is_prime(p) for p in seed) and all(a < b for a, b in zip(seed, seed[1:])):
            while len(seed) >= 2 and seed[-1] == next_prime(seed[-2]):
                seed = seed[:-1]
        object.__setattr__(self, "seed", seed)

    @property
    def uniform_from(self) -> int:
        """Every prime >= this value belongs to the sequence."""
        return self.seed[-1]

    def first(self, n: int) -> list[int]:
        out = list(self.seed[:n])
        while len(out) < n:
            out.append(next_prime(out[-1]))
        return out

    def contains(self, p: int) -> bool:
        return p in self.seed or (is_prime(p) and p > self.seed[-1])

    def sort_key(self) -> tuple:
        return (2, self.seed)


PrimeSequence = Union[ConstantPrime, DistinctPrimes]


class Kind(enum.Enum):
    Z = "Z"
    R = "R"
    T = "T"
    CYCLIC = "Z()"
    PRUEFER = "Zinf"
    ZP = "Zp"
    QP = "Qp"

    @property
    def has_prime(self) -> bool:
        return self not in (Kind.Z, Kind.R, Kind.T)


_KIND_RANK = {k: i for i, k in enumerate(Kind)}
DISCRETE_KINDS = frozenset({Kind.Z, Kind.CYCLIC, Kind.PRUEFER})
COMPACT_KINDS = frozenset({Kind.T, Kind.CYCLIC, Kind.ZP})
DIVISIBLE_KINDS = frozenset({Kind.R, Kind.T, Kind.PRUEFER, Kind.QP})


class GroupExpr:
    """Base class of all expression nodes."""

    def sort_key(self) -> tuple:
        raise NotImplementedError

    def __add__(self, other: "GroupExpr") -> "GroupExpr":
        return Sum.of(self, other)


@dataclass(frozen=True)
class Trivial(GroupExpr):
    def sort_key(self) -> tuple:
        return (0,)


@dataclass(frozen=True)
class Atom(GroupExpr):
    """A single group.  Inside a family over a prime sequence ``prime`` is None."""

    kind: Kind
    prime: int | None = None
    exponent: int = 0

    def __post_init__(self) -> None:
        if self.kind is Kind.CYCLIC:
            if self.exponent == 0:
                object.__setattr__(self, "exponent", 1)
        else:
            object.__setattr__(self, "exponent", 0)

    def with_prime(self, p: int | None) -> "Atom":
        return Atom(self.kind, p, self.exponent)

    def sort_key(self) -> tuple:
        return (1,) + self.atom_key()

    def atom_key(self) -> tuple:
        return (_KIND_RANK[self.kind], self.prime or 0, self.exponent)


def Z() -> Atom:
    return Atom(Kind.Z)


def R() -> Atom:
    return Atom(Kind.R)


def T() -> Atom:
    return Atom(Kind.T)


def cyclic(p: int | None, a: int = 1) -> Atom:
    return Atom(Kind.CYCLIC, p, a)


def pruefer(p: int | None) -> Atom:
    return Atom(Kind.PRUEFER, p)


def padic_integers(p: int | None) -> Atom:
    return Atom(Kind.ZP, p)


def padic_rationals(p: int | None) -> Atom:
    return Atom(Kind.QP, p)


def _seq_key(seq: PrimeSequence | None) -> tuple:
    return (0,) if seq is None else seq.sort_key()


@dataclass(frozen=True)
class Sum(GroupExpr):
    """Finite topological direct sum; parts are flattened and sorted."""

    parts: tuple[GroupExpr, ...]

    def __post_init__(self) -> None:
        flat: list[GroupExpr] = []
        for p in self.parts:
            if isinstance(p, Sum):
                flat.extend(p.parts)
            elif not isinstance(p, Trivial):
                flat.append(p)
        if len(flat) < 2:
            raise ValueError("Sum needs at least two nontrivial parts; use Sum.of")
        object.__setattr__(self, "parts", tuple(sorted(flat, key=lambda e: e.sort_key())))

    @staticmethod
    def of(*parts: GroupExpr) -> GroupExpr:
        flat: list[GroupExpr] = []
        for p in parts:
            if isinstance(p, Sum):
                flat.extend(p.parts)
            elif not isinstance(p, Trivial):
                flat.append(p)
        if not flat:
            return Trivial()
        if len(flat) == 1:
            return flat[0]
        return Sum(tuple(flat))

    def sort_key(self) -> tuple:
        return (5,) + tuple(p.sort_key() for p in self.parts)


@dataclass(frozen=True)
class DiscreteSum(GroupExpr):
    """Direct sum of ``card`` copies of ``atom`` (primes drawn from ``primes``)."""

    atom: Atom
    card: Card
    primes: PrimeSequence | None = None

    def sort_key(self) -> tuple:
        return (2,) + self.atom.atom_key() + (self.card.sort_key(), _seq_key(self.primes))


@dataclass(frozen=True)
class Product(GroupExpr):
    """Cartesian product of ``card`` copies of ``atom``."""

    atom: Atom
    card: Card
    primes: PrimeSequence | None = None

    def sort_key(self) -> tuple:
        return (3,) + self.atom.atom_key() + (self.card.sort_key(), _seq_key(self.primes))


@dataclass(frozen=True)
class SubDesignator:
    """Open compact subgroup of a local-product factor.

    ``exponent`` b means: index p^b in Z(p^a) or Z_p, order p^b in Z(p^inf).
    ``padic`` marks the ``Zp(p)`` spelling used for the pair (Q_p, Z_p).
    ``prime`` is an int, the family's prime sequence, or None (same as atom).
    """

    exponent: int = 0
    prime: int | PrimeSequence | None = None
    padic: bool = False

    def sort_key(self) -> tuple:
        pk = (0,) if self.prime is None else (1, self.prime) if isinstance(self.prime, int) else (2,) + self.prime.sort_key()
        return (self.padic, self.exponent, pk)


@dataclass(frozen=True)
class LocalProduct(GroupExpr):
    """Local product of ``card`` copies of (atom, designated open compact)."""

    atom: Atom
    sub: SubDesignator
    card: Card
    primes: PrimeSequence | None = None

    def __post_init__(self) -> None:
        # the designator names the template's own prime: explicit when fixed,
        # implicit (None) when drawn from the family's sequence
        s = self.sub
        if self.primes is None and s.prime is None:
            object.__setattr__(self, "sub", SubDesignator(s.exponent, self.atom.prime, s.padic))
        elif self.primes is not None and s.prime == self.primes:
            object.__setattr__(self, "sub", SubDesignator(s.exponent, None, s.padic))

    def sort_key(self) -> tuple:
        return (4,) + self.atom.atom_key() + (self.sub.sort_key(), self.card.sort_key(), _seq_key(self.primes))


Family = Union[DiscreteSum, Product, LocalProduct]


def children(e: GroupExpr) -> tuple[GroupExpr, ...]:
    return e.parts if isinstance(e, Sum) else ()


def sequences(e: GroupExpr) -> list[PrimeSequence]:
    """Prime sequences used by ``e`` in canonical traversal order, deduplicated."""
    out: list[PrimeSequence] = []

    def visit(x: GroupExpr) -> None:
        if isinstance(x, Sum):
            for p in x.parts:
                visit(p)
        elif isinstance(x, (DiscreteSum, Product, LocalProduct)):
            if x.primes is not None and x.primes not in out:
                out.append(x.primes)
            if isinstance(x, LocalProduct) and isinstance(x.sub.prime, (ConstantPrime, DistinctPrimes)):
                if x.sub.prime not in out:
                    out.append(x.sub.prime)

    visit(e)
    return out
