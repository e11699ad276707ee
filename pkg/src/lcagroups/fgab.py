"""Exact arithmetic for finitely generated abelian groups.

A group ``Z^r (+) Z(d_1) (+) ... (+) Z(d_k)`` is presented on ``n = r + k``
integer coordinates; the last ``k`` coordinates carry the relations
``d_i * e_{r+i} = 0``.  A subgroup is stored as the row-style Hermite normal
form of its generators stacked on top of those relation rows, so equal
subgroups have identical bases and comparison is plain tuple equality.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from math import gcd, prod
from typing import Iterable, Iterator, Sequence

Matrix = list[list[int]]
Vector = tuple[int, ...]


class AmbientMismatch(ValueError):
    pass


def _copy(m: Sequence[Sequence[int]]) -> Matrix:
    return [list(map(int, row)) for row in m]


def _identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def _combine_rows(m: Matrix, i: int, k: int, a: int, b: int, c: int, d: int) -> None:
    """Replace rows (i, k) by (a*r_i + b*r_k, c*r_i + d*r_k)."""
    ri, rk = m[i], m[k]
    m[i] = [a * x + b * y for x, y in zip(ri, rk)]
    m[k] = [c * x + d * y for x, y in zip(ri, rk)]


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def hnf_with_transform(m: Sequence[Sequence[int]]) -> tuple[Matrix, Matrix]:
    """Return ``(H, U)`` with ``U`` unimodular and ``U @ m == H``.

    ``H`` keeps all rows (zero rows sit at the bottom); pivots are positive and
    entries above a pivot lie in ``[0, pivot)``.
    """
    h = _copy(m)
    rows = len(h)
    cols = len(h[0]) if rows else 0
    u = _identity(rows)
    r = 0
    for j in range(cols):
        if r == rows:
            break
        for i in range(r + 1, rows):
            if h[i][j] == 0:
                continue
            a, b = h[r][j], h[i][j]
            g, x, y = _xgcd(a, b)
            # [[x, y], [-b/g, a/g]] has determinant 1
            _combine_rows(h, r, i, x, y, -b // g, a // g)
            _combine_rows(u, r, i, x, y, -b // g, a // g)
        if h[r][j] == 0:
            continue
        if h[r][j] < 0:
            h[r] = [-x for x in h[r]]
            u[r] = [-x for x in u[r]]
        piv = h[r][j]
        for i in range(r):
            q = h[i][j] // piv
            if q:
                h[i] = [x - q * y for x, y in zip(h[i], h[r])]
                u[i] = [x - q * y for x, y in zip(u[i], u[r])]
        r += 1
    return h, u


def hnf(m: Sequence[Sequence[int]]) -> Matrix:
    """Row Hermite normal form with zero rows removed."""
    if not m:
        return []
    h, _ = hnf_with_transform(m)
    return [row for row in h if any(row)]


def _pivots(basis: Matrix) -> list[tuple[int, int]]:
    out = []
    for row in basis:
        j = next(k for k, x in enumerate(row) if x)
        out.append((j, row[j]))
    return out


def snf(m: Sequence[Sequence[int]]) -> tuple[Matrix, Matrix, Matrix]:
    """Smith normal form ``(D, L, R)`` with ``L @ m @ R == D``.

    ``D`` has the shape of ``m``, nonnegative diagonal entries and
    ``d_i | d_{i+1}``; ``L`` and ``R`` are unimodular.
    """
    d = _copy(m)
    rows = len(d)
    cols = len(d[0]) if rows else 0
    left = _identity(rows)
    right = _identity(cols)

    def swap_rows(i: int, k: int) -> None:
        d[i], d[k] = d[k], d[i]
        left[i], left[k] = left[k], left[i]

    def swap_cols(j: int, k: int) -> None:
        for row in d:
            row[j], row[k] = row[k], row[j]
        for row in right:
            row[j], row[k] = row[k], row[j]

    def add_row(src: int, dst: int, q: int) -> None:
        d[dst] = [x + q * y for x, y in zip(d[dst], d[src])]
        left[dst] = [x + q * y for x, y in zip(left[dst], left[src])]

    def add_col(src: int, dst: int, q: int) -> None:
        for row in d:
            row[dst] += q * row[src]
        for row in right:
            row[dst] += q * row[src]

    for t in range(min(rows, cols)):
        while True:
            nz = [(abs(d[i][j]), i, j) for i in range(t, rows) for j in range(t, cols) if d[i][j]]
            if not nz:
                break
            _, i, j = min(nz)
            swap_rows(t, i)
            swap_cols(t, j)
            piv = d[t][t]
            dirty = False
            for i in range(t + 1, rows):
                q = d[i][t] // piv
                if q:
                    add_row(t, i, -q)
                if d[i][t]:
                    dirty = True
            for j in range(t + 1, cols):
                q = d[t][j] // piv
                if q:
                    add_col(t, j, -q)
                if d[t][j]:
                    dirty = True
            if dirty:
                continue
            bad = next(
                (i for i in range(t + 1, rows) for j in range(t + 1, cols) if d[i][j] % piv),
                None,
            )
            if bad is None:
                break
            add_row(bad, t, 1)
        if d[t][t] < 0:
            d[t] = [-x for x in d[t]]
            left[t] = [-x for x in left[t]]
    return d, left, right


def invariant_factors(m: Sequence[Sequence[int]]) -> list[int]:
    """Nonzero diagonal of the Smith form of ``m``."""
    if not m:
        return []
    d, _, _ = snf(m)
    return [d[i][i] for i in range(min(len(d), len(d[0]))) if d[i][i]]


@dataclass(frozen=True)
class FgAbGroup:
    """``Z^rank (+) Z(d_1) (+) ... (+) Z(d_k)`` with ``d_i | d_{i+1}``."""

    rank: int
    torsion_orders: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "torsion_orders", tuple(int(d) for d in self.torsion_orders))
        if self.rank < 0:
            raise ValueError("rank must be nonnegative")
        for d in self.torsion_orders:
            if d < 2:
                raise ValueError(f"torsion order {d} < 2")
        for a, b in zip(self.torsion_orders, self.torsion_orders[1:]):
            if b % a:
                raise ValueError(f"torsion orders {self.torsion_orders} are not a divisor chain")

    @classmethod
    def from_cyclic_orders(cls, orders: Iterable[int], rank: int = 0) -> "FgAbGroup":
        """Normalise an arbitrary list of cyclic orders to invariant factors."""
        orders = [int(o) for o in orders if int(o) != 1]
        if any(o < 0 for o in orders):
            raise ValueError("cyclic orders must be positive (use rank for Z summands)")
        rank += sum(1 for o in orders if o == 0)
        finite = [o for o in orders if o]
        if not finite:
            return cls(rank)
        diag = [[o if i == j else 0 for j in range(len(finite))] for i, o in enumerate(finite)]
        return cls(rank, tuple(f for f in invariant_factors(diag) if f != 1))

    @property
    def ngens(self) -> int:
        return self.rank + len(self.torsion_orders)

    @property
    def is_finite(self) -> bool:
        return self.rank == 0

    @property
    def order(self) -> int | None:
        return prod(self.torsion_orders) if self.rank == 0 else None

    def relations(self) -> Matrix:
        n = self.ngens
        rows = []
        for i, d in enumerate(self.torsion_orders):
            row = [0] * n
            row[self.rank + i] = d
            rows.append(row)
        return rows

    def normalize(self, v: Sequence[int]) -> Vector:
        if len(v) != self.ngens:
            raise ValueError(f"element {tuple(v)} has wrong length for {self}")
        out = list(int(x) for x in v)
        for i, d in enumerate(self.torsion_orders):
            out[self.rank + i] %= d
        return tuple(out)

    def add(self, x: Sequence[int], y: Sequence[int]) -> Vector:
        return self.normalize([a + b for a, b in zip(x, y)])

    def scale(self, k: int, x: Sequence[int]) -> Vector:
        return self.normalize([k * a for a in x])

    def zero(self) -> Vector:
        return (0,) * self.ngens

    def elements(self) -> Iterator[Vector]:
        if self.rank:
            raise ValueError("cannot enumerate an infinite group")
        if not self.torsion_orders:
            yield ()
            return
        idx = [0] * len(self.torsion_orders)
        while True:
            yield tuple(idx)
            k = len(idx) - 1
            while k >= 0:
                idx[k] += 1
                if idx[k] < self.torsion_orders[k]:
                    break
                idx[k] = 0
                k -= 1
            if k < 0:
                return

    def element_order(self, x: Sequence[int]) -> int | None:
        x = self.normalize(x)
        if any(x[: self.rank]):
            return None
        o = 1
        for i, d in enumerate(self.torsion_orders):
            o = o * (d // gcd(d, x[self.rank + i])) // gcd(o, d // gcd(d, x[self.rank + i]))
        return o

    def trivial_basis(self) -> tuple[Vector, ...]:
        return tuple(tuple(r) for r in hnf(self.relations()))

    def whole(self) -> "Subgroup":
        return Subgroup.generated(self, _identity(self.ngens))

    def trivial(self) -> "Subgroup":
        return Subgroup.generated(self, [])

    def __str__(self) -> str:
        parts = ["Z"] * self.rank + [f"Z({d})" for d in self.torsion_orders]
        return " x ".join(parts) if parts else "0"

    def to_json(self) -> dict:
        return {"rank": self.rank, "torsion": list(self.torsion_orders)}


@dataclass(frozen=True)
class Subgroup:
    """A subgroup held as the HNF of generators plus ambient relations."""

    ambient: FgAbGroup
    basis: tuple[Vector, ...] = field(default=())

    @classmethod
    def generated(cls, ambient: FgAbGroup, gens: Iterable[Sequence[int]]) -> "Subgroup":
        rows = [list(map(int, g)) for g in gens]
        for g in rows:
            if len(g) != ambient.ngens:
                raise ValueError(f"generator {g} has wrong length for {ambient}")
        rows += ambient.relations()
        return cls(ambient, tuple(tuple(r) for r in hnf(rows)))

    def __contains__(self, g: Sequence[int]) -> bool:
        return member(g, self)

    def generators(self) -> list[Vector]:
        """Basis rows that are not already relations of the ambient."""
        rel = self.ambient.trivial_basis()
        return [row for row in self.basis if row not in rel]

    def index(self) -> int | None:
        """``[ambient : self]``, or None when infinite."""
        piv = _pivots(list(map(list, self.basis)))
        if len(piv) < self.ambient.ngens:
            return None
        # the basis contains the relation lattice, so this is [Z^n : L] = [G : H]
        return prod(d for _, d in piv)

    def order(self) -> int | None:
        if self.ambient.is_finite:
            return self.ambient.order // self.index()
        if any(any(r[: self.ambient.rank]) for r in self.basis):
            return None
        return sum(1 for _ in self.elements_in_torsion())

    def elements_in_torsion(self) -> Iterator[Vector]:
        tor = FgAbGroup(0, self.ambient.torsion_orders)
        for t in tor.elements():
            g = (0,) * self.ambient.rank + t
            if member(g, self):
                yield g

    def elements(self) -> Iterator[Vector]:
        for g in self.ambient.elements():
            if member(g, self):
                yield g

    def __le__(self, other: "Subgroup") -> bool:
        _check_same(self, other)
        return all(member(g, other) for g in self.basis)

    def __lt__(self, other: "Subgroup") -> bool:
        return self <= other and self != other

    def to_json(self) -> dict:
        return {"ambient": self.ambient.to_json(), "basis": [list(r) for r in self.basis]}


def _check_same(x: Subgroup, y: Subgroup) -> None:
    if x.ambient != y.ambient:
        raise AmbientMismatch(f"{x.ambient} vs {y.ambient}")


def member(g: Sequence[int], x: Subgroup) -> bool:
    """Triangular reduction of ``g`` against the HNF basis."""
    v = list(map(int, g))
    if len(v) != x.ambient.ngens:
        raise ValueError(f"element {tuple(g)} has wrong length for {x.ambient}")
    for row in x.basis:
        j = next(k for k, a in enumerate(row) if a)
        if v[j] % row[j]:
            return False
        q = v[j] // row[j]
        if q:
            v = [a - q * b for a, b in zip(v, row)]
    return not any(v)


def sub_sum(x: Subgroup, y: Subgroup) -> Subgroup:
    _check_same(x, y)
    return Subgroup.generated(x.ambient, list(x.basis) + list(y.basis))


def lattice_intersection(b1: Sequence[Sequence[int]], b2: Sequence[Sequence[int]], n: int) -> Matrix:
    """Basis of the intersection of two row lattices in ``Z^n``."""
    if not b1 or not b2:
        return []
    stacked = [list(r) + list(r) for r in b1] + [list(r) + [0] * n for r in b2]
    h = hnf(stacked)
    return hnf([row[n:] for row in h if not any(row[:n])])


def sub_meet(x: Subgroup, y: Subgroup) -> Subgroup:
    _check_same(x, y)
    rows = lattice_intersection(x.basis, y.basis, x.ambient.ngens)
    return Subgroup.generated(x.ambient, rows)


def solve(x: Subgroup | FgAbGroup, gens: Sequence[Sequence[int]], target: Sequence[int]) -> list[int] | None:
    """Integer coefficients ``c`` with ``sum c_i gens_i == target`` in the ambient.

    ``x`` may be the ambient group itself or any subgroup of it (only its
    ambient is used).  Returns None when ``target`` is not in the span.
    """
    amb = x if isinstance(x, FgAbGroup) else x.ambient
    n = amb.ngens
    rows = [list(map(int, g)) for g in gens] + amb.relations()
    if not rows:
        return [] if not any(target) else None
    h, u = hnf_with_transform(rows)
    v = list(map(int, target))
    z = [0] * len(rows)
    for i, row in enumerate(h):
        if not any(row):
            break
        j = next(k for k, a in enumerate(row) if a)
        if v[j] % row[j]:
            return None
        q = v[j] // row[j]
        z[i] = q
        if q:
            v = [a - q * b for a, b in zip(v, row)]
    if any(v):
        return None
    coeffs = [sum(z[i] * u[i][k] for i in range(len(rows))) for k in range(len(rows))]
    return coeffs[: len(gens)]


def kernel_basis(gens: Sequence[Sequence[int]], ambient: FgAbGroup) -> Matrix:
    """Basis of ``{c in Z^len(gens) : sum c_i gens_i == 0 in ambient}``."""
    m = len(gens)
    rows = [list(map(int, g)) for g in gens] + ambient.relations()
    if not rows:
        return []
    h, u = hnf_with_transform(rows)
    ker = [u[i][:m] for i, row in enumerate(h) if not any(row)]
    return hnf(ker) if ker else []


def socle(g: FgAbGroup, p: int) -> Subgroup:
    """Kernel of ``x -> p x``."""
    gens = []
    for i, d in enumerate(g.torsion_orders):
        row = [0] * g.ngens
        row[g.rank + i] = d // gcd(d, p)
        gens.append(row)
    return Subgroup.generated(g, gens)


def primary_component(g: FgAbGroup, p: int) -> Subgroup:
    """The p-torsion elements of ``g``."""
    gens = []
    for i, d in enumerate(g.torsion_orders):
        q = d
        while q % p == 0:
            q //= p
        row = [0] * g.ngens
        row[g.rank + i] = q
        gens.append(row)
    return Subgroup.generated(g, gens)


def _prime_divisors(n: int) -> list[int]:
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def scaled(x: Subgroup, k: int) -> Subgroup:
    return Subgroup.generated(x.ambient, [[k * a for a in row] for row in x.basis])


def frattini(g: FgAbGroup) -> Subgroup:
    """Sum over primes p of ``p * G_p`` (finite ``g``)."""
    if not g.is_finite:
        raise ValueError("frattini is defined here for finite groups only")
    out = g.trivial()
    for p in _prime_divisors(g.order):
        out = sub_sum(out, scaled(primary_component(g, p), p))
    return out


def elementary_rank(g: FgAbGroup, p: int) -> int:
    """``dim_{GF(p)} G/pG`` computed from the index of ``pG``."""
    idx = scaled(g.whole(), p).index()
    r = 0
    while idx > 1:
        idx //= p
        r += 1
    return r


def gcd_all(xs: Iterable[int]) -> int:
    return reduce(gcd, xs, 0)
