"""Subgroup lattices of finite abelian groups, the modular law and E5 search.

Subgroups are enumerated as element bitmasks (cyclic subgroups closed under
sums).  Meets are bitwise ANDs.  Joins come from duality: for a finite abelian
group the annihilator map is an order-reversing bijection of the subgroup
lattice, so ``A v B = ann(ann(A) ^ ann(B))``.  The HNF-based ``sub_sum`` in
:mod:`lcagroups.fgab` serves as the independent check of that shortcut in the
test-suite.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from math import lcm
from typing import Any, Sequence

import numpy as np

from .fgab import FgAbGroup, Subgroup

DEFAULT_BOUND = 10_000


class TooLarge(ValueError):
    def __init__(self, order: int, bound: int):
        super().__init__(f"size {order} exceeds bound {bound}")
        self.order = order
        self.bound = bound


def default_bound() -> int:
    raw = os.environ.get("LCA_LATTICE_BOUND")
    return int(raw) if raw else DEFAULT_BOUND


@dataclass(frozen=True, eq=False)
class Lattice:
    """A finite lattice given by complete tables over node ids ``0..n-1``."""

    labels: tuple[Any, ...]
    leq: np.ndarray
    join: np.ndarray
    meet: np.ndarray
    sizes: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def bottom(self) -> int:
        return int(np.flatnonzero(self.leq.all(axis=1))[0])

    @property
    def top(self) -> int:
        return int(np.flatnonzero(self.leq.all(axis=0))[0])

    @classmethod
    def from_order(cls, labels: Sequence[Any], leq: Sequence[Sequence[bool]]) -> "Lattice":
        """Build join/meet tables from a partial order that is a lattice."""
        le = np.asarray(leq, dtype=bool)
        n = len(labels)
        down = le.sum(axis=0)  # number of elements below each node
        up = le.sum(axis=1)
        join = np.empty((n, n), dtype=np.int32)
        meet = np.empty((n, n), dtype=np.int32)
        for i in range(n):
            ub = le[i][None, :] & le  # ub[j, k]: i <= k and j <= k
            lb = le[:, i][None, :] & le.T  # lb[j, k]: k <= i and k <= j
            join[i] = np.where(ub, down[None, :], n + 1).argmin(axis=1)
            meet[i] = np.where(lb, up[None, :], n + 1).argmin(axis=1)
        lat = cls(tuple(labels), le, join, meet)
        if not lat.is_lattice():
            raise ValueError("partial order is not a lattice")
        return lat

    def is_lattice(self) -> bool:
        le, j, m = self.leq, self.join, self.meet
        n = len(self)
        idx = np.arange(n)
        if not le[idx, idx].all() or (le & le.T & ~np.eye(n, dtype=bool)).any():
            return False
        # join is an upper bound below every other upper bound; dually for meet
        for i in range(n):
            if not (le[i, j[i]].all() and le[idx, j[i]].all()):
                return False
            ub = le[i][None, :] & le
            if not (~ub | le[j[i]]).all():
                return False
            if not (le[m[i], i].all() and le[m[i], idx].all()):
                return False
            lb = le[:, i][None, :] & le.T
            if not (~lb | le.T[m[i]]).all():
                return False
        return True

    def summary(self) -> dict:
        return {"size": len(self), "bottom": self.bottom, "top": self.top}


@dataclass(frozen=True)
class PentagonWitness:
    """Node ids of an E5 sublattice: bottom < a < c < top and b beside them."""

    top: int
    c: int
    a: int
    b: int
    bottom: int

    def nodes(self) -> tuple[int, int, int, int, int]:
        return (self.top, self.c, self.a, self.b, self.bottom)

    def holds_in(self, lat: Lattice) -> bool:
        t, c, a, b, z = self.nodes()
        le, j, m = lat.leq, lat.join, lat.meet
        return (
            len(set(self.nodes())) == 5
            and le[a, c]
            and not le[b, a] and not le[a, b]
            and not le[b, c] and not le[c, b]
            and j[a, b] == t and j[c, b] == t
            and m[a, b] == z and m[c, b] == z
        )

    def to_json(self) -> dict:
        return {"top": self.top, "c": self.c, "a": self.a, "b": self.b, "bottom": self.bottom}


def pentagon_lattice() -> Lattice:
    """The abstract N5: 0 < a < c < 1 and 0 < b < 1."""
    labels = ("0", "a", "c", "b", "1")
    below = {"0": "0", "a": "0a", "c": "0ac", "b": "0b", "1": "0acb1"}
    leq = [[x in below[y] for y in labels] for x in labels]
    return Lattice.from_order(labels, leq)


def diamond_lattice() -> Lattice:
    """The abstract M3 (modular, not distributive)."""
    labels = ("0", "x", "y", "z", "1")
    below = {"0": "0", "x": "0x", "y": "0y", "z": "0z", "1": "0xyz1"}
    leq = [[x in below[y] for y in labels] for x in labels]
    return Lattice.from_order(labels, leq)


def chain_lattice(n: int) -> Lattice:
    labels = tuple(range(n))
    return Lattice.from_order(labels, [[i <= j for j in labels] for i in labels])


class _ElementIndex:
    """Mixed-radix numbering of the elements of a finite abelian group."""

    def __init__(self, g: FgAbGroup):
        self.group = g
        self.orders = np.array(g.torsion_orders, dtype=np.int64)
        self.size = int(np.prod(self.orders)) if len(self.orders) else 1
        k = len(self.orders)
        self.radix = np.ones(k, dtype=np.int64)
        for i in range(k - 2, -1, -1):
            self.radix[i] = self.radix[i + 1] * self.orders[i + 1]
        ids = np.arange(self.size, dtype=np.int64)
        self.coords = (ids[:, None] // self.radix[None, :]) % self.orders[None, :] if k else np.zeros((1, 0), np.int64)

    def index(self, coords: np.ndarray) -> np.ndarray:
        return (np.mod(coords, self.orders) * self.radix).sum(axis=-1)

    def cyclic(self, x: int) -> np.ndarray:
        c = self.coords[x]
        o = self.group.element_order(tuple(int(v) for v in c)) or 1
        return self.index(np.arange(o)[:, None] * c[None, :])


class _MaskTable:
    """Deduplicating store of subgroup bitmasks with vectorised lookup."""

    def __init__(self, size: int):
        self.size = size
        self.words = (size + 63) // 64
        rng = np.random.default_rng(0x5EED)
        self.mix = rng.integers(1, 2**63, size=self.words, dtype=np.uint64) | np.uint64(1)
        self.masks: list[np.ndarray] = []
        self.keys: dict[bytes, int] = {}

    def pack(self, members: np.ndarray) -> np.ndarray:
        bits = np.zeros(self.words * 64, dtype=bool)
        bits[members] = True
        return np.packbits(bits, bitorder="little").view(np.uint64)

    def add(self, mask: np.ndarray) -> tuple[int, bool]:
        key = mask.tobytes()
        if key in self.keys:
            return self.keys[key], False
        self.keys[key] = len(self.masks)
        self.masks.append(mask)
        return len(self.masks) - 1, True

    def finalize(self) -> None:
        self.array = np.stack(self.masks)
        self.hashes = self._hash(self.array)
        self.order = np.argsort(self.hashes, kind="stable")
        self.sorted_hashes = self.hashes[self.order]

    def _hash(self, arr: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore"):
            return (arr * self.mix).sum(axis=-1, dtype=np.uint64)

    def lookup(self, arr: np.ndarray) -> np.ndarray:
        h = self._hash(arr)
        pos = np.searchsorted(self.sorted_hashes, h)
        pos = np.minimum(pos, len(self.order) - 1)
        ids = self.order[pos]
        if not (self.array[ids] == arr).all():
            # hash collision: fall back to exact keys
            ids = np.array([self.keys[row.tobytes()] for row in arr])
        return ids


def _members(mask: np.ndarray, size: int) -> np.ndarray:
    bits = np.unpackbits(mask.view(np.uint8), bitorder="little")[:size]
    return np.flatnonzero(bits)


def subgroup_lattice(g: FgAbGroup, bound: int | None = None, with_subgroups: bool = True) -> Lattice:
    """All subgroups of the finite group ``g`` with complete tables."""
    if not g.is_finite:
        raise ValueError("subgroup_lattice needs a finite group (rank 0)")
    bound = default_bound() if bound is None else bound
    if g.order > bound:
        raise TooLarge(g.order, bound)
    ex = _ElementIndex(g)
    table = _MaskTable(ex.size)
    gens: list[list[int]] = []

    cyclic_ids: list[int] = []
    cyclic_members: list[np.ndarray] = []
    cyclic_gen: list[int] = []
    table.add(table.pack(np.array([0])))
    gens.append([])
    for x in range(1, ex.size):
        mem = ex.cyclic(x)
        i, new = table.add(table.pack(mem))
        if new:
            gens.append([x])
            cyclic_ids.append(i)
            cyclic_members.append(mem)
            cyclic_gen.append(x)
    frontier = list(range(len(table.masks)))
    while frontier:
        nxt = []
        for s in frontier:
            s_mask = table.masks[s]
            s_members = _members(s_mask, ex.size)
            for cid, cmem, x in zip(cyclic_ids, cyclic_members, cyclic_gen):
                cmask = table.masks[cid]
                if ((cmask & s_mask) == cmask).all():
                    continue
                total = ex.index(ex.coords[s_members][:, None, :] + ex.coords[cmem][None, :, :])
                i, new = table.add(table.pack(np.unique(total)))
                if new:
                    if len(table.masks) > bound:
                        raise TooLarge(len(table.masks), bound)
                    gens.append(gens[s] + [x])
                    nxt.append(i)
        frontier = nxt
    table.finalize()
    n = len(table.masks)
    arr = table.array

    sizes = np.array([len(_members(m, ex.size)) for m in arr])
    meet = np.empty((n, n), dtype=np.int32)
    for i in range(n):
        meet[i] = table.lookup(arr[i][None, :] & arr)
    leq = meet == np.arange(n)[:, None]

    # annihilators via the pairing <x, y> = sum x_i y_i / d_i  (mod 1)
    big = lcm(*g.torsion_orders) if g.torsion_orders else 1
    weights = np.array([big // d for d in g.torsion_orders], dtype=np.int64)
    ann = np.empty(n, dtype=np.int64)
    for i in range(n):
        ok = np.ones(ex.size, dtype=bool)
        for x in gens[i]:
            ok &= (ex.coords @ (ex.coords[x] * weights)) % big == 0
        ann[i] = table.lookup(table.pack(np.flatnonzero(ok))[None, :])[0]
    join = ann[meet[ann][:, ann]].astype(np.int32)

    if with_subgroups:
        labels = tuple(
            Subgroup.generated(g, [[int(v) for v in ex.coords[x]] for x in gens[i]]) for i in range(n)
        )
    else:
        labels = tuple(range(n))
    return Lattice(labels, leq, join, meet, sizes)


def check_modular_law(lat: Lattice) -> tuple[int, int, int] | None:
    """First ``(A, B, C)`` with ``A <= C`` and ``A v (B ^ C) != (A v B) ^ C``."""
    j, m, le = lat.join, lat.meet, lat.leq
    for c in range(len(lat)):
        below = np.flatnonzero(le[:, c])
        bc = m[:, c]
        lhs = j[below][:, bc]
        rhs = m[j[below], c]
        bad = np.argwhere(lhs != rhs)
        if len(bad):
            a_pos, b = bad[0]
            return int(below[a_pos]), int(b), c
    return None


def find_pentagon(lat: Lattice) -> PentagonWitness | None:
    """E5 sublattice built from a modular-law violation, or None."""
    bad = check_modular_law(lat)
    if bad is None:
        return None
    x, y, z = bad
    j, m = lat.join, lat.meet
    a = int(j[x, m[y, z]])
    c = int(m[j[x, y], z])
    w = PentagonWitness(top=int(j[x, y]), c=c, a=a, b=y, bottom=int(m[y, z]))
    if not w.holds_in(lat):
        raise AssertionError(f"derived pentagon {w} fails its relations")
    return w
