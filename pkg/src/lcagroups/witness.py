"""Finite truncations of the standard non-modular configurations.

Three level-indexed families are modelled:

* ``graph-monothetic``: Z + Z_q truncated to Z + Z(q^n), with A = pZ,
  B the graph of 1 -> 1 and C = Z.  Sums are computed level by level, the meet
  B ^ C is computed exactly in the limit.
* ``socle-sum``: Z(p)^(N) + Z(p)^N truncated to Z(p)^n + Z(p)^n, with the
  graph B of the dense embedding and C = A + K for the constant line K.
* ``local-square``: the local product of (Z(p^2), pZ(p^2)) truncated to
  Z(p^2)^n.  Odd coordinates (I) and even coordinates (J) are paired and the
  subquotient L_I/S_I + S_J maps onto the socle-sum family.

The real line is covered by :func:`sqrt2_density_witness`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .fgab import FgAbGroup, Subgroup, sub_meet, sub_sum
from .lattice import PentagonWitness
from .model import is_prime

FAMILIES = ("graph-monothetic", "socle-sum", "local-square")
ALIASES = {
    "GraphOverMonothetic": "graph-monothetic",
    "DiscreteTimesCompactSocle": "socle-sum",
    "LocalProductPSquared": "local-square",
}


class BadParams(ValueError):
    pass


class UnknownLabel(KeyError):
    pass


class NotApplicable(ValueError):
    pass


# ----------------------------------------------------------------------------
# exact linear algebra over GF(p)


def gfp_rref(m: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over GF(p) and the pivot columns."""
    a = np.array(m, dtype=np.int64) % p
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if not len(nz):
            continue
        k = r + nz[0]
        a[[r, k]] = a[[k, r]]
        a[r] = a[r] * pow(int(a[r, c]), -1, p) % p
        col = a[:, c].copy()
        col[r] = 0
        a = (a - np.outer(col, a[r])) % p
        pivots.append(c)
        r += 1
    return a[:r], pivots


def gfp_solve(gens: np.ndarray, target: np.ndarray, p: int) -> tuple[np.ndarray | None, np.ndarray]:
    """Coefficients ``x`` with ``x @ gens == target`` mod p, and a nullspace basis."""
    g = np.array(gens, dtype=np.int64) % p
    k, n = g.shape
    aug = np.concatenate([g.T, (np.array(target, dtype=np.int64) % p)[:, None]], axis=1)
    red, piv = gfp_rref(aug, p)
    if k in piv:
        return None, np.zeros((0, k), dtype=np.int64)
    x = np.zeros(k, dtype=np.int64)
    for row, c in zip(red, piv):
        x[c] = row[k]
    free = [c for c in range(k) if c not in piv]
    null = np.zeros((len(free), k), dtype=np.int64)
    for i, f in enumerate(free):
        null[i, f] = 1
        for row, c in zip(red, piv):
            null[i, c] = (-row[f]) % p
    return x, null


def gfp_same_span(a: np.ndarray, b: np.ndarray, p: int) -> bool:
    ra, _ = gfp_rref(a, p) if len(a) else (np.zeros((0, 0)), [])
    rb, _ = gfp_rref(b, p) if len(b) else (np.zeros((0, 0)), [])
    if len(ra) != len(rb):
        return False
    return len(ra) == 0 or bool((ra == rb).all())


# ----------------------------------------------------------------------------
# families


@dataclass(frozen=True)
class Level:
    n: int
    group: FgAbGroup
    gens: dict[str, tuple[tuple[int, ...], ...]]

    def subgroup(self, label: str) -> Subgroup:
        if label not in self.gens:
            raise UnknownLabel(label)
        return Subgroup.generated(self.group, self.gens[label])


@dataclass(frozen=True)
class TruncationFamily:
    id: str
    params: tuple[tuple[str, int], ...]

    @property
    def p(self) -> int:
        return dict(self.params)["p"]

    @property
    def q(self) -> int:
        return dict(self.params)["q"]

    def labels(self) -> tuple[str, ...]:
        return tuple(self.level(1).gens)

    def level(self, n: int) -> Level:
        if n < 1:
            raise BadParams("levels start at 1")
        return _level(self, n)

    def project(self, n: int, x: Sequence[int]) -> tuple[int, ...]:
        """The connecting epimorphism from level n to level n - 1."""
        if self.id == "graph-monothetic":
            return (x[0], x[1] % self.q ** (n - 1))
        if self.id == "socle-sum":
            return tuple(x[: n - 1]) + tuple(x[n: 2 * n - 1])
        return tuple(x[: n - 1])

    def compatible(self, n: int, label: str) -> bool:
        """The level-n subgroup maps onto the level-(n-1) subgroup."""
        hi, lo = self.level(n), self.level(n - 1)
        if label not in hi.gens:
            raise UnknownLabel(label)
        image = [self.project(n, g) for g in hi.gens[label]]
        if self.id == "socle-sum":
            return gfp_same_span(np.array(image).reshape(len(image), -1), np.array(lo.gens[label]).reshape(len(lo.gens[label]), -1), self.p)
        return Subgroup.generated(lo.group, image) == lo.subgroup(label)

    def to_json(self) -> dict:
        return {"family": self.id, "params": dict(self.params)}


def make_family(family_id: str, p: int = 2, q: int | None = None) -> TruncationFamily:
    family_id = ALIASES.get(family_id, family_id)
    if family_id not in FAMILIES:
        raise BadParams(f"unknown family {family_id!r}; expected one of {', '.join(FAMILIES)}")
    if not is_prime(p):
        raise BadParams(f"p = {p} is not prime")
    if family_id == "graph-monothetic":
        if q is None or not is_prime(q) or q == p:
            raise BadParams("graph-monothetic needs a prime q different from p")
        return TruncationFamily(family_id, (("p", p), ("q", q)))
    return TruncationFamily(family_id, (("p", p),))


def _unit(size: int, i: int, v: int = 1) -> tuple[int, ...]:
    out = [0] * size
    out[i] = v
    return tuple(out)


@lru_cache(maxsize=512)
def _level(f: TruncationFamily, n: int) -> Level:
    if f.id == "graph-monothetic":
        p, q = f.p, f.q
        g = FgAbGroup(1, (q ** n,))
        gens = {"A": ((p, 0),), "B": ((1, 1),), "C": ((1, 0),), "G": ((1, 0), (0, 1))}
        return Level(n, g, gens)
    if f.id == "socle-sum":
        p = f.p
        g = FgAbGroup(0, (p,) * (2 * n))
        size = 2 * n
        s = tuple(_unit(size, i) for i in range(n))
        pp = tuple(_unit(size, n + i) for i in range(n))
        b = tuple(tuple(x + y for x, y in zip(s[i], pp[i])) for i in range(n))
        k = (tuple([0] * n + [1] * n),)
        return Level(n, g, {"A": s, "S": s, "P": pp, "B": b, "K": k, "C": s + k, "G": s + pp})
    # local-square: coordinates 0, 2, 4, ... form I and 1, 3, 5, ... form J
    p = f.p
    g = FgAbGroup(0, (p * p,) * n)
    I = list(range(0, n, 2))
    J = list(range(1, n, 2))
    m = len(J)
    socle_I = tuple(_unit(n, i, p) for i in I)
    socle_J = tuple(_unit(n, j, p) for j in J)
    L_I = tuple(_unit(n, i) for i in I)
    pairs = tuple(tuple(a + b for a, b in zip(_unit(n, I[k]), _unit(n, J[k], p))) for k in range(m))
    trailing = tuple(_unit(n, i) for i in I[m:])  # an I-coordinate whose partner was truncated
    k_line = (tuple(p if i in J else 0 for i in range(n)),)
    gens = {
        "socle": socle_I + socle_J,
        "L_I": L_I,
        "S_I": socle_I,
        "S_J": socle_J,
        "H": L_I + socle_J,
        "A'": L_I,
        "B'": socle_I + pairs + trailing,
        "K'": socle_I + k_line,
        "C'": L_I + k_line,
        "G": tuple(_unit(n, i) for i in range(n)),
    }
    return Level(n, g, gens)


def closure_level(f: TruncationFamily, x_label: str, y_label: str, n: int) -> Subgroup:
    """``X_n + Y_n``; the family of these represents the closure of X + Y."""
    lv = f.level(n)
    return sub_sum(lv.subgroup(x_label), lv.subgroup(y_label))


# ----------------------------------------------------------------------------
# exact meets in the graph family


@dataclass(frozen=True)
class ExactMeetResult:
    b_label: str
    c_label: str
    meet_at_infinity: tuple[tuple[int, int], ...]  # generators in Z + Z_q, () for 0
    finite_level_meets: dict[int, Subgroup]
    multipliers: dict[int, int]  # level n meet = d_n * (generator of B)
    growth: str

    def index_in(self, f: TruncationFamily, label: str, n: int) -> int:
        """Index of the level-n meet inside the level-n subgroup ``label``."""
        m = self.finite_level_meets[n]
        x = f.level(n).subgroup(label)
        # both are infinite cyclic or contain Z-directions; compare pivots
        return _relative_index(m, x)

    def to_json(self) -> dict:
        return {
            "b": self.b_label,
            "c": self.c_label,
            "meetAtInfinity": [list(g) for g in self.meet_at_infinity],
            "finiteLevelMeets": {str(n): [list(r) for r in s.generators()] for n, s in self.finite_level_meets.items()},
            "multipliers": {str(n): d for n, d in self.multipliers.items()},
            "growth": self.growth,
        }


def _relative_index(small: Subgroup, big: Subgroup) -> int:
    """[big : small] for subgroups of Z + Z(m) whose free parts have equal rank."""
    def covolume(s: Subgroup) -> int:
        v = 1
        for row in s.basis:
            v *= next(a for a in row if a)
        return v

    return covolume(small) // covolume(big)


def exact_meet(f: TruncationFamily, b_label: str = "B", c_label: str = "C", levels: int = 20) -> ExactMeetResult:
    if f.id != "graph-monothetic":
        raise NotApplicable("exact meets are modelled for the graph-monothetic family only")
    gen = f.level(1).gens.get(b_label)
    if gen is None:
        raise UnknownLabel(b_label)
    if len(gen) != 1:
        raise NotApplicable("the b-label must name an infinite cyclic subgroup")
    (b,) = gen
    meets: dict[int, Subgroup] = {}
    mult: dict[int, int] = {}
    for n in range(1, levels + 1):
        lv = f.level(n)
        m = sub_meet(lv.subgroup(b_label), lv.subgroup(c_label))
        meets[n] = m
        # m is cyclic inside <b>; its generator is d_n * b with the first
        # coordinate carrying d_n * b[0]
        first = [row[0] for row in m.basis if row[0]]
        mult[n] = abs(first[0]) // abs(b[0]) if first else 0
    ds = [mult[n] for n in sorted(mult)]
    if all(x < y for x, y in zip(ds, ds[1:])) and len(ds) > 1:
        growth = "d_n strictly increasing, so only 0 lies in every level"
        at_inf: tuple = ()
    else:
        d = ds[-1]
        growth = f"d_n stable at {d}"
        at_inf = ((d * b[0], d * b[1]),)
    return ExactMeetResult(b_label, c_label, at_inf, meets, mult, growth)


# ----------------------------------------------------------------------------
# the pentagon of the graph family


@dataclass(frozen=True)
class Separation:
    """``element`` lies in ``inside`` (a generator of it) but not in ``outside``."""

    inside: str
    outside: str
    element: tuple[int, ...]
    level: int

    def to_json(self) -> dict:
        return {"in": self.inside, "notIn": self.outside, "element": list(self.element), "level": self.level}


@dataclass(frozen=True)
class PentagonInstance:
    family: TruncationFamily
    nodes: dict[str, str]  # role -> description
    relations: dict[str, bool]
    certificates: tuple[Separation, ...]

    @property
    def ok(self) -> bool:
        return all(self.relations.values()) and len(self.certificates) == 10

    def as_witness(self) -> PentagonWitness:
        return PentagonWitness(top=0, c=1, a=2, b=3, bottom=4)

    def to_json(self) -> dict:
        return {
            **self.family.to_json(),
            "nodes": self.nodes,
            "relations": self.relations,
            "certificates": [c.to_json() for c in self.certificates],
            "ok": self.ok,
        }


def pentagon_instance(f: TruncationFamily, c_label: str = "C", levels: int = 20) -> PentagonInstance:
    """A v B, C, A, B, B ^ C with separating elements for all ten pairs."""
    if f.id != "graph-monothetic":
        raise NotApplicable("pentagon instances are built for the graph-monothetic family")
    meet_bc = exact_meet(f, "B", c_label, levels)
    meet_ab = exact_meet(f, "B", "A", levels)
    join_ab = all(closure_level(f, "A", "B", n) == f.level(n).subgroup("G") for n in range(1, levels + 1))
    join_cb = all(closure_level(f, c_label, "B", n) == f.level(n).subgroup("G") for n in range(1, levels + 1))
    c_proper = any(f.level(n).subgroup(c_label) != f.level(n).subgroup("G") for n in range(1, levels + 1))
    if not c_proper or meet_bc.meet_at_infinity:
        raise NotApplicable(f"{c_label} gives a modular configuration: no pentagon")
    gens = {role: f.level(1).gens[lab] for role, lab in (("top", "G"), ("c", c_label), ("a", "A"), ("b", "B"))}
    # bottom = B ^ C is 0 in the limit; at level n it is contained in the finite meet
    roles = ("top", "c", "a", "b", "bottom")
    certs: list[Separation] = []
    for i, x in enumerate(roles):
        for y in roles[i + 1:]:
            cert = _separate(f, x, y, gens, meet_bc, c_label, levels)
            if cert is not None:
                certs.append(cert)
    a_in_c = all(
        all(g in f.level(n).subgroup(c_label) for g in f.level(n).gens["A"]) for n in range(1, levels + 1)
    )
    relations = {
        "a<c": a_in_c,
        "join(a,b)=top": join_ab,
        "join(c,b)=top": join_cb,
        "meet(a,b)=bottom": not meet_ab.meet_at_infinity,
        "meet(c,b)=bottom": not meet_bc.meet_at_infinity,
    }
    nodes = {
        "top": "A v B = G = Z + Z_q",
        "c": "C = Z + 0" if c_label == "C" else f"C = {c_label}",
        "a": f"A = {f.p}Z + 0",
        "b": "B = graph of 1 -> 1",
        "bottom": "B ^ C = 0",
    }
    return PentagonInstance(f, nodes, relations, tuple(certs))


def _separate(f, x: str, y: str, gens, meet_bc: ExactMeetResult, c_label: str, levels: int) -> Separation | None:
    """Find a generator of one side outside the other at some level."""
    label = {"top": "G", "c": c_label, "a": "A", "b": "B"}

    def level_group(role: str, n: int) -> Subgroup:
        if role == "bottom":
            return meet_bc.finite_level_meets[n]
        return f.level(n).subgroup(label[role])

    for inside, outside in ((x, y), (y, x)):
        if inside == "bottom":
            continue  # the bottom is 0 and contains nothing to separate with
        for g in gens[inside]:
            for n in range(1, levels + 1):
                if g not in level_group(outside, n):
                    return Separation(inside, outside, tuple(g), n)
    return None


# ----------------------------------------------------------------------------
# escape certificates


@dataclass(frozen=True)
class EscapeCertificate:
    family: TruncationFamily
    target: str
    lower_bound: tuple[int, ...]  # entry n-1 is the bound at level n
    monotone: bool
    unbounded_rule: str
    reduced_from: dict | None = None

    @property
    def confirms_non_closed(self) -> bool:
        r = self.reduced_from
        if r is not None:
            return bool(r["mapsAgree"] and r["socleConfirms"])
        n = len(self.lower_bound)
        return self.monotone and self.lower_bound == tuple(range(1, n + 1))

    def to_json(self) -> dict:
        return {
            **self.family.to_json(),
            "levels": len(self.lower_bound),
            "target": self.target,
            "lowerBound": list(self.lower_bound),
            "monotone": self.monotone,
            "rule": self.unbounded_rule,
            "reduction": self.reduced_from,
            "verdict": "not closed" if self.confirms_non_closed else "no escape detected",
        }


def _socle_lower_bound(p: int, n: int, target_p: np.ndarray) -> int:
    """Minimal support of ``s`` over all ways to write (0, t) as a + (s, s)."""
    size = 2 * n
    gens = np.zeros((2 * n, size), dtype=np.int64)
    for i in range(n):
        gens[i, i] = 1  # A
        gens[n + i, i] = 1  # B: e_i + f_i
        gens[n + i, n + i] = 1
    target = np.concatenate([np.zeros(n, dtype=np.int64), target_p[:n]])
    x, null = gfp_solve(gens, target, p)
    if x is None:
        raise AssertionError("target must lie in A + B at every level")
    best = int(np.count_nonzero(x[n:] % p))
    if len(null):
        if len(null) > 12:
            raise NotApplicable("solution space too large to enumerate")
        for coeffs in np.ndindex(*(p,) * len(null)):
            y = (x + np.array(coeffs) @ null) % p
            best = min(best, int(np.count_nonzero(y[n:])))
    return best


def escape_certificate(f: TruncationFamily, n_max: int = 16, target: Sequence[int] | None = None) -> EscapeCertificate:
    """Lower bounds on the support of any preimage of ``(0, target)`` in A + B.

    The default target is the constant vector (the generator of K); its bound
    grows like n, so it lies in the closure of A + B but not in A + B.
    """
    if f.id == "graph-monothetic":
        raise NotApplicable("the graph family fails through a meet, not through a non-closed sum")
    if f.id == "local-square":
        return _local_square_certificate(f, n_max)
    p = f.p
    t = np.ones(n_max, dtype=np.int64) if target is None else np.zeros(n_max, dtype=np.int64)
    if target is not None:
        t[: min(len(target), n_max)] = np.array(target[:n_max], dtype=np.int64) % p
    bounds = tuple(_socle_lower_bound(p, n, t) for n in range(1, n_max + 1))
    mono = all(a <= b for a, b in zip(bounds, bounds[1:]))
    desc = "(0, (1, 1, 1, ...))" if target is None else "(0, (" + ", ".join(map(str, t.tolist())) + "))"
    rule = "lower_bound(n) = n" if bounds == tuple(range(1, n_max + 1)) else f"lower_bound stabilizes at {bounds[-1]}"
    return EscapeCertificate(f, desc, bounds, mono, rule)


def _local_square_map(f: TruncationFamily, n: int, x: Sequence[int]) -> np.ndarray:
    """H -> Z(p)^m + Z(p)^m, x -> (x_I mod p, x_J / p) on the paired coordinates."""
    p = f.p
    m = n // 2
    out = np.zeros(2 * m, dtype=np.int64)
    for k in range(m):
        i, j = 2 * k, 2 * k + 1
        out[k] = x[i] % p
        if x[j] % p:
            raise ValueError("element outside H")
        out[m + k] = (x[j] // p) % p
    return out


def _local_square_certificate(f: TruncationFamily, n_max: int) -> EscapeCertificate:
    p = f.p
    socle_family = make_family("socle-sum", p)
    checks = {}
    for n in range(2, n_max + 1):
        lv = f.level(n)
        m = n // 2
        target = socle_family.level(m)
        ok = True
        for mine, theirs in (("A'", "A"), ("B'", "B"), ("K'", "K"), ("C'", "C")):
            img = np.array([_local_square_map(f, n, g) for g in lv.gens[mine]])
            img = img[np.any(img % p, axis=1)] if len(img) else img
            ok &= gfp_same_span(img.reshape(len(img), 2 * m), np.array(target.gens[theirs]), p)
        kernel = lv.gens["S_I"] + tuple(g for g in lv.gens["B'"] if not _local_square_map(f, n, g).any())
        ok &= all(not _local_square_map(f, n, g).any() for g in kernel)
        checks[n] = bool(ok)
    inner = escape_certificate(socle_family, max(1, n_max // 2))
    bounds = tuple(inner.lower_bound[n // 2 - 1] if n >= 2 else 0 for n in range(1, n_max + 1))
    return EscapeCertificate(
        f,
        "pullback of (0, (1, 1, 1, ...)) under L_I/S_I + S_J",
        bounds,
        all(a <= b for a, b in zip(bounds, bounds[1:])),
        "lower_bound(n) = floor(n/2)",
        {"to": socle_family.to_json(), "levelMap": "n -> floor(n/2)", "mapsAgree": all(checks.values()),
         "socleBound": list(inner.lower_bound), "socleConfirms": inner.confirms_non_closed},
    )


def local_square_confirms(cert: EscapeCertificate) -> bool:
    return cert.reduced_from is not None and cert.confirms_non_closed


# ----------------------------------------------------------------------------
# the real line


@dataclass(frozen=True)
class DensityWitness:
    a: int
    b: int
    epsilon: Fraction
    norm: int  # (2a)^2 - 2 b^2

    def bound_holds(self) -> bool:
        """|2a + b sqrt 2| < epsilon, decided in exact arithmetic."""
        return _abs_less(self.a, self.b, self.epsilon)

    def approx(self) -> float:
        # through the norm form: the direct difference cancels catastrophically
        return abs(self.norm) / (abs(2 * self.a) + abs(self.b) * 2 ** 0.5)

    def to_json(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "epsilon": str(self.epsilon),
            "norm": self.norm,
            "certified": self.bound_holds(),
            "approx": self.approx(),
        }


def _abs_less(a: int, b: int, eps: Fraction) -> bool:
    """|2a + b sqrt 2| < eps without floating point.

    With x = 2a and y = b the quantity is |x + y sqrt 2|.  For x and y of
    opposite signs |x + y sqrt 2| = |x^2 - 2y^2| / (|x| + |y| sqrt 2), and the
    inequality rearranges to |y| sqrt 2 > |x^2 - 2y^2| / eps - |x|.
    """
    x, y = 2 * a, b
    n = abs(x * x - 2 * y * y)
    if n == 0:
        return False
    if x * y > 0 or x == 0 or y == 0:
        # no cancellation: |x + y sqrt 2| >= 1 > eps
        return False
    rhs = Fraction(n) / eps - abs(x)
    return rhs < 0 or 2 * y * y > rhs * rhs


def sqrt2_convergents():
    """Convergents h/k of sqrt 2: 1/1, 3/2, 7/5, 17/12, ..."""
    h, k = 1, 1
    while True:
        yield h, k
        h, k = h + 2 * k, h + k


def sqrt2_density_witness(epsilon: Fraction | float | str) -> DensityWitness:
    """Integers a, b with 0 < |2a + b sqrt 2| < epsilon, from the convergents."""
    eps = Fraction(epsilon)
    if not 0 < eps < 1:
        raise BadParams("epsilon must lie strictly between 0 and 1")
    for h, k in sqrt2_convergents():
        a, b = -k, h
        if _abs_less(a, b, eps):
            return DensityWitness(a, b, eps, (2 * a) ** 2 - 2 * b * b)
    raise AssertionError("unreachable")
