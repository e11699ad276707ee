"""Decide topological modularity (tM) and strong topological quasihamiltonicity
(stqh) for valid expressions.

Each route evaluates a list of clauses; a verdict is the conjunction of its
clauses.  The tM and stqh sides are computed by separate clause sets so that
their agreement on p-groups is a genuine check rather than a tautology.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .dsl import render
from .invariants import (
    PRIMARY_KINDS,
    Expansion,
    InvariantRecord,
    NotDualizable,
    Piece,
    PrimaryDecomposition,
    PrimaryDescriptor,
    _global,
    chosen_U,
    dual,
    expand,
    invariants,
    primary_decompose,
)
from .model import INF, ONE, ZERO, Card, GroupExpr, Kind, Sum
from .validation import require_valid

ROUTES = (
    "Discrete",
    "Compact",
    "NoncompactComponent",
    "ConnectedViaDual",
    "PGroup",
    "Torsion",
    "Periodic",
    "TotallyDisconnectedNonperiodic",
)


class NotApplicable(ValueError):
    pass


def _j(v: Any) -> Any:
    if isinstance(v, Card):
        return v.to_json()
    if isinstance(v, GroupExpr):
        return render(v)
    if isinstance(v, dict):
        return {str(k): _j(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_j(x) for x in v]
    return v


@dataclass(frozen=True)
class Clause:
    theorem: str
    quote: str
    ok: bool
    witness: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"theorem": self.theorem, "quote": self.quote, "ok": self.ok, "witness": _j(self.witness)}


@dataclass(frozen=True)
class Verdict:
    tm: bool | None
    stqh: bool | None
    route: str
    clauses: tuple[Clause, ...]
    chosen_U: GroupExpr | None

    def to_json(self, explain: bool = True) -> dict:
        out = {
            "tm": self.tm,
            "stqh": self.stqh,
            "route": self.route,
            "chosenU": None if self.chosen_U is None else render(self.chosen_U),
        }
        if explain:
            out["clauses"] = [c.to_json() for c in self.clauses]
        return out


@dataclass(frozen=True)
class PeriodicPartition:
    """Primes of a periodic group split relative to the chosen U.

    Each class is a tuple of explicit primes; ``tail_class`` names the class
    of every prime from ``tail_from`` on (None when there is no tail).
    """

    delta: tuple[int, ...]
    gamma: tuple[int, ...]
    phi: tuple[int, ...]
    mu: tuple[int, ...]
    tail_class: str | None = None
    tail_from: int | None = None

    def classes(self) -> dict[str, tuple[int, ...]]:
        return {"delta": self.delta, "gamma": self.gamma, "phi": self.phi, "mu": self.mu}

    def class_of(self, p: int) -> str | None:
        for name, ps in self.classes().items():
            if p in ps:
                return name
        if self.tail_from is not None and p >= self.tail_from:
            return self.tail_class
        return None

    def phi_finite(self) -> bool:
        return self.tail_class != "phi"

    def to_json(self) -> dict:
        out = {}
        for name, ps in self.classes().items():
            out[name] = {"primes": list(ps), "tail_from": self.tail_from if self.tail_class == name else None}
        return out


@dataclass(frozen=True)
class Decomposition:
    summands: tuple[tuple[str, GroupExpr], ...]
    theorem: str

    def total(self) -> GroupExpr:
        return Sum.of(*(e for _, e in self.summands))

    def to_json(self) -> dict:
        return {"theorem": self.theorem, "summands": [{"label": l, "expr": render(e)} for l, e in self.summands]}


# ----------------------------------------------------------------------------
# context shared by the routes


@dataclass
class _Ctx:
    expr: GroupExpr
    ex: Expansion
    dec: PrimaryDecomposition
    rec: InvariantRecord

    @classmethod
    def of(cls, e: GroupExpr) -> "_Ctx":
        require_valid(e)
        return cls(e, expand(e), primary_decompose(e), invariants(e))

    def route(self) -> str:
        r = self.rec
        if r.is_discrete:
            return "Discrete"
        if r.is_compact:
            return "Compact"
        if self.ex.count(Kind.R) != ZERO:
            return "NoncompactComponent"
        if self.ex.count(Kind.T) != ZERO:
            return "ConnectedViaDual"
        if r.is_periodic:
            if self.dec.tail is None and len(self.dec.by_prime) == 1:
                return "PGroup"
            return "Torsion" if r.is_torsion else "Periodic"
        return "TotallyDisconnectedNonperiodic"

    def periodic_part(self) -> GroupExpr:
        return self.ex.to_expr(p for p in self.ex.pieces if p.kind in PRIMARY_KINDS)

    def descriptors(self) -> list[PrimaryDescriptor]:
        return self.dec.all()


def route_of(e: GroupExpr) -> str:
    return _Ctx.of(e).route()


def _label(d: PrimaryDescriptor, tail_from: int | None) -> Any:
    return d.prime if d.prime is not None else f"p>={tail_from}"


# ----------------------------------------------------------------------------
# p-groups: the modular side


def pgroup_tm_clauses(d: PrimaryDescriptor, where: Any) -> list[Clause]:
    """Open-subgroup rank dichotomy for one primary component."""
    ru = d.rank_U()
    w = {"prime": where, "rank_U": ru}
    if ru.is_finite:
        return [
            Clause("pgroup-tm/finite-U", "the open compact subgroup U has finite p-rank", True, w),
            Clause("pgroup-tm/finite-U", "tor(G) is discrete", d.torsion_discrete(), {"prime": where}),
            Clause("pgroup-tm/finite-U", "G/tor(G) has finite p-rank", d.rank_mod_torsion().is_finite,
                   {"prime": where, "rank": d.rank_mod_torsion()}),
        ]
    return [
        Clause("pgroup-tm/infinite-U", "the open compact subgroup U has infinite p-rank", True, w),
        Clause("pgroup-tm/infinite-U", "div(G) is closed", d.divisible_closed(), {"prime": where}),
        Clause("pgroup-tm/infinite-U", "G/U has finite p-rank", d.rank_GU().is_finite,
               {"prime": where, "rank": d.rank_GU()}),
        Clause("pgroup-tm/infinite-U", "div(G) has finite p-rank", d.divisible_rank().is_finite,
               {"prime": where, "rank": d.divisible_rank()}),
        Clause("pgroup-tm/infinite-U", "G/div(G) is compact", d.reduced_part_compact(), {"prime": where}),
    ]


# ----------------------------------------------------------------------------
# p-groups: the stqh side, read off the descriptor fields directly


def _fin(*cards: Card) -> bool:
    return all(c.is_finite for c in cards)


def pgroup_stqh_clauses(d: PrimaryDescriptor, where: Any) -> list[Clause]:
    tot = PrimaryDescriptor._sum
    compact_share = [d.qp_mult, d.qp_local_mult, d.zp_mult_compact, tot(d.zp_local),
                     tot(d.cyclic_compact_power), tot(d.cyclic_local), tot(d.pruefer_via_local)]
    if d.is_discrete() or d.is_compact():
        return [Clause("pgroup-stqh/discrete-or-compact", "compact or discrete p-groups are stqh", True,
                       {"prime": where})]
    out: list[Clause] = []
    if _fin(*compact_share):
        out.append(Clause("pgroup-stqh/fg-open", "an open subgroup is topologically finitely generated", True,
                          {"prime": where}))
    else:
        # split G = D + R with D divisible and R reduced; R has no finitely
        # generated open subgroup, so it must be compact, and the discrete
        # quotient must not contain an infinite elementary subquotient
        discrete_dirs = [d.qp_mult, d.qp_local_mult, d.pruefer_discrete_mult, tot(d.pruefer_via_local),
                         tot(d.zp_local), tot(d.cyclic_discrete), tot(d.cyclic_local)]
        out.append(Clause("pgroup-stqh/split", "the divisible part is a closed direct summand D",
                          _fin(d.qp_local_mult, tot(d.pruefer_via_local)), {"prime": where}))
        out.append(Clause("pgroup-stqh/split", "the reduced summand R is compact",
                          _fin(tot(d.cyclic_discrete), tot(d.cyclic_local), tot(d.zp_local)), {"prime": where}))
        out.append(Clause("pgroup-stqh/split",
                          "no Z(p)^(N) + Z(p)^N subquotient: the discrete quotient G/U has finite socle",
                          _fin(*discrete_dirs), {"prime": where}))
    if d.is_divisible():
        shape = _fin(d.qp_mult, d.qp_local_mult, tot(d.pruefer_via_local))
        out.append(Clause("pgroup-stqh/divisible-shape",
                          "a divisible stqh p-group is a direct sum of Pruefer groups and finitely many Q_p",
                          shape, {"prime": where, "qp": d.qp_mult, "pruefer": d.pruefer_discrete_mult}))
    return out


# ----------------------------------------------------------------------------
# periodic groups


def partition_periodic(e: GroupExpr) -> PeriodicPartition:
    ctx = _Ctx.of(e)
    if not ctx.rec.is_periodic:
        from .invariants import NotPeriodic

        raise NotPeriodic("$")
    return _partition(ctx.dec)


def _class(d: PrimaryDescriptor) -> str:
    if not d.meets_U():
        return "delta"
    if d.inside_U():
        return "gamma"
    return "mu" if d.rank() == ONE else "phi"


def _partition(dec: PrimaryDecomposition) -> PeriodicPartition:
    cls: dict[str, list[int]] = {"delta": [], "gamma": [], "phi": [], "mu": []}
    for p, d in sorted(dec.by_prime.items()):
        cls[_class(d)].append(p)
    tail_class = _class(dec.tail) if dec.tail is not None else None
    return PeriodicPartition(*(tuple(cls[k]) for k in ("delta", "gamma", "phi", "mu")),
                             tail_class=tail_class, tail_from=dec.tail_start)


def periodic_stqh_clauses(dec: PrimaryDecomposition) -> tuple[list[Clause], PeriodicPartition]:
    part = _partition(dec)
    tail = dec.tail

    def members(name: str) -> list[PrimaryDescriptor]:
        ds = [dec.by_prime[p] for p in part.classes()[name]]
        return ds

    delta_ok = all(d.is_discrete() for d in members("delta"))
    if part.tail_class == "delta":
        delta_ok = delta_ok and tail.is_discrete() and not tail.meets_U()
    gamma_ok = all(d.is_compact() for d in members("gamma"))
    if part.tail_class == "gamma":
        gamma_ok = gamma_ok and _global(tail).is_compact()
    phi_finite = part.phi_finite()
    clauses = [
        Clause("periodic-stqh/partition", "primes split into delta, gamma, phi, mu relative to U", True,
               {"partition": part.to_json()}),
        Clause("periodic-stqh/delta", "A_delta is discrete", delta_ok, {"delta": part.delta}),
        Clause("periodic-stqh/gamma", "A_gamma is profinite", gamma_ok, {"gamma": part.gamma}),
        Clause("periodic-stqh/phi", "phi is finite", phi_finite,
               {"phi": part.phi, "tail_in_phi": part.tail_class == "phi"}),
    ]
    for d in members("phi"):
        sub = pgroup_stqh_clauses(d, d.prime)
        clauses.append(Clause("periodic-stqh/phi", "A_p is stqh for p in phi", all(c.ok for c in sub),
                              {"prime": d.prime, "failed": [c.quote for c in sub if not c.ok]}))
    mu = members("mu") + ([tail] if part.tail_class == "mu" else [])
    clauses.append(Clause("periodic-stqh/mu", "A_mu is inductively monothetic (every p-rank is 1)",
                          all(d.rank() == ONE for d in mu), {"mu": part.mu}))
    return clauses, part


def torsion_split(dec: PrimaryDecomposition) -> tuple[list[int], list[int], str | None, list[Clause]]:
    """The delta/phi split for torsion groups: D_phi + V_phi over finitely many
    primes, the rest discrete.  Returns (delta, phi, tail class, clauses)."""
    delta: list[int] = []
    phi: list[int] = []
    clauses: list[Clause] = []
    for p, d in sorted(dec.by_prime.items()):
        if not d.meets_U() and d.is_discrete():
            delta.append(p)
            continue
        # D_p: discrete divisible of finite rank; V_p: the rest, compact
        split = d.divisible_closed() and d.divisible_rank().is_finite and d.reduced_part_compact()
        if not split and d.is_discrete():
            delta.append(p)
            continue
        phi.append(p)
        clauses.append(Clause("torsion-tm/split",
                              "A_p = D_p + V_p, D_p discrete divisible of finite rank, V_p compact open",
                              split, {"prime": p, "divisible_rank": d.divisible_rank()}))
    tail_class = None
    if dec.tail is not None:
        t = dec.tail
        tail_class = "delta" if (t.is_discrete() and not t.meets_U()) else "phi"
    clauses.insert(0, Clause("torsion-tm/phi-finite", "the set phi is finite", tail_class != "phi",
                             {"phi": phi, "tail_from": dec.tail_start if tail_class == "phi" else None}))
    delta_ok = all(dec.by_prime[p].is_discrete() for p in delta)
    clauses.append(Clause("torsion-tm/delta", "A_delta is discrete", delta_ok,
                          {"delta": delta, "tail_from": dec.tail_start if tail_class == "delta" else None}))
    return delta, phi, tail_class, clauses


# ----------------------------------------------------------------------------
# the routes


def _dual_clauses(ctx: _Ctx, which: str) -> tuple[bool, list[Clause], Verdict | None]:
    clauses = [Clause("connected/component", "the identity component is compact and finite dimensional", True,
                      {"dim": ctx.rec.dim_connected})]
    free = ctx.ex.count(Kind.Z)
    if free != ZERO:
        clauses.append(Clause("connected/quotient",
                              "G/G_0 has no discrete torsion-free summand (its dual is totally disconnected)",
                              False, {"zrank": free}))
        return False, clauses, None
    d = dual(ctx.expr)
    inner = classify_tm(d) if which == "tm" else classify_stqh(d)
    ok = inner.tm if which == "tm" else inner.stqh
    clauses.append(Clause("connected/dual", "G is tM (stqh) exactly when its dual is", bool(ok),
                          {"dual": d, "dual_route": inner.route}))
    clauses.extend(Clause("dual:" + c.theorem, c.quote, c.ok, c.witness) for c in inner.clauses)
    return bool(ok), clauses, inner


def _td_nonperiodic(ctx: _Ctx, which: str) -> tuple[bool, list[Clause]]:
    p_expr = ctx.periodic_part()
    zr = ctx.ex.count(Kind.Z)
    tor_open = invariants(p_expr).is_torsion
    clauses = [
        Clause("td-nonperiodic/b1", "tor(G) = comp(G) is open in G", tor_open,
               {"comp": p_expr, "comp_is_torsion": tor_open}),
        Clause("td-nonperiodic/b1", "G/tor(G) is discrete torsion-free of finite Z-rank", zr.is_finite,
               {"zrank": zr}),
    ]
    if which == "tm":
        inner = classify_stqh(p_expr)
        clauses.append(Clause("td-nonperiodic/b2", "tor(G) is stqh", bool(inner.stqh), {"route": inner.route}))
    else:
        inner = classify_tm(p_expr)
        clauses.append(Clause("td-nonperiodic/stqh", "tor(G) is tM, equivalently stqh for torsion groups",
                              bool(inner.tm), {"route": inner.route}))
    return all(c.ok for c in clauses), clauses


def _base(ctx: _Ctx, route: str, which: str) -> tuple[bool, list[Clause]]:
    if route == "Discrete":
        return True, [Clause("discrete", "discrete abelian groups satisfy the modular law and all sums are closed",
                             True, {})]
    if route == "Compact":
        return True, [Clause("compact", "sums of compact subgroups are compact, hence closed", True, {})]
    if route == "NoncompactComponent":
        return False, [Clause("reals", "a copy of R carries the dense non-closed sum 2Z + sqrt(2)Z", False,
                              {"reals": ctx.ex.count(Kind.R)})]
    if route == "ConnectedViaDual":
        ok, cl, _ = _dual_clauses(ctx, which)
        return ok, cl
    if route == "TotallyDisconnectedNonperiodic":
        return _td_nonperiodic(ctx, which)
    raise AssertionError(route)


def classify_tm(e: GroupExpr) -> Verdict:
    ctx = _Ctx.of(e)
    route = ctx.route()
    if route == "PGroup":
        (d,) = ctx.descriptors()
        clauses = pgroup_tm_clauses(d, d.prime)
        ok = all(c.ok for c in clauses)
    elif route == "Torsion":
        _, _, _, clauses = torsion_split(ctx.dec)
        ok = all(c.ok for c in clauses)
    elif route == "Periodic":
        clauses = []
        for d in ctx.descriptors():
            sub = pgroup_tm_clauses(d, _label(d, ctx.dec.tail_start))
            clauses.append(Clause("periodic-tm/componentwise", "every primary component is tM",
                                  all(c.ok for c in sub), {"prime": _label(d, ctx.dec.tail_start)}))
            clauses.extend(sub)
        ok = all(c.ok for c in clauses)
    else:
        ok, clauses = _base(ctx, route, "tm")
    return Verdict(ok, None, route, tuple(clauses), chosen_U(e))


def classify_stqh(e: GroupExpr) -> Verdict:
    ctx = _Ctx.of(e)
    route = ctx.route()
    if route == "PGroup":
        (d,) = ctx.descriptors()
        clauses = pgroup_stqh_clauses(d, d.prime)
        ok = all(c.ok for c in clauses)
    elif route in ("Torsion", "Periodic"):
        clauses, _ = periodic_stqh_clauses(ctx.dec)
        ok = all(c.ok for c in clauses)
    else:
        ok, clauses = _base(ctx, route, "stqh")
    return Verdict(None, ok, route, tuple(clauses), chosen_U(e))


def classify(e: GroupExpr) -> Verdict:
    a, b = classify_tm(e), classify_stqh(e)
    if b.stqh and not a.tm:
        raise AssertionError(f"stqh without tM for {render(e)}")
    return Verdict(a.tm, b.stqh, a.route, a.clauses + b.clauses, a.chosen_U)


# ----------------------------------------------------------------------------
# decompositions


def _pieces_expr(ctx: _Ctx, pieces) -> GroupExpr:
    return ctx.ex.to_expr(pieces)


def _labelled(ctx: _Ctx, groups: list[tuple[str, list[Piece]]], theorem: str) -> Decomposition:
    out = tuple((label, _pieces_expr(ctx, ps)) for label, ps in groups if ps)
    return Decomposition(out, theorem)


def _is_divisible_piece(p: Piece) -> bool:
    return p.kind in (Kind.QP, Kind.R, Kind.T) or (p.kind is Kind.PRUEFER and p.shape == "discrete")


def _by_class(ctx: _Ctx, class_of) -> dict[str, list[Piece]]:
    out: dict[str, list[Piece]] = {}
    for p in ctx.ex.pieces:
        if p.kind in PRIMARY_KINDS:
            out.setdefault(class_of(p), []).append(p)
    return out


def decompose(e: GroupExpr) -> Decomposition:
    ctx = _Ctx.of(e)
    route = ctx.route()
    v = classify(e)
    positive = v.stqh if route == "Periodic" else v.tm
    if not positive:
        raise NotApplicable(f"no decomposition: the {route} verdict is negative")
    rec = ctx.rec
    n_classes = len(ctx.dec.by_prime) + (ctx.dec.tail is not None)
    if rec.is_torsion and n_classes > 1:
        delta, phi, tail_class, _ = torsion_split(ctx.dec)

        def cls(p: Piece) -> str:
            in_phi = (p.prime in phi) if not p.tail else tail_class == "phi"
            if not in_phi:
                return "A_delta"
            return "D_phi" if _is_divisible_piece(p) else "V_phi"

        groups = _by_class(ctx, cls)
        return _labelled(ctx, [(k, groups.get(k, [])) for k in ("D_phi", "V_phi", "A_delta")], "torsion-split")
    if route == "Discrete":
        return Decomposition((("discrete", e),), "discrete")
    if route == "Compact":
        return Decomposition((("compact", e),), "compact")
    if route == "PGroup":
        groups = _by_class(ctx, lambda p: "D" if _is_divisible_piece(p) else "R")
        return _labelled(ctx, [("R", groups.get("R", [])), ("D", groups.get("D", []))], "pgroup-split")
    if route in ("Periodic", "Torsion"):
        part = _partition(ctx.dec)

        def pcls(p: Piece) -> str:
            return "A_" + (part.tail_class if p.tail else part.class_of(p.prime))

        groups = _by_class(ctx, pcls)
        labels = ("A_delta", "A_gamma", "A_phi", "A_mu")
        return _labelled(ctx, [(k, groups.get(k, [])) for k in labels], "periodic-partition")
    if route == "TotallyDisconnectedNonperiodic":
        return _labelled(ctx, [
            ("tor", [p for p in ctx.ex.pieces if p.kind in PRIMARY_KINDS]),
            ("free", ctx.ex.of_kind(Kind.Z)),
        ], "td-nonperiodic")
    if route == "ConnectedViaDual":
        dctx = _Ctx.of(dual(e))
        _, phi, tail_class, _ = torsion_split(primary_decompose(dctx.periodic_part()))

        def ccls(p: Piece) -> str:
            if p.kind is Kind.T:
                return "G0"
            in_phi = (p.prime in phi) if not p.tail else tail_class == "phi"
            torsion_free = p.kind in (Kind.ZP, Kind.QP)
            return ("Z_" if torsion_free else ("F_" if in_phi else "S_")) + ("phi" if in_phi else "delta")

        groups: dict[str, list[Piece]] = {}
        for p in ctx.ex.pieces:
            groups.setdefault(ccls(p), []).append(p)
        labels = ("G0", "F_phi", "Z_phi", "Z_delta", "S_delta")
        return _labelled(ctx, [(k, groups.get(k, [])) for k in labels], "connected-dual")
    raise NotApplicable(route)
