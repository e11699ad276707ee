"""Well-formedness rules: an expression that validates denotes an LCA group."""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import (
    COMPACT_KINDS,
    DISCRETE_KINDS,
    Atom,
    ConstantPrime,
    DiscreteSum,
    DistinctPrimes,
    GroupExpr,
    Kind,
    LocalProduct,
    Product,
    Sum,
    Trivial,
    is_prime,
)


@dataclass(frozen=True)
class Violation:
    path: str
    rule: str
    message: str

    def to_json(self) -> dict:
        return {"path": self.path, "rule": self.rule, "message": self.message}


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def rules(self) -> set[str]:
        return {v.rule for v in self.violations}

    def to_json(self) -> dict:
        return {"ok": self.ok, "violations": [v.to_json() for v in self.violations]}


class InvalidExpression(ValueError):
    def __init__(self, report: ValidationReport):
        self.report = report
        first = report.violations[0]
        super().__init__(f"{first.path}: {first.message}")


def _check_atom(a: Atom, path: str, templated: bool, out: list[Violation]) -> None:
    if a.kind.has_prime:
        if a.prime is None:
            if not templated:
                out.append(Violation(path, "missing-prime", f"{a.kind.value} needs a prime"))
        elif not is_prime(a.prime):
            out.append(Violation(path, "not-prime", f"{a.prime} is not prime"))
    elif a.prime is not None:
        out.append(Violation(path, "unexpected-prime", f"{a.kind.value} takes no prime"))
    if a.kind is Kind.CYCLIC and a.exponent < 1:
        out.append(Violation(path, "bad-exponent", "cyclic exponent must be at least 1"))


def _check_sequence(seq, path: str, out: list[Violation]) -> None:
    if isinstance(seq, ConstantPrime):
        if not is_prime(seq.p):
            out.append(Violation(path, "not-prime", f"{seq.p} is not prime"))
    elif isinstance(seq, DistinctPrimes):
        if not seq.seed:
            out.append(Violation(path, "empty-seed", "distinct prime sequence needs a seed"))
        for q in seq.seed:
            if not is_prime(q):
                out.append(Violation(path, "not-prime", f"{q} is not prime"))
        if any(a >= b for a, b in zip(seq.seed, seq.seed[1:])):
            out.append(Violation(path, "seed-order", "seed must be strictly increasing"))


# (template kind, designator) pairs with an open compact designated subgroup
def _local_pair_ok(e: LocalProduct) -> str | None:
    k, s = e.atom.kind, e.sub
    if k is Kind.QP:
        return None if s.padic else "Qp is paired with Zp only"
    if s.padic:
        return "the Zp designator belongs to Qp"
    if k is Kind.CYCLIC:
        if not 0 <= s.exponent <= e.atom.exponent:
            return f"sub exponent must lie in 0..{e.atom.exponent}"
        return None
    if k in (Kind.ZP, Kind.PRUEFER):
        return None if s.exponent >= 0 else "sub exponent must be nonnegative"
    return f"{k.value} has no local-product pairing"


def _walk(e: GroupExpr, path: str, out: list[Violation]) -> None:
    if isinstance(e, Trivial):
        return
    if isinstance(e, Atom):
        _check_atom(e, path, False, out)
        return
    if isinstance(e, Sum):
        for i, p in enumerate(e.parts):
            _walk(p, f"{path}.parts[{i}]", out)
        return
    if not isinstance(e, (DiscreteSum, Product, LocalProduct)):
        out.append(Violation(path, "unknown-node", f"unsupported node {type(e).__name__}"))
        return
    a = e.atom
    templated = e.primes is not None
    _check_atom(a, f"{path}.atom", templated, out)
    if templated:
        _check_sequence(e.primes, f"{path}.primes", out)
        if not a.kind.has_prime:
            out.append(Violation(f"{path}.atom", "template-without-prime", f"{a.kind.value} cannot range over primes"))
        if a.prime is not None:
            out.append(Violation(f"{path}.atom", "template-prime-fixed", "template over a sequence must use the sequence"))
    if e.card.n is not None and e.card.n < 0:
        out.append(Violation(path, "negative-cardinal", "cardinal must be nonnegative"))
    infinite = e.card.is_infinite
    if a.kind is Kind.T and infinite:
        out.append(Violation(path, "circle-finite-only", "families of circles need finite cardinality"))
    if a.kind is Kind.R and infinite:
        out.append(Violation(path, "reals-finite-only", "families of reals need finite cardinality"))
    if isinstance(e, Product) and infinite and a.kind not in COMPACT_KINDS:
        out.append(Violation(path, "noncompact-product", "infinite product of non-compact atom"))
    if isinstance(e, DiscreteSum) and infinite and a.kind not in DISCRETE_KINDS:
        out.append(Violation(path, "nondiscrete-sum", "infinite discrete sum of non-discrete atom"))
    if isinstance(e, LocalProduct):
        problem = _local_pair_ok(e)
        if problem:
            out.append(Violation(f"{path}.sub", "local-pair", problem))
        sp = e.sub.prime
        if sp is not None and (templated or sp != a.prime):
            out.append(Violation(f"{path}.sub", "sub-prime-mismatch", "designator prime differs from the template prime"))


def validate(e: GroupExpr) -> ValidationReport:
    out: list[Violation] = []
    _walk(e, "$", out)
    return ValidationReport(tuple(out))


def require_valid(e: GroupExpr) -> GroupExpr:
    rep = validate(e)
    if not rep.ok:
        raise InvalidExpression(rep)
    return e
