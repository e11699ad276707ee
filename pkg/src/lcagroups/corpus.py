"""Named reference expressions with their expected verdicts.

The corpus doubles as the ``--corpus`` self check of the command line tool.
"""

from __future__ import annotations

from dataclasses import dataclass

from .classify import classify, decompose
from .dsl import parse


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    text: str
    tm: bool
    stqh: bool
    summands: tuple[str, ...] | None = None  # expected decomposition labels
    note: str = ""


def _constant_prime_family(k: str) -> CorpusEntry:
    stqh = k != "inf"
    return CorpusEntry(
        f"socle-sum-constant-prime-{k}",
        f"let P = primes const(2) in dsum[{k}](Z(P)) + prod[{k}](Z(P))",
        stqh,
        stqh,
        note="strongly quasihamiltonian exactly when the index set is finite",
    )


CORPUS: tuple[CorpusEntry, ...] = (
    CorpusEntry("padic-integers-2", "Zp(2)", True, True, ("compact",), "compact p-group"),
    CorpusEntry("padic-integers-3", "Zp(3)", True, True, ("compact",), "compact p-group"),
    CorpusEntry("circle", "T", True, True, ("compact",), "compact"),
    CorpusEntry("elementary-discrete", "dsum[inf](Z(2))", True, True, ("discrete",), "discrete"),
    CorpusEntry("discrete-mixed", "Z + dsum[inf](Zinf(3))", True, True, ("discrete",), "discrete"),
    CorpusEntry("real-line", "R", False, False, None, "2Z + sqrt(2)Z is dense"),
    CorpusEntry("real-line-plus-integers", "R + Z", False, False, None, "non-compact identity component"),
    CorpusEntry("socle-sum", "dsum[inf](Z(2)) + prod[inf](Z(2))", False, False, None, "graph of a dense embedding"),
    CorpusEntry("local-square-2", "locprod[inf](Z(2^2), sub(2^1))", False, False, None, "reduces to the socle sum"),
    CorpusEntry("local-square-3", "locprod[inf](Z(3^2), sub(3^1))", False, False, None, "reduces to the socle sum"),
    *(_constant_prime_family(k) for k in ("1", "2", "3", "4", "5", "inf")),
    CorpusEntry(
        "socle-sum-distinct-primes",
        "let P = primes distinct in dsum[inf](Z(P)) + prod[inf](Z(P))",
        True,
        False,
        None,
        "every primary component is finite but infinitely many are mixed",
    ),
    CorpusEntry("divisible-qp-pruefer", "Qp(2) + dsum[inf](Zinf(2))", True, True, ("D",), "divisible p-group"),
    CorpusEntry("divisible-qp-square", "prod[2](Qp(3)) + dsum[inf](Zinf(3))", True, True, ("D",), "divisible p-group"),
    CorpusEntry("reduced-plus-divisible", "Zinf(2) + prod[inf](Z(2))", True, True, ("R", "D"), "compact reduced part"),
    CorpusEntry("reduced-plus-divisible-padic", "Zinf(3) + prod[inf](Zp(3))", True, True, ("R", "D"), "compact reduced part"),
    CorpusEntry("integers-plus-padic", "Z + Zp(2)", False, False, None, "compact elements are not torsion"),
    CorpusEntry("integers-plus-compact-torsion", "Z + prod[inf](Z(2))", True, True, ("tor", "free"), "open compact torsion"),
    CorpusEntry("circle-plus-discrete", "T + dsum[inf](Z(2))", True, True, None, "decided through the dual"),
    CorpusEntry("local-qp", "locprod[inf](Qp(2), Zp(2))", False, False, None, "divisible part is not closed"),
)


@dataclass(frozen=True)
class CorpusResult:
    entry: CorpusEntry
    tm: bool
    stqh: bool
    route: str
    summands: tuple[str, ...] | None

    @property
    def ok(self) -> bool:
        e = self.entry
        return self.tm == e.tm and self.stqh == e.stqh and (e.summands is None or e.summands == self.summands)

    def to_json(self) -> dict:
        return {
            "name": self.entry.name,
            "input": self.entry.text,
            "expected": {"tm": self.entry.tm, "stqh": self.entry.stqh, "summands": self.entry.summands},
            "got": {"tm": self.tm, "stqh": self.stqh, "route": self.route, "summands": self.summands},
            "ok": self.ok,
        }


def evaluate(entry: CorpusEntry) -> CorpusResult:
    e = parse(entry.text)
    v = classify(e)
    summands = None
    if entry.summands is not None:
        summands = tuple(label for label, _ in decompose(e).summands)
    return CorpusResult(entry, v.tm, v.stqh, v.route, summands)


def run_corpus(entries: tuple[CorpusEntry, ...] = CORPUS) -> dict:
    results = [evaluate(x) for x in entries]
    return {
        "entries": [r.to_json() for r in results],
        "passed": sum(r.ok for r in results),
        "total": len(results),
        "ok": all(r.ok for r in results),
    }
