"""Text syntax for group expressions: a tokenizer, a recursive-descent parser
and the canonical renderer.

    expr     := term ("+" term)*
    term     := "0" | atom | family | "(" expr ")" | letexpr
    letexpr  := "let" IDENT "=" "primes" seqspec "in" expr
    seqspec  := "distinct" ["(" INT ("," INT)* ")"] | "const" "(" INT ")"
    atom     := "Z" | "R" | "T" | "Z(" P ["^" INT] ")" | "Zinf(" P ")" | "Zp(" P ")" | "Qp(" P ")"
    family   := ("dsum" | "prod") "[" card "]" "(" atom ")"
              | "locprod" "[" card "]" "(" atom "," subdes ")"
    subdes   := "sub(" P "^" INT ")" | "Zp(" P ")"
    card     := INT | "inf"

``P`` is an integer, or inside a family template the name of a bound prime
sequence.  ``Z(n^e)`` is the cyclic group of order n^e, so ``Z(4)`` and
``Z(2^2)`` parse to the same atom.  Line comments start with ``#``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

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
    PrimeSequence,
    Product,
    SubDesignator,
    Sum,
    Trivial,
    prime_power,
    sequences,
)

ATOM_NAMES = {"Z": Kind.Z, "R": Kind.R, "T": Kind.T, "Zinf": Kind.PRUEFER, "Zp": Kind.ZP, "Qp": Kind.QP}
FAMILY_NAMES = ("dsum", "prod", "locprod")
KEYWORDS = frozenset(ATOM_NAMES) | frozenset(FAMILY_NAMES) | {
    "let", "primes", "distinct", "const", "in", "inf", "sub",
}


class ParseError(ValueError):
    """Base class of all DSL errors."""

    position: int = 0

    def to_json(self) -> dict:
        return {"error": type(self).__name__, "position": self.position, "message": str(self)}


class DSLSyntaxError(ParseError):
    def __init__(self, position: int, expected: set[str] | frozenset[str], found: str = ""):
        self.position = position
        self.expected = frozenset(expected)
        self.found = found
        exp = ", ".join(sorted(self.expected))
        super().__init__(f"at {position}: expected one of {{{exp}}}, found {found or 'end of input'!r}")

    def to_json(self) -> dict:
        d = super().to_json()
        d["expected"] = sorted(self.expected)
        return d


class UnknownAtom(ParseError):
    def __init__(self, name: str, position: int):
        self.name = name
        self.position = position
        super().__init__(f"at {position}: unknown atom or constructor {name!r}")


class UnboundPrimeSequence(ParseError):
    def __init__(self, name: str, position: int):
        self.name = name
        self.position = position
        super().__init__(f"at {position}: prime sequence {name!r} is not bound by a let")


_TOKEN = re.compile(r"\s+|#[^\n]*|(?P<int>\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<sym>[+()\[\],^=])")


@dataclass(frozen=True)
class Token:
    kind: str  # "int", "ident", "sym", "eof"
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    out: list[Token] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise DSLSyntaxError(pos, {"token"}, text[pos])
        if m.lastgroup is not None:
            out.append(Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    out.append(Token("eof", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def fail(self, expected: set[str]):
        raise DSLSyntaxError(self.tok.pos, expected, self.tok.text)

    def accept(self, text: str) -> bool:
        if self.tok.kind in ("sym", "ident") and self.tok.text == text:
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        t = self.tok
        if not self.accept(text):
            self.fail({text})
        return t

    def integer(self) -> int:
        t = self.tok
        if t.kind != "int":
            self.fail({"INT"})
        self.i += 1
        return int(t.text)

    def ident(self) -> Token:
        t = self.tok
        if t.kind != "ident":
            self.fail({"IDENT"})
        self.i += 1
        return t

    # grammar

    def parse(self) -> GroupExpr:
        e = self.expr({})
        if self.tok.kind != "eof":
            self.fail({"+", "end of input"})
        return e

    def expr(self, env: dict[str, PrimeSequence]) -> GroupExpr:
        parts = [self.term(env)]
        while self.accept("+"):
            parts.append(self.term(env))
        return Sum.of(*parts)

    def term(self, env: dict[str, PrimeSequence]) -> GroupExpr:
        t = self.tok
        if t.kind == "int":
            if t.text == "0":
                self.i += 1
                return Trivial()
            self.fail({"0", "atom", "family", "(", "let"})
        if self.accept("("):
            e = self.expr(env)
            self.expect(")")
            return e
        if t.kind != "ident":
            self.fail({"0", "atom", "family", "(", "let"})
        if t.text == "let":
            return self.letexpr(env)
        if t.text in FAMILY_NAMES:
            return self.family(env)
        if t.text in ATOM_NAMES:
            atom, seq = self.atom(None)
            return atom
        raise UnknownAtom(t.text, t.pos)

    def letexpr(self, env: dict[str, PrimeSequence]) -> GroupExpr:
        self.expect("let")
        name = self.ident()
        if name.text in KEYWORDS:
            raise DSLSyntaxError(name.pos, {"IDENT"}, name.text)
        self.expect("=")
        self.expect("primes")
        seq: PrimeSequence
        if self.accept("distinct"):
            seed = [2]
            if self.accept("("):
                seed = [self.integer()]
                while self.accept(","):
                    seed.append(self.integer())
                self.expect(")")
            seq = DistinctPrimes(tuple(seed))
        elif self.accept("const"):
            self.expect("(")
            seq = ConstantPrime(self.integer())
            self.expect(")")
        else:
            self.fail({"distinct", "const"})
        self.expect("in")
        return self.expr({**env, name.text: seq})

    def prime_ref(self, env: dict[str, PrimeSequence] | None) -> int | PrimeSequence:
        t = self.tok
        if t.kind == "int":
            return self.integer()
        if env is not None and t.kind == "ident":
            self.i += 1
            if t.text not in env:
                raise UnboundPrimeSequence(t.text, t.pos)
            return env[t.text]
        self.fail({"INT"} if env is None else {"INT", "IDENT"})
        raise AssertionError  # unreachable

    def atom(self, env: dict[str, PrimeSequence] | None) -> tuple[Atom, PrimeSequence | None]:
        """An atom; with ``env`` given, the prime may name a sequence."""
        t = self.ident()
        if t.text not in ATOM_NAMES:
            raise UnknownAtom(t.text, t.pos)
        kind = ATOM_NAMES[t.text]
        if kind in (Kind.R, Kind.T) or (kind is Kind.Z and self.tok.text != "("):
            return Atom(kind), None
        self.expect("(")
        ref = self.prime_ref(env)
        exponent = 0
        if kind is Kind.Z:
            kind = Kind.CYCLIC
            exponent = 1
            if self.accept("^"):
                exponent = self.integer()
        self.expect(")")
        if isinstance(ref, int):
            if kind is Kind.CYCLIC:
                # Z(n) names the cyclic group of order n: Z(8) is Z(2^3)
                pk = prime_power(ref)
                if pk is not None:
                    ref, exponent = pk[0], pk[1] * exponent
            return Atom(kind, ref, exponent), None
        return Atom(kind, None, exponent), ref

    def family(self, env: dict[str, PrimeSequence]) -> GroupExpr:
        kw = self.ident().text
        self.expect("[")
        if self.accept("inf"):
            card = INF
        else:
            card = Card(self.integer())
        self.expect("]")
        self.expect("(")
        atom, seq = self.atom(env)
        if kw == "locprod":
            self.expect(",")
            sub = self.subdes(env, seq)
            self.expect(")")
            return LocalProduct(atom, sub, card, seq)
        self.expect(")")
        return (DiscreteSum if kw == "dsum" else Product)(atom, card, seq)

    def subdes(self, env: dict[str, PrimeSequence], seq: PrimeSequence | None) -> SubDesignator:
        t = self.tok
        if self.accept("sub"):
            self.expect("(")
            ref = self.prime_ref(env)
            self.expect("^")
            b = self.integer()
            self.expect(")")
            return SubDesignator(b, _sub_prime(ref, seq))
        if self.accept("Zp"):
            self.expect("(")
            ref = self.prime_ref(env)
            self.expect(")")
            return SubDesignator(0, _sub_prime(ref, seq), padic=True)
        raise DSLSyntaxError(t.pos, {"sub", "Zp"}, t.text)


def _sub_prime(ref: int | PrimeSequence, seq: PrimeSequence | None) -> int | PrimeSequence | None:
    # the sequence of the template itself is stored as None
    if seq is not None and ref == seq:
        return None
    return ref


def parse(text: str) -> GroupExpr:
    """Parse DSL text into an expression."""
    return _Parser(text).parse()


# rendering

_SEQ_NAMES = ("P", "Q", "S", "V", "W")


def _seq_names(e: GroupExpr) -> dict[PrimeSequence, str]:
    names = {}
    for i, seq in enumerate(sequences(e)):
        names[seq] = _SEQ_NAMES[i] if i < len(_SEQ_NAMES) else f"P{i}"
    return names


def _render_seq(seq: PrimeSequence) -> str:
    if isinstance(seq, ConstantPrime):
        return f"primes const({seq.p})"
    if seq.seed == (2,):
        return "primes distinct"
    return "primes distinct(" + ", ".join(map(str, seq.seed)) + ")"


def _render_atom(a: Atom, pname: str | None = None) -> str:
    p = pname if pname is not None else str(a.prime)
    if a.kind is Kind.CYCLIC:
        return f"Z({p})" if a.exponent == 1 else f"Z({p}^{a.exponent})"
    if a.kind.has_prime:
        return f"{a.kind.value}({p})"
    return a.kind.value


def _render(e: GroupExpr, names: dict[PrimeSequence, str]) -> str:
    if isinstance(e, Trivial):
        return "0"
    if isinstance(e, Atom):
        return _render_atom(e)
    if isinstance(e, Sum):
        return " + ".join(_render(p, names) for p in e.parts)
    if isinstance(e, (DiscreteSum, Product, LocalProduct)):
        pname = names[e.primes] if e.primes is not None else None
        tmpl = _render_atom(e.atom, pname)
        head = {DiscreteSum: "dsum", Product: "prod", LocalProduct: "locprod"}[type(e)]
        if isinstance(e, LocalProduct):
            s = e.sub
            sp = pname if s.prime is None else names[s.prime] if not isinstance(s.prime, int) else str(s.prime)
            if s.padic:
                tmpl += f", Zp({sp})"
            else:
                tmpl += f", sub({sp}^{s.exponent})"
        return f"{head}[{e.card}]({tmpl})"
    raise TypeError(f"not a group expression: {e!r}")


def render(e: GroupExpr) -> str:
    """Canonical DSL text; ``parse(render(e)) == e``."""
    names = _seq_names(e)
    body = _render(e, names)
    lets = "".join(f"let {name} = {_render_seq(seq)} in " for seq, name in names.items())
    return lets + body
