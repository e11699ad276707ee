"""The ``lca`` command line tool.

Every command prints one JSON report ``{command, input, result, version}`` on
standard output.  Failures print a JSON error object on standard error and
exit with 2 (parse error or bad parameters), 3 (invalid expression or an
operation that does not apply) or 4 (lattice too large).  ``witness`` exits
with 1 when the certificate does not confirm its claim.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from fractions import Fraction
from typing import Any, Callable

from . import __version__
from .classify import NotApplicable as DecompositionNotApplicable
from .classify import classify, classify_stqh, classify_tm, decompose
from .corpus import run_corpus
from .dsl import ParseError, parse, render
from .fgab import FgAbGroup
from .invariants import NotDualizable, NotPeriodic, canonical_form, dual, invariants
from .lattice import TooLarge, check_modular_law, find_pentagon, subgroup_lattice
from .validation import InvalidExpression, require_valid, validate
from .witness import (
    BadParams,
    NotApplicable as WitnessNotApplicable,
    UnknownLabel,
    escape_certificate,
    exact_meet,
    local_square_confirms,
    make_family,
    pentagon_instance,
    sqrt2_density_witness,
)

EXIT_OK, EXIT_UNCONFIRMED, EXIT_PARSE, EXIT_INVALID, EXIT_TOO_LARGE = 0, 1, 2, 3, 4


class CommandFailed(Exception):
    def __init__(self, code: int, payload: dict):
        self.code = code
        self.payload = payload
        super().__init__(payload.get("message", ""))


def _error(kind: str, message: str, **extra: Any) -> dict:
    return {"error": kind, "message": message, **extra}


def _expr(text: str):
    try:
        e = parse(text)
    except ParseError as exc:
        raise CommandFailed(EXIT_PARSE, exc.to_json()) from exc
    try:
        return require_valid(e)
    except InvalidExpression as exc:
        raise CommandFailed(EXIT_INVALID, _error("InvalidExpression", str(exc), **exc.report.to_json())) from exc


# ----------------------------------------------------------------------------
# commands; each returns (result, exit code)


def cmd_classify(args) -> tuple[Any, int]:
    e = _expr(args.expr)
    if args.tm_only:
        v = classify_tm(e)
    elif args.stqh_only:
        v = classify_stqh(e)
    else:
        v = classify(e)
    return v.to_json(args.explain), EXIT_OK


def cmd_invariants(args) -> tuple[Any, int]:
    return invariants(_expr(args.expr)).to_json(), EXIT_OK


def cmd_dual(args) -> tuple[Any, int]:
    try:
        return render(dual(_expr(args.expr))), EXIT_OK
    except NotDualizable as exc:
        raise CommandFailed(EXIT_INVALID, _error("NotDualizable", str(exc))) from exc


def cmd_decompose(args) -> tuple[Any, int]:
    try:
        return decompose(_expr(args.expr)).to_json(), EXIT_OK
    except (DecompositionNotApplicable, NotPeriodic) as exc:
        raise CommandFailed(EXIT_INVALID, _error("NotApplicable", str(exc))) from exc


def cmd_canonical(args) -> tuple[Any, int]:
    return canonical_form(_expr(args.expr)).to_json(), EXIT_OK


def cmd_validate(args) -> tuple[Any, int]:
    try:
        e = parse(args.expr)
    except ParseError as exc:
        raise CommandFailed(EXIT_PARSE, exc.to_json()) from exc
    report = validate(e)
    return report.to_json(), EXIT_OK if report.ok else EXIT_INVALID


_LATTICE_FACTOR = re.compile(r"^Z\((\d+)\)$")


def parse_finite_spec(spec: str) -> FgAbGroup:
    """``Z(a)xZ(b)x...`` as a finite group in invariant-factor form."""
    orders = []
    for part in spec.replace(" ", "").split("x"):
        m = _LATTICE_FACTOR.match(part)
        if not m or int(m.group(1)) < 1:
            raise CommandFailed(EXIT_PARSE, _error("BadSpec", f"expected Z(n)xZ(m)x..., got {spec!r}"))
        orders.append(int(m.group(1)))
    return FgAbGroup.from_cyclic_orders(orders)


def cmd_lattice(args) -> tuple[Any, int]:
    g = parse_finite_spec(args.spec)
    try:
        lat = subgroup_lattice(g, bound=args.bound, with_subgroups=False)
    except TooLarge as exc:
        raise CommandFailed(EXIT_TOO_LARGE, _error("TooLarge", str(exc))) from exc
    result: dict[str, Any] = {"group": list(g.torsion_orders), "order": g.order, "subgroups": len(lat)}
    if args.modular_check:
        bad = check_modular_law(lat)
        result["modular"] = bad is None
        result["violation"] = list(bad) if bad is not None else None
    if args.pentagon:
        w = find_pentagon(lat)
        result["pentagon"] = w.to_json() if w is not None else None
    return result, EXIT_OK


def cmd_witness(args) -> tuple[Any, int]:
    fam = args.family
    try:
        if fam == "sqrt2":
            w = sqrt2_density_witness(Fraction(args.eps))
            return w.to_json(), EXIT_OK if w.bound_holds() else EXIT_UNCONFIRMED
        f = make_family(fam, args.p, args.q)
        if f.id == "graph-monothetic":
            meet = exact_meet(f, levels=args.levels)
            pent = pentagon_instance(f, levels=args.levels)
            indices = {n: meet.index_in(f, "C", n) for n in meet.finite_level_meets}
            ok = (not meet.meet_at_infinity and pent.ok
                  and all(i == f.q ** n for n, i in indices.items()))
            result = {
                **f.to_json(),
                "levels": args.levels,
                "meet": meet.to_json(),
                "meetIndexInC": {str(n): i for n, i in indices.items()},
                "pentagon": pent.to_json(),
                "verdict": "not topologically modular" if ok else "unconfirmed",
            }
            return result, EXIT_OK if ok else EXIT_UNCONFIRMED
        target = [int(t) for t in args.target.split(",")] if args.target else None
        cert = escape_certificate(f, args.levels, target)
        ok = local_square_confirms(cert) if f.id == "local-square" else cert.confirms_non_closed
        return cert.to_json(), EXIT_OK if ok else EXIT_UNCONFIRMED
    except (BadParams, UnknownLabel, ValueError) as exc:
        if isinstance(exc, WitnessNotApplicable):
            raise CommandFailed(EXIT_INVALID, _error("NotApplicable", str(exc))) from exc
        raise CommandFailed(EXIT_PARSE, _error("BadParams", str(exc))) from exc


COMMANDS: dict[str, Callable] = {
    "classify": cmd_classify,
    "invariants": cmd_invariants,
    "dual": cmd_dual,
    "decompose": cmd_decompose,
    "canonical": cmd_canonical,
    "validate": cmd_validate,
    "lattice": cmd_lattice,
    "witness": cmd_witness,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lca", description="Classify LCA groups and certify counterexamples.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="JSON file with default option values; command-line flags win")
    parser.add_argument("--corpus", action="store_true", help="run the built-in classification corpus")
    sub = parser.add_subparsers(dest="command")

    for name, helptext in (
        ("classify", "decide tM and stqh"),
        ("invariants", "structural invariants"),
        ("dual", "Pontryagin dual in canonical syntax"),
        ("decompose", "the decomposition asserted by a positive verdict"),
        ("canonical", "finite-rank canonical form per prime"),
        ("validate", "check an expression against the grammar rules"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("expr")
        if name == "classify":
            only = p.add_mutually_exclusive_group()
            only.add_argument("--tm-only", action="store_true")
            only.add_argument("--stqh-only", action="store_true")
            p.add_argument("--explain", action="store_true", help="include the clause trace")

    p = sub.add_parser("lattice", help="subgroup lattice of a finite abelian group")
    p.add_argument("spec", help='e.g. "Z(4)xZ(2)"')
    p.add_argument("--pentagon", action="store_true")
    p.add_argument("--modular-check", action="store_true")
    p.add_argument("--bound", type=int, default=None, help="maximum group order (default LCA_LATTICE_BOUND)")

    p = sub.add_parser("witness", help="certificates for the standard counterexamples")
    p.add_argument("family", help="graph-monothetic, socle-sum, local-square or sqrt2")
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--q", type=int, default=None)
    p.add_argument("--levels", type=int, default=10)
    p.add_argument("--eps", default="1/10", help="bound for sqrt2, e.g. 1e-9 or 1/100")
    p.add_argument("--target", default=None, help="comma separated target for socle-sum")
    return parser


def _apply_config(parser: argparse.ArgumentParser, path: str) -> None:
    with open(path, encoding="utf-8") as fh:
        config = json.load(fh)
    defaults = {k.replace("-", "_"): v for k, v in config.items()}
    parser.set_defaults(**defaults)
    for action in parser._subparsers._group_actions if parser._subparsers else ():
        for sp in action.choices.values():
            sp.set_defaults(**defaults)


def _emit(obj: Any, stream) -> None:
    stream.write(json.dumps(obj, indent=2) + "\n")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    pre, _ = parser.parse_known_args(argv)
    if pre.config:
        try:
            _apply_config(parser, pre.config)
        except (OSError, ValueError) as exc:
            _emit(_error("BadConfig", str(exc)), sys.stderr)
            return EXIT_PARSE
    args = parser.parse_args(argv)

    if args.corpus:
        result = run_corpus()
        _emit({"command": "corpus", "input": "", "result": result, "version": __version__}, sys.stdout)
        return EXIT_OK if result["ok"] else EXIT_UNCONFIRMED
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_PARSE

    text = getattr(args, "expr", None) or getattr(args, "spec", None) or args.family
    try:
        result, code = COMMANDS[args.command](args)
    except CommandFailed as exc:
        _emit(exc.payload, sys.stderr)
        return exc.code
    _emit({"command": args.command, "input": text, "result": result, "version": __version__}, sys.stdout)
    return code


if __name__ == "__main__":
    sys.exit(main())
