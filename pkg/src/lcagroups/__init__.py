"""Classification of locally compact abelian groups by their lattice of closed subgroups."""

from .classify import Verdict, classify, classify_stqh, classify_tm, decompose
from .dsl import parse, render
from .invariants import canonical_form, dual, invariants, p_rank
from .validation import validate

__version__ = "0.1.0"

__all__ = [
    "Verdict",
    "canonical_form",
    "classify",
    "classify_stqh",
    "classify_tm",
    "decompose",
    "dual",
    "invariants",
    "p_rank",
    "parse",
    "render",
    "validate",
]
