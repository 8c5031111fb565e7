"""Symbolic expressions over jet variables with opaque function symbols."""

from .calculus import diff, diff_n, replace_opaque, substitute
from .collect import NotPolynomial, collect_opaque
from .core import (
    ELEMENTARY,
    HALF,
    MINUS_ONE,
    ONE,
    ZERO,
    Add,
    Expr,
    Fn,
    Mul,
    Num,
    Opaque,
    Param,
    Pow,
    Var,
    add,
    fn,
    mul,
    neg,
    num,
    opaque,
    param,
    power,
    sqrt,
    sub,
    var,
)
from .numeric import DomainError, ExprInstance, PolyInstance, eval_numeric, evaluate
from .parse import OpaqueSymbol, ParseError, SymbolTable, parse
from .printing import to_text
from .simplify import expand, normal_form, simplify
from .zero import (
    EXACT_PROBE_ZERO,
    INCONCLUSIVE,
    NUMERIC_ZERO,
    PROVEN_NONZERO,
    PROVEN_ZERO,
    ZERO_KINDS,
    ProbeConfig,
    ProbeDomain,
    ZeroVerdict,
    is_zero,
    probe,
    task_rng,
    weakest,
)

__all__ = [name for name in dir() if not name.startswith("_")]
