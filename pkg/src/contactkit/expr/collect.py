"""Coefficient extraction with respect to opaque applications."""

from __future__ import annotations

from fractions import Fraction

from .core import ONE, Expr, Num, Opaque, mul, power, walk
from .simplify import normal_form, to_expr


class NotPolynomial(ValueError):
    """An opaque application sits inside a kernel (exp, a root, a sum power, ...)."""


def collect_opaque(e: Expr, rational: bool = False) -> dict[Expr, Expr]:
    """Split ``e`` as ``sum monomial * coefficient``.

    Monomials are Laurent products of opaque applications (with their
    derivative indices); coefficients are free of opaque applications.
    """
    p = normal_form(e, rational=rational)
    groups: dict[tuple, dict] = {}
    for mono, c in p.items():
        key = []
        rest = []
        for k, x in mono:
            if isinstance(k, Opaque) and isinstance(x, Num) and x.value.denominator == 1:
                key.append((k, x))
            elif any(isinstance(n, Opaque) for n in walk(k)) or any(
                isinstance(n, Opaque) for n in walk(x)
            ):
                raise NotPolynomial(f"opaque application inside kernel {k}")
            else:
                rest.append((k, x))
        g = groups.setdefault(tuple(key), {})
        r = tuple(rest)
        g[r] = g.get(r, Fraction(0)) + c
    out: dict[Expr, Expr] = {}
    for key, poly in groups.items():
        mono = mul(*(power(k, x) for k, x in key)) if key else ONE
        coeff = to_expr({m: c for m, c in poly.items() if c})
        if coeff != Num(Fraction(0)):
            out[mono] = coeff
    return out
