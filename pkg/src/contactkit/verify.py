"""Invariance residuals and the classifying equation.

A generating function ``g`` is a symmetry of ``u_t = F`` iff

    g F_u + D_x(g) F_{u_x} + D_x^2(g) F_{u_xx} - D_t(g)

vanishes on solutions.  Two construction orders are provided; they must
agree, which doubles as a check of the jet machinery.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .contact import as_gf
from .expr import (
    ZERO,
    Expr,
    NotPolynomial,
    ProbeConfig,
    ProbeDomain,
    ZeroVerdict,
    add,
    collect_opaque,
    diff,
    is_zero,
    mul,
    neg,
    num,
    opaque,
    probe,
    sub,
    var,
    weakest,
)
from .jet import check_rhs, on_shell, restricted_t, restricted_x, total_t, total_x

u_x, u_xx = var("u_x"), var("u_xx")


def invariance_residual(F: Expr, g, path: str = "lifted") -> Expr:
    """Invariance condition of ``u_t = F`` under ``g``, restricted to solutions.

    ``path="lifted"`` applies the unrestricted totals first and restricts
    afterwards (the second x-derivative is taken after restriction, since the
    jet does not carry u_txx).  ``path="restricted"`` restricts ``g`` first and
    differentiates on the solution manifold.
    """
    check_rhs(F)
    g = as_gf(g).expr
    F_u, F_ux, F_uxx = diff(F, "u"), diff(F, "u_x"), diff(F, "u_xx")
    if path == "lifted":
        first = add(mul(g, F_u), mul(total_x(g), F_ux), neg(total_t(g)))
        second = restricted_x(on_shell(total_x(g), F))
        return add(on_shell(first, F), mul(second, F_uxx))
    if path == "restricted":
        gs = on_shell(g, F)
        Dg = restricted_x(gs)
        return add(mul(gs, F_u), mul(Dg, F_ux), mul(restricted_x(Dg), F_uxx),
                   neg(restricted_t(g, F)))
    raise ValueError(f"unknown path {path!r}")


@dataclass
class InvarianceReport:
    residual: Expr
    verdict: ZeroVerdict
    breakdown: dict = field(default_factory=dict)
    method: str = "whole"


def check_invariance(F: Expr, g, cfg: ProbeConfig | None = None,
                     domain: ProbeDomain | None = None, task: str = "") -> InvarianceReport:
    """Decide whether ``g`` generates a symmetry of ``u_t = F``.

    The residual is split by opaque-derivative monomials when possible; a
    nonzero coefficient only proves a failure after the whole residual is
    probed too, since the monomials need not be independent.
    """
    cfg = cfg or ProbeConfig()
    res = invariance_residual(F, g)
    try:
        parts = collect_opaque(res)
    except NotPolynomial:
        parts = None
    if parts is not None and len(parts) > 1:
        breakdown = {}
        for k, (mono, coeff) in enumerate(sorted(parts.items(), key=lambda kv: str(kv[0]))):
            breakdown[str(mono)] = is_zero(coeff, cfg, domain, task=f"{task}:coeff:{k}")
        if all(v.is_zero for v in breakdown.values()):
            return InvarianceReport(res, weakest(breakdown.values()), breakdown, "coefficients")
        whole = is_zero(res, cfg, domain, task=f"{task}:whole")
        return InvarianceReport(res, whole, breakdown, "whole")
    if parts is not None and not parts:
        return InvarianceReport(ZERO, ZeroVerdict("ProvenZero"), {}, "coefficients")
    return InvarianceReport(res, is_zero(res, cfg, domain, task=f"{task}:whole"), {}, "whole")


# ------------------------------------------------------ classifying equation


def _d(e, *names):
    for n in names:
        e = diff(e, n)
    return e


# (sign, builder) for each printed term, left to right
def _ce_terms(F: Expr, alpha: Expr, G: Expr):
    ux, uxx = u_x, u_xx
    F_u, F_ux, F_uxx = _d(F, "u"), _d(F, "u_x"), _d(F, "u_xx")
    return [
        (-1, lambda: mul(_d(G, "u_x"), F_u, ux)),
        (1, lambda: mul(F_uxx, _d(G, "u"), uxx)),
        (2, lambda: mul(F_uxx, _d(G, "u_x", "x"), uxx)),
        (2, lambda: mul(F_uxx, _d(G, "u", "x"), ux)),
        (1, lambda: mul(F_ux, _d(G, "u"), ux)),
        (1, lambda: mul(F_uxx, _d(G, "u", "u"), ux, ux)),
        (1, lambda: mul(F_uxx, _d(G, "u_x", "u_x"), uxx, uxx)),
        (2, lambda: mul(F_uxx, ux, _d(G, "u_x", "u"), uxx)),
        (1, lambda: mul(F_u, G)),
        (1, lambda: mul(F_uxx, _d(G, "x", "x"))),
        (-1, lambda: mul(_d(G, "u_x"), _d(F, "x"))),
        (1, lambda: mul(F_ux, _d(G, "x"))),
        (-1, lambda: mul(alpha, _d(F, "t"))),
        (-1, lambda: mul(F, _d(G, "u"))),
        (-1, lambda: mul(_d(alpha, "t"), F)),
        (-1, lambda: _d(G, "t")),
    ]


CE_TERM_COUNT = 16


def classifying_residual(F: Expr, alpha: Expr, G: Expr, flip: int | None = None) -> Expr:
    """Left-hand side of the classifying equation for ``g = alpha(t) u_t + G``.

    ``flip`` negates one term (by position); used as a mutation control.
    """
    terms = []
    for k, (sign, build) in enumerate(_ce_terms(F, alpha, G)):
        s = -sign if k == flip else sign
        terms.append(mul(num(s), build()) if s != 1 else build())
    return add(*terms)


def _generic_triple():
    t, x, u = var("t"), var("x"), var("u")
    F = opaque("F", [t, x, u, u_x, u_xx])
    alpha = opaque("a", [t])
    G = opaque("G", [t, x, u, u_x])
    return F, alpha, G


def consistency_difference(alpha_zero: bool = False, flip: int | None = None) -> Expr:
    F, alpha, G = _generic_triple()
    if alpha_zero:
        alpha = ZERO
    g = add(mul(alpha, var("u_t")), G)
    return sub(classifying_residual(F, alpha, G, flip), invariance_residual(F, g))


def lemma1_consistency(cfg: ProbeConfig | None = None, alpha_zero: bool = False,
                       flip: int | None = None) -> ZeroVerdict:
    """Probe classifying equation minus invariance residual for generic F, alpha, G.

    Each sample draws fresh random polynomials for the three functions, so
    the sample count is the number of random instantiations.
    """
    cfg = cfg or ProbeConfig()
    e = consistency_difference(alpha_zero, flip)
    return probe(e, cfg, task=f"consistency:{alpha_zero}:{flip}")


__all__ = [
    "InvarianceReport",
    "invariance_residual",
    "check_invariance",
    "classifying_residual",
    "consistency_difference",
    "lemma1_consistency",
    "CE_TERM_COUNT",
]
