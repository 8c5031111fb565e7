"""Independent reference computations in sympy, used to freeze derived values."""

from __future__ import annotations

import sympy as sp
from sympy.parsing.sympy_parser import convert_xor, parse_expr, standard_transformations

from contactkit.expr import to_text

t, x, u, u_t, u_x, u_xx, u_3, u_4 = sp.symbols("t x u u_t u_x u_xx u_3 u_4")
NAMES = {"t": t, "x": x, "u": u, "u_t": u_t, "u_x": u_x, "u_xx": u_xx, "u_3": u_3, "u_4": u_4,
         "ln": sp.log, "arctan": sp.atan, "arctanh": sp.atanh, "sec": sp.sec}
_TRANSFORMS = standard_transformations + (convert_xor,)


def sym(text_or_expr) -> sp.Expr:
    text = text_or_expr if isinstance(text_or_expr, str) else to_text(text_or_expr)
    return parse_expr(text, local_dict=dict(NAMES), transformations=_TRANSFORMS)


def bracket(f: sp.Expr, g: sp.Expr) -> sp.Expr:
    d = sp.diff
    return sp.expand(
        (d(g, u_t) * d(f, u) - d(f, u_t) * d(g, u)) * u_t
        + (d(g, u_x) * d(f, u) - d(f, u_x) * d(g, u)) * u_x
        + d(g, u_t) * d(f, t) - d(f, u_t) * d(g, t)
        + d(g, u_x) * d(f, x) - d(f, u_x) * d(g, x)
        + f * d(g, u) - g * d(f, u)
    )


def total_x_restricted(e: sp.Expr) -> sp.Expr:
    chain = [(u, u_x), (u_x, u_xx), (u_xx, u_3), (u_3, u_4)]
    return sp.diff(e, x) + sum(sp.diff(e, a) * b for a, b in chain)


def heat_invariance(g: sp.Expr) -> sp.Expr:
    """Invariance residual of u_t = u_xx for g(t,x,u,u_x,u_xx) already on solutions."""
    Dg = total_x_restricted(g)
    D2g = total_x_restricted(Dg)
    # D_t g on solutions: g_t + g_u u_xx + g_{u_x} u_3 + g_{u_xx} u_4
    Dtg = (sp.diff(g, t) + sp.diff(g, u) * u_xx + sp.diff(g, u_x) * u_3
           + sp.diff(g, u_xx) * u_4)
    return sp.simplify(D2g - Dtg)


def legendre_heat() -> sp.Expr:
    """u~_t~ = u~_x~x~ pulled back through x~ = u_x, u~ = u - x u_x.

    For the Legendre transform u~_x~ = -x and u~_x~x~ = -1/u_xx, while
    u~_t~ = u_t at fixed x~.  Hence u_t = -1/u_xx.
    """
    X = u_x
    U = u - x * u_x
    # d(u~)/d(x~) along x with t fixed
    ux_tilde = sp.simplify(total_x_restricted(U) / total_x_restricted(X))
    uxx_tilde = sp.simplify(total_x_restricted(ux_tilde) / total_x_restricted(X))
    # time derivative at fixed x~: U_t + U_{u_x} u_{tx}... solved for u_t via
    # D(X)/J [T' F~ + X_t u~_x~ - U_t] with X, U time independent and T = t
    J = total_x_restricted(X) * sp.diff(U, u) - total_x_restricted(U) * sp.diff(X, u)
    return sp.simplify(total_x_restricted(X) / J * uxx_tilde)
