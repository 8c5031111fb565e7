"""Total derivatives on the jet space of u(t, x).

Pure x-derivatives are ``u, u_x, u_xx, u_3, ..., u_8``; the only mixed
coordinates are ``u_t, u_tx, u_tt``.  Anything that would need u_txx and
friends raises :class:`JetOrderError`.
"""

from __future__ import annotations

from .expr import ONE, Expr, add, diff, mul, substitute, var

X_CHAIN = ("u", "u_x", "u_xx") + tuple(f"u_{k}" for k in range(3, 9))
MAX_ORDER = len(X_CHAIN) - 1
T_VARS = ("u_t", "u_tx", "u_tt")
JET_VARS = frozenset(("t", "x") + X_CHAIN + T_VARS)
EQUATION_VARS = frozenset(("t", "x", "u", "u_x", "u_xx"))


class JetOrderError(ValueError):
    """A derivative left the representable part of the jet."""


def order(name: str) -> int:
    """Number of x-derivatives in a pure jet coordinate."""
    return X_CHAIN.index(name)


def jet_vars(e: Expr) -> set[str]:
    return set(e.free) & JET_VARS


def _chain(e: Expr, pairs) -> Expr:
    terms = []
    for src, coeff in pairs:
        if src in e.free:
            terms.append(mul(coeff, diff(e, src)))
    return add(*terms)


def total_x(e: Expr) -> Expr:
    """D_x on the unrestricted jet (t, x, u, u_t, u_x, u_xx, ...)."""
    free = e.free
    if X_CHAIN[-1] in free:
        raise JetOrderError(f"D_x of {X_CHAIN[-1]} exceeds the order bound {MAX_ORDER}")
    for bad in ("u_tx", "u_tt"):
        if bad in free:
            raise JetOrderError(f"D_x of {bad} needs a mixed derivative that is not represented")
    pairs = [("x", ONE)]
    pairs += [(X_CHAIN[i], var(X_CHAIN[i + 1])) for i in range(MAX_ORDER)]
    pairs.append(("u_t", var("u_tx")))
    return _chain(e, pairs)


def total_t(e: Expr) -> Expr:
    """D_t on the unrestricted jet; only u_t, u_x and lower may occur."""
    free = e.free
    for bad in X_CHAIN[2:] + ("u_tx", "u_tt"):
        if bad in free:
            raise JetOrderError(f"D_t of {bad} needs a mixed derivative that is not represented")
    pairs = [("t", ONE), ("u", var("u_t")), ("u_x", var("u_tx")), ("u_t", var("u_tt"))]
    return _chain(e, pairs)


def _no_time(e: Expr, what: str):
    for bad in T_VARS:
        if bad in e.free:
            raise JetOrderError(f"{what} is defined on t-derivative-free expressions; found {bad}")


def restricted_x(e: Expr) -> Expr:
    """D = d/dx + sum u_{i+1} d/du_i on (t, x, u, u_x, u_xx, ...)."""
    _no_time(e, "restricted_x")
    if X_CHAIN[-1] in e.free:
        raise JetOrderError(f"D of {X_CHAIN[-1]} exceeds the order bound {MAX_ORDER}")
    pairs = [("x", ONE)] + [(X_CHAIN[i], var(X_CHAIN[i + 1])) for i in range(MAX_ORDER)]
    return _chain(e, pairs)


def restricted_x_n(e: Expr, n: int) -> Expr:
    for _ in range(n):
        e = restricted_x(e)
    return e


def check_rhs(F: Expr) -> None:
    extra = jet_vars(F) - EQUATION_VARS
    if extra:
        raise ValueError(f"right-hand side may depend on t, x, u, u_x, u_xx only; found {sorted(extra)}")


def consequences(F: Expr) -> dict[str, Expr]:
    """Values of u_t, u_tx, u_tt on solutions of u_t = F."""
    check_rhs(F)
    dF = restricted_x(F)
    d2F = restricted_x(dF)
    u_tt = add(
        diff(F, "t"),
        mul(diff(F, "u"), F),
        mul(diff(F, "u_x"), dF),
        mul(diff(F, "u_xx"), d2F),
    )
    return {"u_t": F, "u_tx": dF, "u_tt": u_tt}


def on_shell(e: Expr, F: Expr) -> Expr:
    """Restrict ``e`` to solutions of u_t = F (simultaneous substitution)."""
    if not (e.free & set(T_VARS)):
        check_rhs(F)
        return e
    cons = consequences(F)
    return substitute(e, {k: v for k, v in cons.items() if k in e.free})


def evolution_t(e: Expr, F: Expr) -> Expr:
    """d/dt + F d/du + sum D^i(F) d/du_i on t-derivative-free expressions."""
    _no_time(e, "evolution_t")
    check_rhs(F)
    terms = []
    if "t" in e.free:
        terms.append(diff(e, "t"))
    top = max((order(n) for n in e.free if n in X_CHAIN), default=-1)
    DiF = F
    for i in range(top + 1):
        if i:
            DiF = restricted_x(DiF)
        name = X_CHAIN[i]
        if name in e.free:
            terms.append(mul(DiF, diff(e, name)))
    return add(*terms)


def restricted_t(e: Expr, F: Expr) -> Expr:
    """D_t followed by restriction to u_t = F.

    Computed as the evolution derivative of ``on_shell(e, F)``, which agrees
    with ``on_shell(total_t(e), F)`` wherever the latter is representable and
    also covers inputs containing u_xx.
    """
    return evolution_t(on_shell(e, F), F)
