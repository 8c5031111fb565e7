"""Partial differentiation and simultaneous substitution."""

from __future__ import annotations

from typing import Mapping

from .core import (
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
    power,
)


def diff(e: Expr, v: Var | str) -> Expr:
    """Partial derivative with respect to the variable ``v``.

    Opaque applications use the chain rule,
    ``d F(a_1..a_m) = sum_i pd(F; e_i)(a) * d a_i``.
    """
    name = v if isinstance(v, str) else v.name
    return _Diff(name).run(e)


class _Diff:
    def __init__(self, name: str):
        self.name = name
        self.memo: dict[Expr, Expr] = {}

    def run(self, e: Expr) -> Expr:
        if self.name not in e.free:
            return ZERO
        hit = self.memo.get(e)
        if hit is not None:
            return hit
        out = self._rule(e)
        self.memo[e] = out
        return out

    def _rule(self, e: Expr) -> Expr:
        d = self.run
        if isinstance(e, Var):
            return ONE if e.name == self.name else ZERO
        if isinstance(e, (Num, Param)):
            return ZERO
        if isinstance(e, Add):
            return add(*(d(t) for t in e.terms))
        if isinstance(e, Mul):
            fs = e.factors
            terms = []
            for i, f in enumerate(fs):
                df = d(f)
                if df == ZERO:
                    continue
                terms.append(mul(*fs[:i], df, *fs[i + 1 :]))
            return add(*terms)
        if isinstance(e, Pow):
            b, x = e.base, e.exp
            db = d(b)
            if self.name not in x.free:
                return mul(x, power(b, add(x, num(-1))), db)
            dx = d(x)
            return mul(e, add(mul(dx, fn("ln", b)), mul(x, db, power(b, num(-1)))))
        if isinstance(e, Fn):
            a = e.arg
            da = d(a)
            k = e.kind
            if k == "exp":
                return mul(e, da)
            if k == "ln":
                return mul(da, power(a, num(-1)))
            if k == "sin":
                return mul(fn("cos", a), da)
            if k == "cos":
                return neg(mul(fn("sin", a), da))
            if k == "tan":
                return mul(power(fn("sec", a), num(2)), da)
            if k == "sec":
                return mul(e, fn("tan", a), da)
            if k == "arctan":
                return mul(da, power(add(ONE, power(a, num(2))), num(-1)))
            if k == "arctanh":
                return mul(da, power(add(ONE, neg(power(a, num(2)))), num(-1)))
            raise ValueError(k)
        if isinstance(e, Opaque):
            terms = []
            for i, a in enumerate(e.args):
                da = d(a)
                if da == ZERO:
                    continue
                idx = list(e.index)
                idx[i] += 1
                terms.append(mul(opaque(e.name, e.args, idx), da))
            return add(*terms)
        raise TypeError(type(e))


def diff_n(e: Expr, *vs: Var | str) -> Expr:
    for v in vs:
        e = diff(e, v)
    return e


def substitute(e: Expr, bindings: Mapping) -> Expr:
    """Replace variables/parameters simultaneously and recanonicalize.

    Keys may be :class:`Var`, :class:`Param` or plain names.
    """
    table: dict[str, Expr] = {}
    for k, val in bindings.items():
        table[k if isinstance(k, str) else k.name] = val
    if not table:
        return e
    memo: dict[Expr, Expr] = {}
    names = frozenset(table)

    def go(n: Expr) -> Expr:
        if not (n.free & names):
            return n
        hit = memo.get(n)
        if hit is not None:
            return hit
        if isinstance(n, (Var, Param)):
            out = table.get(n.name, n)
        elif isinstance(n, Add):
            out = add(*(go(t) for t in n.terms))
        elif isinstance(n, Mul):
            out = mul(*(go(f) for f in n.factors))
        elif isinstance(n, Pow):
            out = power(go(n.base), go(n.exp))
        elif isinstance(n, Fn):
            out = fn(n.kind, go(n.arg))
        elif isinstance(n, Opaque):
            out = opaque(n.name, [go(a) for a in n.args], n.index)
        else:
            out = n
        memo[n] = out
        return out

    return go(e)


def replace_opaque(e: Expr, name: str, builder) -> Expr:
    """Replace every application of opaque ``name`` by ``builder(index, args)``."""
    memo: dict[Expr, Expr] = {}

    def go(n: Expr) -> Expr:
        hit = memo.get(n)
        if hit is not None:
            return hit
        if isinstance(n, Opaque):
            args = [go(a) for a in n.args]
            out = builder(n.index, args) if n.name == name else opaque(n.name, args, n.index)
        elif isinstance(n, Add):
            out = add(*(go(t) for t in n.terms))
        elif isinstance(n, Mul):
            out = mul(*(go(f) for f in n.factors))
        elif isinstance(n, Pow):
            out = power(go(n.base), go(n.exp))
        elif isinstance(n, Fn):
            out = fn(n.kind, go(n.arg))
        else:
            out = n
        memo[n] = out
        return out

    return go(e)
