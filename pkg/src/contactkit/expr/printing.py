"""Text rendering in the input grammar, so ``parse(to_text(e)) == e``."""

from __future__ import annotations

from fractions import Fraction

from .core import Add, Expr, Fn, Mul, Num, Opaque, Param, Pow, Var

# binding levels
_SUM, _PROD, _UNARY, _POW, _ATOM = 1, 2, 3, 4, 5


def _fraction(v: Fraction) -> tuple[str, int]:
    if v.denominator == 1:
        s = str(v.numerator)
        return s, (_UNARY if v < 0 else _ATOM)
    return f"{v.numerator}/{v.denominator}", (_UNARY if v < 0 else _PROD)


def _wrap(text: str, level: int, need: int) -> str:
    return text if level >= need else f"({text})"


def _render(e: Expr) -> tuple[str, int]:
    if isinstance(e, Num):
        return _fraction(e.value)
    if isinstance(e, (Var, Param)):
        return e.name, _ATOM
    if isinstance(e, Fn):
        return f"{e.kind}({_render(e.arg)[0]})", _ATOM
    if isinstance(e, Opaque):
        args = ",".join(_render(a)[0] for a in e.args)
        if any(e.index):
            return f"pd({e.name};{','.join(map(str, e.index))})({args})", _ATOM
        return f"{e.name}({args})", _ATOM
    if isinstance(e, Pow):
        return _render_pow(e.base, e.exp), _POW
    if isinstance(e, Mul):
        return _render_mul(e)
    if isinstance(e, Add):
        parts: list[str] = []
        for i, t in enumerate(e.terms):
            s, _ = _render(t)
            if i == 0:
                parts.append(s)
            elif s.startswith("-"):
                parts.append(" - " + _render(_negate(t))[0])
            else:
                parts.append(" + " + s)
        return "".join(parts), _SUM
    raise TypeError(type(e))


def _negate(t: Expr) -> Expr:
    from .core import neg

    return neg(t)


def _render_pow(base: Expr, exp: Expr) -> str:
    b, lvl = _render(base)
    b = _wrap(b, lvl, _ATOM)
    if isinstance(exp, Num) and exp.value.denominator == 1 and exp.value >= 0:
        return f"{b}^{exp.value.numerator}"
    return f"{b}^({_render(exp)[0]})"


def _render_mul(e: Mul) -> tuple[str, int]:
    coeff = Fraction(1)
    numer: list[str] = []
    denom: list[str] = []
    for f in e.factors:
        if isinstance(f, Num):
            coeff = f.value
            continue
        if isinstance(f, Pow) and isinstance(f.exp, Num) and f.exp.value < 0:
            inv = -f.exp.value
            if inv == 1:
                s, lvl = _render(f.base)
                denom.append(_wrap(s, lvl, _POW + 1))
            else:
                denom.append(_render_pow(f.base, Num(inv)))
            continue
        s, lvl = _render(f)
        numer.append(_wrap(s, lvl, _POW))
    sign = "-" if coeff < 0 else ""
    coeff = abs(coeff)
    if coeff.numerator != 1 or not numer:
        numer.insert(0, str(coeff.numerator))
    if coeff.denominator != 1:
        denom.insert(0, str(coeff.denominator))
    text = "*".join(numer)
    if denom:
        d = denom[0] if len(denom) == 1 else "(" + "*".join(denom) + ")"
        text = f"{text}/{d}"
    if sign:
        return sign + text, _UNARY
    return text, _PROD


def to_text(e: Expr) -> str:
    return _render(e)[0]
