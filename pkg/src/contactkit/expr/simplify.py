"""Normal forms.

An expression is expanded into a Laurent polynomial over *kernels*:
variables, parameters, opaque applications, elementary applications and
powers of irreducible sums.  Exponents of kernels may be rational or
symbolic.  On top of the expansion the following rewrites are applied:

* ``exp(a)*exp(b) -> exp(a+b)`` (all exponentials in a monomial are fused),
* ``ln(exp(a)) -> a``,
* ``sin(a)^2 -> 1 - cos(a)^2`` (so ``sin^2 + cos^2`` collapses to 1),
* ``(c*m)^r -> c^r * m^r`` for monomials with positive coefficient, unless
  this would change the value at negative bases.

When a sum survives in a denominator, the whole polynomial is handed to
sympy for common-denominator/gcd cancellation and the denominator is
split into its irreducible factors, each of which becomes a kernel.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm

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
    count_nodes,
    fn,
    mul,
    num,
    opaque,
    power,
)

Mono = tuple  # tuple[tuple[Expr, Expr], ...] sorted by kernel key
Poly = dict  # dict[Mono, Fraction]

_CACHE: dict[tuple[Expr, bool], tuple] = {}
_CACHE_LIMIT = 400_000

# rational cancellation is skipped above this many monomials
RATIONAL_LIMIT = 600


def _cached_normal(e: Expr, rational: bool) -> Poly:
    key = (e, rational)
    hit = _CACHE.get(key)
    if hit is not None:
        return dict(hit)
    p = _normal(e, rational)
    if len(_CACHE) > _CACHE_LIMIT:
        _CACHE.clear()
    _CACHE[key] = tuple(p.items())
    return p


def clear_cache() -> None:
    _CACHE.clear()


# --------------------------------------------------------------- poly algebra


def _is_exp(k: Expr) -> bool:
    return isinstance(k, Fn) and k.kind == "exp"


def _exp_add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value + b.value)
    return simplify(add(a, b))


def _exp_mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Num) and isinstance(b, Num):
        return Num(a.value * b.value)
    return simplify(mul(a, b))


def _finish(coeff: Fraction, d: dict, rational: bool) -> tuple[Fraction, Mono]:
    exps = [k for k in d if _is_exp(k)]
    if len(exps) > 1 or (exps and d[exps[0]] != ONE):
        parts = [mul(k.arg, d.pop(k)) for k in exps]
        arg = to_expr(_cached_normal(add(*parts), rational))
        if arg != ZERO:
            k = fn("exp", arg)
            if isinstance(k, Num):
                coeff *= k.value
            else:
                d[k] = ONE
    items = []
    for k, e in d.items():
        if e == ZERO:
            continue
        if isinstance(k, Num) and isinstance(e, Num):
            whole = e.value.numerator // e.value.denominator
            frac = e.value - whole
            coeff *= k.value**whole
            if frac:
                p = power(k, Num(frac))
                if isinstance(p, Num):
                    coeff *= p.value
                else:
                    items.append((k, Num(frac)))
            continue
        items.append((k, e))
    items.sort(key=lambda kv: kv[0].key)
    return coeff, tuple(items)


def _mono_mul(m1: Mono, m2: Mono, rational: bool) -> tuple[Fraction, Mono]:
    if not m1:
        return Fraction(1), m2
    if not m2:
        return Fraction(1), m1
    d = dict(m1)
    clash = False
    for k, e in m2:
        if k in d:
            d[k] = _exp_add(d[k], e)
            clash = True
        else:
            d[k] = e
    if not clash and sum(1 for k in d if _is_exp(k)) < 2:
        if not any(isinstance(k, Num) for k in d):
            items = sorted(d.items(), key=lambda kv: kv[0].key)
            return Fraction(1), tuple(items)
    return _finish(Fraction(1), d, rational)


def _p_add(a: Poly, b: Poly, scale: Fraction = Fraction(1)) -> Poly:
    out = dict(a)
    for m, c in b.items():
        v = out.get(m, Fraction(0)) + scale * c
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


def _p_mul(a: Poly, b: Poly, rational: bool) -> Poly:
    if len(a) > len(b):
        a, b = b, a
    out: Poly = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            k, m = _mono_mul(m1, m2, rational)
            v = out.get(m, Fraction(0)) + k * c1 * c2
            if v:
                out[m] = v
            else:
                out.pop(m, None)
    return _reduce_trig(out, rational)


def _p_pow(a: Poly, n: int, rational: bool) -> Poly:
    result: Poly = {(): Fraction(1)}
    base = a
    while n:
        if n & 1:
            result = _p_mul(result, base, rational)
        n >>= 1
        if n:
            base = _p_mul(base, base, rational)
    return result


def _reduce_trig(p: Poly, rational: bool) -> Poly:
    todo = [m for m in p if any(_is_sin_square(k, e) for k, e in m)]
    if not todo:
        return p
    out = dict(p)
    for m in todo:
        c = out.pop(m)
        rest: list = []
        repl: Poly = {(): Fraction(1)}
        for k, e in m:
            if _is_sin_square(k, e):
                n = int(e.value)
                if n % 2:
                    rest.append((k, ONE))
                cos2: Poly = {(): Fraction(1), ((fn("cos", k.arg), Num(Fraction(2))),): Fraction(-1)}
                repl = _p_mul(repl, _p_pow(cos2, n // 2, rational), rational)
            else:
                rest.append((k, e))
        rest_poly: Poly = {_finish(Fraction(1), dict(rest), rational)[1]: Fraction(1)}
        out = _p_add(out, _p_mul(rest_poly, repl, rational), c)
    return out


def _is_sin_square(k: Expr, e: Expr) -> bool:
    return (
        isinstance(k, Fn)
        and k.kind == "sin"
        and isinstance(e, Num)
        and e.value.denominator == 1
        and e.value >= 2
    )


def _kernel(k: Expr, e: Expr = ONE) -> Poly:
    return {((k, e),): Fraction(1)}


def _const(v: Fraction) -> Poly:
    return {(): v} if v else {}


# ------------------------------------------------------------- normalization


def _normal(e: Expr, rational: bool) -> Poly:
    if isinstance(e, Num):
        return _const(e.value)
    if isinstance(e, (Var, Param)):
        return _kernel(e)
    if isinstance(e, Opaque):
        args = [simplify(a, rational=rational) for a in e.args]
        return _kernel(opaque(e.name, args, e.index))
    if isinstance(e, Fn):
        a = simplify(e.arg, rational=rational)
        if e.kind == "ln" and _is_exp(a):
            return _cached_normal(a.arg, rational)
        k = fn(e.kind, a)
        if isinstance(k, Num):
            return _const(k.value)
        return _kernel(k)
    if isinstance(e, Add):
        out: Poly = {}
        for t in e.terms:
            out = _p_add(out, _cached_normal(t, rational))
        return out
    if isinstance(e, Mul):
        out = {(): Fraction(1)}
        for f in e.factors:
            out = _p_mul(out, _cached_normal(f, rational), rational)
            if not out:
                return {}
        return out
    if isinstance(e, Pow):
        return _normal_pow(e, rational)
    raise TypeError(type(e))


def _leading(p: Poly) -> Fraction:
    first = min(p, key=_mono_key)
    return p[first]


def _mono_key(m: Mono):
    return tuple((k.key, e.key) for k, e in m)


def _scaled(p: Poly, c: Fraction) -> Poly:
    return {m: v * c for m, v in p.items()}


def _normal_pow(e: Pow, rational: bool) -> Poly:
    x = simplify(e.exp, rational=rational)
    base = _cached_normal(e.base, rational)
    if not base:
        if isinstance(x, Num) and x.value > 0:
            return {}
        return _kernel(ZERO if not base else to_expr(base), x)
    if isinstance(x, Num) and x.value.denominator == 1:
        n = int(x.value)
        if n >= 0:
            return _p_pow(base, n, rational)
        if len(base) == 1:
            (m, c), = base.items()
            return _mono_pow(m, c, x, rational)
        lc = _leading(base)
        b = to_expr(_scaled(base, 1 / lc))
        return {_finish(Fraction(1), {b: x}, rational)[1]: lc**n}
    if len(base) == 1:
        (m, c), = base.items()
        if c > 0 and _safe_distribute(m, x):
            return _mono_pow(m, c, x, rational)
        return _kernel(to_expr(base), x)
    lc = abs(_leading(base))
    b = to_expr(_scaled(base, 1 / lc))
    out = _kernel(b, x)
    if lc != 1:
        out = _p_mul(out, _mono_pow((), lc, x, rational), rational)
    return out


def _safe_distribute(m: Mono, x: Expr) -> bool:
    """``(k^a)^x -> k^(a*x)`` must not turn |k|^n into k^n for odd n."""
    if not isinstance(x, Num):
        return True
    for k, a in m:
        if _is_exp(k):
            continue
        if isinstance(a, Num) and a.value.denominator == 1 and a.value % 2 == 0:
            prod = a.value * x.value
            if prod.denominator == 1 and prod % 2 == 1:
                return False
    return True


def _mono_pow(m: Mono, c: Fraction, x: Expr, rational: bool) -> Poly:
    d: dict = {}
    coeff = Fraction(1)
    if c != 1:
        if isinstance(x, Num) and x.value.denominator == 1:
            coeff = c ** int(x.value)
        else:
            d[Num(c)] = x
    for k, a in m:
        d[k] = _exp_mul(a, x)
    k, mono = _finish(coeff, d, rational)
    return {mono: k}


def to_expr(p: Poly) -> Expr:
    terms = []
    for m, c in p.items():
        factors = [power(k, e) for k, e in m]
        terms.append(mul(Num(c), *factors))
    return add(*terms)


# ------------------------------------------------------- rational cancellation


def _needs_rational(p: Poly) -> bool:
    for m in p:
        for k, e in m:
            if isinstance(k, Add) and isinstance(e, Num) and e.value < 0:
                return True
    return False


class _SympyBridge:
    """Maps kernels to sympy symbols and back."""

    def __init__(self, p: Poly):
        import sympy

        self.sp = sympy
        self.roots: dict[Expr, int] = {}
        self.symbols: dict[object, object] = {}
        self.back: dict[object, tuple[Expr, Expr]] = {}
        self._collect(p)

    def _collect(self, p: Poly):
        for m in p:
            for k, e in m:
                if isinstance(e, Num):
                    d = e.value.denominator
                    self.roots[k] = lcm(self.roots.get(k, 1), d)
                if isinstance(k, Add):
                    self._collect(_cached_normal(k, False))

    def _symbol(self, tag, kernel: Expr, exponent: Expr):
        s = self.symbols.get(tag)
        if s is None:
            s = self.sp.Symbol(f"k{len(self.symbols)}")
            self.symbols[tag] = s
            self.back[s] = (kernel, exponent)
        return s

    def factor(self, k: Expr, e: Expr):
        sp = self.sp
        if not isinstance(e, Num):
            return self._symbol(("sym", k, e), k, e)
        r = e.value
        d = self.roots.get(k, 1)
        if isinstance(k, Add):
            whole = r.numerator // r.denominator
            frac = r - whole
            out = self.poly(_cached_normal(k, False)) ** whole
            if frac:
                s = self._symbol(("root", k, d), k, Num(Fraction(1, d)))
                out = out * s ** int(frac * d)
            return out
        s = self._symbol(("root", k, d), k, Num(Fraction(1, d)))
        return s ** int(r * d)

    def poly(self, p: Poly):
        sp = self.sp
        terms = []
        for m, c in p.items():
            t = sp.Rational(c.numerator, c.denominator)
            for k, e in m:
                t = t * self.factor(k, e)
            terms.append(t)
        return sp.Add(*terms)

    def from_sympy(self, expr, rational: bool) -> Poly:
        sp = self.sp
        gens = sorted(expr.free_symbols, key=lambda s: s.name)
        if not gens:
            v = sp.Rational(expr)
            return _const(Fraction(int(v.p), int(v.q)))
        poly = sp.Poly(expr, *gens)
        out: Poly = {}
        for exps, c in poly.terms():
            c = sp.Rational(c)
            d: dict = {}
            for g, n in zip(gens, exps):
                if not n:
                    continue
                k, base_e = self.back[g]
                e = _exp_mul(base_e, Num(Fraction(n)))
                d[k] = _exp_add(d[k], e) if k in d else e
            coeff, mono = _finish(Fraction(int(c.p), int(c.q)), d, rational)
            term = _kernel_poly(mono, coeff, rational)
            out = _p_add(out, term)
        return out


def _kernel_poly(mono: Mono, coeff: Fraction, rational: bool) -> Poly:
    """Re-normalize a monomial whose sum-kernel exponents may now be >= 1."""
    if not any(isinstance(k, Add) for k, _ in mono):
        return {mono: coeff}
    return _scaled(_cached_normal(to_expr({mono: Fraction(1)}), False), coeff)


def _rationalize(p: Poly) -> Poly:
    if not _needs_rational(p) or len(p) > RATIONAL_LIMIT:
        return p
    bridge = _SympyBridge(p)
    sp = bridge.sp
    expr = bridge.poly(p)
    together = sp.cancel(expr)
    numer, denom = sp.fraction(together)
    out = bridge.from_sympy(sp.expand(numer), True)
    if not out:
        return {}
    if denom != 1:
        coeff, factors = sp.factor_list(denom)
        inv: Poly = {(): 1 / Fraction(int(sp.Rational(coeff).p), int(sp.Rational(coeff).q))}
        for f, mult in factors:
            fp = bridge.from_sympy(sp.expand(f), True)
            if len(fp) == 1:
                (m, c), = fp.items()
                inv = _p_mul(inv, _mono_pow(m, c, Num(Fraction(-mult)), True), True)
            else:
                lc = _leading(fp)
                b = to_expr(_scaled(fp, 1 / lc))
                inv = _p_mul(inv, {((b, Num(Fraction(-mult))),): lc ** (-mult)}, True)
        out = _p_mul(out, inv, True)
    return out


# ------------------------------------------------------------------- public


def normal_form(e: Expr, rational: bool = True) -> Poly:
    """Expanded normal form as ``{monomial: coefficient}``."""
    p = _cached_normal(e, rational)
    if rational:
        p = _rationalize(p)
    return p


def simplify(e: Expr, rational: bool = True) -> Expr:
    """Canonical simplified form; idempotent."""
    if isinstance(e, (Num, Var, Param)):
        return e
    return to_expr(normal_form(e, rational))


def expand(e: Expr) -> Expr:
    """Expansion and rewrites only, without gcd cancellation."""
    return simplify(e, rational=False)


def rewrite_trig(e: Expr) -> Expr:
    """``sec -> 1/cos`` and ``tan -> sin/cos``; used before zero testing."""
    memo: dict[Expr, Expr] = {}

    def go(n: Expr) -> Expr:
        hit = memo.get(n)
        if hit is not None:
            return hit
        if isinstance(n, Fn):
            a = go(n.arg)
            if n.kind == "sec":
                out = power(fn("cos", a), num(-1))
            elif n.kind == "tan":
                out = mul(fn("sin", a), power(fn("cos", a), num(-1)))
            else:
                out = fn(n.kind, a)
        elif isinstance(n, Add):
            out = add(*(go(t) for t in n.terms))
        elif isinstance(n, Mul):
            out = mul(*(go(f) for f in n.factors))
        elif isinstance(n, Pow):
            out = power(go(n.base), go(n.exp))
        elif isinstance(n, Opaque):
            out = opaque(n.name, [go(a) for a in n.args], n.index)
        else:
            out = n
        memo[n] = out
        return out

    return go(e)


def is_trivially_zero(e: Expr) -> bool:
    return e == ZERO


def size(e: Expr) -> int:
    return count_nodes(e)
