"""Point evaluation of expressions.

Expressions are compiled once into straight-line Python (one assignment per
distinct subtree) and then evaluated with one of three backends:

``exact``
    :class:`fractions.Fraction`; only for expressions without elementary
    kernels and with integer exponents.
``float``
    double precision with explicit domain checks.
``mp``
    :mod:`mpmath` at a configurable precision, used to re-check borderline
    floating residuals.

Opaque symbols are evaluated through an *instantiation*: either a concrete
polynomial (:class:`PolyInstance`) or an expression in placeholder variables
(:class:`ExprInstance`).  Derivatives of either are exact.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Mapping

import mpmath

from .core import Add, Expr, Fn, Mul, Num, Opaque, Param, Pow, Var, top_terms, walk


class DomainError(ArithmeticError):
    """Evaluation left the real domain (pole, log of non-positive, ...)."""


class NotExact(TypeError):
    """The exact backend was asked to evaluate a transcendental expression."""


# ------------------------------------------------------------------ backends


_POLE = 1e-12


class _FloatOps:
    name = "float"

    const = staticmethod(float)

    @staticmethod
    def pint(b, n):
        if n < 0 and b == 0:
            raise DomainError("division by zero")
        if n < 0 and abs(b) < _POLE:
            raise DomainError("too close to a pole")
        return b**n

    @staticmethod
    def pfrac(b, e):
        if b < 0 or (b == 0 and e < 0):
            raise DomainError("real power of a negative base")
        return b**e

    @staticmethod
    def psym(b, e):
        if b <= 0:
            raise DomainError("symbolic power of a non-positive base")
        return b**e

    @staticmethod
    def exp(a):
        return math.exp(a)

    @staticmethod
    def ln(a):
        if a <= 0:
            raise DomainError("ln of a non-positive number")
        return math.log(a)

    sin = staticmethod(math.sin)
    cos = staticmethod(math.cos)

    @staticmethod
    def tan(a):
        c = math.cos(a)
        if abs(c) < _POLE:
            raise DomainError("tan at a pole")
        return math.sin(a) / c

    @staticmethod
    def sec(a):
        c = math.cos(a)
        if abs(c) < _POLE:
            raise DomainError("sec at a pole")
        return 1.0 / c

    arctan = staticmethod(math.atan)

    @staticmethod
    def arctanh(a):
        if not -1 < a < 1:
            raise DomainError("arctanh outside (-1, 1)")
        return math.atanh(a)


class _ExactOps:
    name = "exact"

    const = staticmethod(Fraction)

    @staticmethod
    def pint(b, n):
        if n < 0 and b == 0:
            raise DomainError("division by zero")
        return b**n

    @staticmethod
    def _no(*_):
        raise NotExact("transcendental kernel in exact evaluation")

    pfrac = psym = exp = ln = sin = cos = tan = sec = arctan = arctanh = _no


class _MpOps:
    name = "mp"

    const = staticmethod(lambda v: mpmath.mpf(v.numerator) / v.denominator)

    @staticmethod
    def pint(b, n):
        if n < 0 and b == 0:
            raise DomainError("division by zero")
        return b**n

    @staticmethod
    def pfrac(b, e):
        if b < 0 or (b == 0 and e < 0):
            raise DomainError("real power of a negative base")
        return mpmath.power(b, e)

    @staticmethod
    def psym(b, e):
        if b <= 0:
            raise DomainError("symbolic power of a non-positive base")
        return mpmath.power(b, e)

    exp = staticmethod(mpmath.exp)

    @staticmethod
    def ln(a):
        if a <= 0:
            raise DomainError("ln of a non-positive number")
        return mpmath.log(a)

    sin = staticmethod(mpmath.sin)
    cos = staticmethod(mpmath.cos)

    @staticmethod
    def tan(a):
        c = mpmath.cos(a)
        if c == 0:
            raise DomainError("tan at a pole")
        return mpmath.sin(a) / c

    @staticmethod
    def sec(a):
        c = mpmath.cos(a)
        if c == 0:
            raise DomainError("sec at a pole")
        return 1 / c

    arctan = staticmethod(mpmath.atan)

    @staticmethod
    def arctanh(a):
        if not -1 < a < 1:
            raise DomainError("arctanh outside (-1, 1)")
        return mpmath.atanh(a)


BACKENDS = {"float": _FloatOps, "exact": _ExactOps, "mp": _MpOps}


def to_backend(value, backend: str):
    """Convert an assignment value (int, Fraction, float) for ``backend``."""
    if backend == "exact":
        if isinstance(value, float):
            raise NotExact("float value in exact evaluation")
        return Fraction(value)
    if backend == "mp":
        if isinstance(value, Fraction):
            return mpmath.mpf(value.numerator) / value.denominator
        return mpmath.mpf(value)
    return float(value)


# ------------------------------------------------------------ instantiations


class PolyInstance:
    """A concrete polynomial ``sum c_m y^m`` standing in for an opaque symbol."""

    def __init__(self, terms: Mapping[tuple[int, ...], Fraction], arity: int):
        self.arity = arity
        self.terms = {m: Fraction(c) for m, c in terms.items() if c}
        self._derived: dict[tuple[int, ...], dict] = {(0,) * arity: self.terms}
        self._typed: dict = {}

    @classmethod
    def random(cls, rng, arity: int, degree: int, scale: int = 5) -> "PolyInstance":
        """Dense polynomial of total degree <= ``degree`` with small rational coefficients."""
        terms = {}
        for d in range(degree + 1):
            for combo in combinations_with_replacement(range(arity), d):
                m = [0] * arity
                for i in combo:
                    m[i] += 1
                num = rng.randint(-scale, scale)
                den = rng.randint(1, 3)
                terms[tuple(m)] = Fraction(num, den)
        if not any(terms.values()):
            terms[(0,) * arity] = Fraction(1)
        return cls(terms, arity)

    def derivative(self, index: tuple[int, ...]) -> dict:
        hit = self._derived.get(index)
        if hit is not None:
            return hit
        out = {}
        for m, c in self.terms.items():
            coeff = c
            new = []
            for k, e in zip(index, m):
                if e < k:
                    coeff = 0
                    break
                coeff *= math.perm(e, k)
                new.append(e - k)
            if coeff:
                out[tuple(new)] = coeff
        self._derived[index] = out
        return out

    def value(self, index, args, ops):
        key = (index, ops.name)
        terms = self._typed.get(key)
        if terms is None:
            terms = [(m, ops.const(c)) for m, c in self.derivative(index).items()]
            self._typed[key] = terms
        total = ops.const(Fraction(0))
        for m, c in terms:
            t = c
            for a, e in zip(args, m):
                if e:
                    t = t * a**e
            total = total + t
        return total

    @property
    def rational(self) -> bool:
        return True

    def __repr__(self):
        return f"PolyInstance({len(self.terms)} terms, arity={self.arity})"


def placeholder_names(arity: int) -> list[str]:
    return [f"y{i + 1}" for i in range(arity)]


class ExprInstance:
    """An expression in placeholders ``y1..ym`` standing in for an opaque symbol."""

    def __init__(self, body: Expr, arity: int):
        from .calculus import substitute
        from .core import var

        self.arity = arity
        self.names = placeholder_names(arity)
        # placeholders parse as parameters; differentiate them as variables
        self.body = substitute(body, {n: var(n) for n in self.names})
        self._derived: dict[tuple[int, ...], Compiled] = {}

    def derivative(self, index) -> "Compiled":
        hit = self._derived.get(index)
        if hit is None:
            from .calculus import diff

            e = self.body
            for name, k in zip(self.names, index):
                for _ in range(k):
                    e = diff(e, name)
            hit = self._derived[index] = compile_expr(e)
        return hit

    def value(self, index, args, ops):
        f = self.derivative(tuple(index))
        env = dict(zip(self.names, args))
        terms = f.run(env, {}, ops)
        total = terms[0]
        for t in terms[1:]:
            total = total + t
        return total

    @property
    def rational(self) -> bool:
        return is_rational(self.body)


# ----------------------------------------------------------------- compiler


class Compiled:
    """Straight-line code for one expression, returning its top-level terms."""

    def __init__(self, expr: Expr):
        self.expr = expr
        self.consts: list[Fraction] = []
        self.names: list[str] = []
        self.opaques: list[tuple[str, tuple[int, ...]]] = []
        lines: list[str] = []
        slots: dict[Expr, str] = {}
        const_slots: dict[Fraction, int] = {}

        def emit(n: Expr) -> str:
            # iterative post-order to avoid recursion limits on deep trees
            stack = [(n, False)]
            while stack:
                node, ready = stack.pop()
                if node in slots:
                    continue
                kids = _children(node)
                if not ready:
                    stack.append((node, True))
                    stack.extend((k, False) for k in kids if k not in slots)
                    continue
                slots[node] = self._line(node, slots, lines, const_slots)
            return slots[n]

        outs = [emit(t) for t in top_terms(expr)]
        body = "\n".join("    " + ln for ln in lines) or "    pass"
        src = f"def _f(env, inst, ops, C, O):\n{body}\n    return ({', '.join(outs)},)\n"
        scope: dict = {}
        exec(compile(src, "<contactkit>", "exec"), scope)
        self._fn = scope["_f"]
        self.source = src

    def _line(self, node, slots, lines, const_slots) -> str:
        slot = f"v{len(slots)}"
        if isinstance(node, Num):
            idx = const_slots.get(node.value)
            if idx is None:
                idx = const_slots[node.value] = len(self.consts)
                self.consts.append(node.value)
            rhs = f"C[{idx}]"
        elif isinstance(node, (Var, Param)):
            self.names.append(node.name)
            rhs = f"env[{node.name!r}]"
        elif isinstance(node, Add):
            rhs = " + ".join(slots[t] for t in node.terms)
        elif isinstance(node, Mul):
            rhs = " * ".join(slots[f] for f in node.factors)
        elif isinstance(node, Pow):
            b = slots[node.base]
            x = node.exp
            if isinstance(x, Num) and x.value.denominator == 1:
                rhs = f"ops.pint({b}, {int(x.value)})"
            elif isinstance(x, Num):
                rhs = f"ops.pfrac({b}, {slots[x]})"
            else:
                rhs = f"ops.psym({b}, {slots[x]})"
        elif isinstance(node, Fn):
            rhs = f"ops.{node.kind}({slots[node.arg]})"
        elif isinstance(node, Opaque):
            k = len(self.opaques)
            self.opaques.append((node.name, node.index))
            args = ", ".join(slots[a] for a in node.args)
            rhs = f"O[{k}](({args},), ops)"
        else:
            raise TypeError(type(node))
        lines.append(f"{slot} = {rhs}")
        return slot

    def run(self, env: Mapping, inst: Mapping, ops=_FloatOps) -> tuple:
        consts = [ops.const(c) for c in self.consts]
        calls = []
        for name, index in self.opaques:
            i = inst.get(name)
            if i is None:
                raise KeyError(f"no instantiation for opaque symbol {name!r}")
            calls.append(_bind(i, index))
        try:
            return self._fn(env, inst, ops, consts, calls)
        except KeyError as exc:
            raise KeyError(f"no value for {exc.args[0]!r}") from None
        except (ZeroDivisionError, OverflowError, ValueError) as exc:
            raise DomainError(str(exc)) from None


def _bind(instance, index):
    return lambda args, ops: instance.value(index, args, ops)


def _children(n: Expr):
    if isinstance(n, Pow):
        return (n.base, n.exp)
    return n.children()


_COMPILED: dict[Expr, Compiled] = {}


def compile_expr(e: Expr) -> Compiled:
    c = _COMPILED.get(e)
    if c is None:
        if len(_COMPILED) > 4096:
            _COMPILED.clear()
        c = _COMPILED[e] = Compiled(e)
    return c


def is_rational(e: Expr) -> bool:
    """True when exact rational evaluation is possible (no transcendental kernels)."""
    for n in walk(e):
        if isinstance(n, Fn):
            return False
        if isinstance(n, Pow) and not (isinstance(n.exp, Num) and n.exp.value.denominator == 1):
            return False
    return True


def evaluate_terms(e: Expr, assignment: Mapping, instantiation: Mapping | None = None,
                   backend: str = "float") -> tuple:
    """Values of the top-level additive terms of ``e``."""
    ops = BACKENDS[backend]
    env = {str(k if isinstance(k, str) else k.name): to_backend(v, backend)
           for k, v in assignment.items()}
    return compile_expr(e).run(env, instantiation or {}, ops)


def evaluate(e: Expr, assignment: Mapping, instantiation: Mapping | None = None,
             backend: str = "float"):
    terms = evaluate_terms(e, assignment, instantiation, backend)
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    return total


def eval_numeric(e: Expr, assignment: Mapping, instantiation: Mapping | None = None) -> float:
    """Real value of ``e``; raises :class:`DomainError` outside the real domain."""
    return float(evaluate(e, assignment, instantiation, "float"))
