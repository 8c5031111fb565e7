"""Immutable expression trees with canonicalizing constructors.

Nodes are built through :func:`add`, :func:`mul`, :func:`power`, :func:`fn`
and :func:`opaque`, never through the class constructors directly.  The
constructors flatten nested sums/products, fold exact numbers, merge like
terms and like bases, and sort children by a fixed key, so two expressions
built the same way are structurally equal.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Iterator

ELEMENTARY = ("exp", "ln", "sin", "cos", "tan", "sec", "arctan", "arctanh")

# rank of each node kind in the canonical ordering
_NUM, _PARAM, _VAR, _OPAQUE, _FN, _POW, _MUL, _ADD = range(8)


class Expr:
    __slots__ = ("_hash", "_key", "_free")

    rank = -1

    def __init_subclass__(cls, **kw):
        super().__init_subclass__(**kw)
        # subclasses define __eq__, which would otherwise drop hashing
        cls.__hash__ = Expr.__hash__

    def children(self) -> tuple["Expr", ...]:
        return ()

    @property
    def key(self) -> tuple:
        k = self._key
        if k is None:
            k = self._key = self._make_key()
        return k

    def _make_key(self) -> tuple:
        raise NotImplementedError

    @property
    def free(self) -> frozenset[str]:
        """Names of the variables and parameters occurring in the tree."""
        f = self._free
        if f is None:
            acc: set[str] = set()
            for c in self.children():
                acc |= c.free
            f = self._free = frozenset(acc)
        return f

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "Expr") -> bool:
        return self.key < other.key

    # arithmetic sugar, used heavily in the upper layers
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, neg(as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return mul(self, power(as_expr(other), MINUS_ONE))

    def __rtruediv__(self, other):
        return mul(as_expr(other), power(self, MINUS_ONE))

    def __pow__(self, other):
        return power(self, as_expr(other))

    def __neg__(self):
        return neg(self)

    def __repr__(self) -> str:
        from .printing import to_text

        return f"Expr({to_text(self)!r})"

    def __str__(self) -> str:
        from .printing import to_text

        return to_text(self)

    def __reduce__(self):
        # rebuild through the printer-independent constructor path
        return (_rebuild, (type(self).__name__, self._state()))

    def _state(self):
        raise NotImplementedError


class Num(Expr):
    __slots__ = ("value",)
    rank = _NUM

    def __init__(self, value: Fraction):
        self.value = value
        self._hash = hash(("N", value))
        self._key = None
        self._free = frozenset()

    def _make_key(self):
        return (_NUM, self.value)

    def __eq__(self, other):
        return isinstance(other, Num) and self.value == other.value

    def _state(self):
        return (self.value,)


class Param(Expr):
    """A named free constant (q, p, lam, C, ...)."""

    __slots__ = ("name",)
    rank = _PARAM

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("P", name))
        self._key = None
        self._free = frozenset((name,))

    def _make_key(self):
        return (_PARAM, self.name)

    def __eq__(self, other):
        return isinstance(other, Param) and self.name == other.name

    def _state(self):
        return (self.name,)


class Var(Expr):
    """A jet coordinate (t, x, u, u_x, ...) or an auxiliary variable."""

    __slots__ = ("name",)
    rank = _VAR

    def __init__(self, name: str):
        self.name = name
        self._hash = hash(("V", name))
        self._key = None
        self._free = frozenset((name,))

    def _make_key(self):
        return (_VAR, self.name)

    def __eq__(self, other):
        return isinstance(other, Var) and self.name == other.name

    def _state(self):
        return (self.name,)


class Add(Expr):
    __slots__ = ("terms",)
    rank = _ADD

    def __init__(self, terms: tuple[Expr, ...]):
        self.terms = terms
        self._hash = hash(("A", terms))
        self._key = None
        self._free = None

    def children(self):
        return self.terms

    def _make_key(self):
        return (_ADD, tuple(t.key for t in self.terms))

    def __eq__(self, other):
        return (
            isinstance(other, Add)
            and self._hash == other._hash
            and self.terms == other.terms
        )

    def _state(self):
        return (self.terms,)


class Mul(Expr):
    """Product; an exact coefficient other than 1 is stored first."""

    __slots__ = ("factors",)
    rank = _MUL

    def __init__(self, factors: tuple[Expr, ...]):
        self.factors = factors
        self._hash = hash(("M", factors))
        self._key = None
        self._free = None

    def children(self):
        return self.factors

    def _make_key(self):
        return (_MUL, tuple(f.key for f in self.factors))

    def __eq__(self, other):
        return (
            isinstance(other, Mul)
            and self._hash == other._hash
            and self.factors == other.factors
        )

    def _state(self):
        return (self.factors,)


class Pow(Expr):
    __slots__ = ("base", "exp")
    rank = _POW

    def __init__(self, base: Expr, exp: Expr):
        self.base = base
        self.exp = exp
        self._hash = hash(("W", base, exp))
        self._key = None
        self._free = None

    def children(self):
        return (self.base, self.exp)

    def _make_key(self):
        return (_POW, self.base.key, self.exp.key)

    def __eq__(self, other):
        return (
            isinstance(other, Pow)
            and self._hash == other._hash
            and self.base == other.base
            and self.exp == other.exp
        )

    def _state(self):
        return (self.base, self.exp)


class Fn(Expr):
    """Elementary function application: exp, ln, sin, cos, tan, sec, arctan, arctanh."""

    __slots__ = ("kind", "arg")
    rank = _FN

    def __init__(self, kind: str, arg: Expr):
        self.kind = kind
        self.arg = arg
        self._hash = hash(("F", kind, arg))
        self._key = None
        self._free = None

    def children(self):
        return (self.arg,)

    def _make_key(self):
        return (_FN, self.kind, self.arg.key)

    def __eq__(self, other):
        return (
            isinstance(other, Fn)
            and self._hash == other._hash
            and self.kind == other.kind
            and self.arg == other.arg
        )

    def _state(self):
        return (self.kind, self.arg)


class Opaque(Expr):
    """Application of an arbitrary function symbol, differentiated ``index`` times.

    ``index[i]`` counts derivatives with respect to the i-th argument slot.
    """

    __slots__ = ("name", "index", "args")
    rank = _OPAQUE

    def __init__(self, name: str, index: tuple[int, ...], args: tuple[Expr, ...]):
        self.name = name
        self.index = index
        self.args = args
        self._hash = hash(("O", name, index, args))
        self._key = None
        self._free = None

    def children(self):
        return self.args

    def _make_key(self):
        return (_OPAQUE, self.name, self.index, tuple(a.key for a in self.args))

    def __eq__(self, other):
        return (
            isinstance(other, Opaque)
            and self._hash == other._hash
            and self.name == other.name
            and self.index == other.index
            and self.args == other.args
        )

    def _state(self):
        return (self.name, self.index, self.args)


def _rebuild(kind: str, state):
    return {
        "Num": Num,
        "Param": Param,
        "Var": Var,
        "Add": Add,
        "Mul": Mul,
        "Pow": Pow,
        "Fn": Fn,
        "Opaque": Opaque,
    }[kind](*state)


ZERO = Num(Fraction(0))
ONE = Num(Fraction(1))
MINUS_ONE = Num(Fraction(-1))
HALF = Num(Fraction(1, 2))


def num(value) -> Num:
    if isinstance(value, Num):
        return value
    if isinstance(value, float):
        raise TypeError("floating-point values are not allowed in expressions")
    return Num(Fraction(value))


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return num(value)


def is_num(e: Expr, value=None) -> bool:
    if not isinstance(e, Num):
        return False
    return value is None or e.value == value


def is_integer_num(e: Expr) -> bool:
    return isinstance(e, Num) and e.value.denominator == 1


# ---------------------------------------------------------------- constructors


def split_coeff(e: Expr) -> tuple[Fraction, Expr]:
    """Split ``c * rest`` into ``(c, rest)`` with ``rest`` free of a leading number."""
    if isinstance(e, Num):
        return e.value, ONE
    if isinstance(e, Mul) and isinstance(e.factors[0], Num):
        rest = e.factors[1:]
        return e.factors[0].value, (rest[0] if len(rest) == 1 else Mul(rest))
    return Fraction(1), e


def _scale(c: Fraction, rest: Expr) -> Expr:
    if c == 1:
        return rest
    if rest is ONE or is_num(rest, 1):
        return Num(c)
    if isinstance(rest, Mul):
        return Mul((Num(c),) + rest.factors)
    return Mul((Num(c), rest))


def add(*terms: Expr) -> Expr:
    const = Fraction(0)
    coeffs: dict[Expr, Fraction] = {}
    stack = list(terms)
    stack.reverse()
    while stack:
        t = stack.pop()
        if isinstance(t, Num):
            const += t.value
            continue
        if isinstance(t, Add):
            stack.extend(reversed(t.terms))
            continue
        c, rest = split_coeff(t)
        coeffs[rest] = coeffs.get(rest, Fraction(0)) + c
    items = [(r, c) for r, c in coeffs.items() if c != 0]
    items.sort(key=lambda rc: rc[0].key)
    out = [_scale(c, r) for r, c in items]
    if const != 0:
        out.insert(0, Num(const))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return Add(tuple(out))


def neg(e: Expr) -> Expr:
    return mul(MINUS_ONE, e)


def sub(a: Expr, b: Expr) -> Expr:
    return add(a, neg(b))


def mul(*factors: Expr) -> Expr:
    coeff = Fraction(1)
    exps: dict[Expr, list[Expr]] = {}
    stack = list(factors)
    stack.reverse()
    while stack:
        f = stack.pop()
        if isinstance(f, Num):
            coeff *= f.value
            if coeff == 0:
                return ZERO
            continue
        if isinstance(f, Mul):
            stack.extend(reversed(f.factors))
            continue
        if isinstance(f, Pow):
            exps.setdefault(f.base, []).append(f.exp)
        else:
            exps.setdefault(f, []).append(ONE)
    if coeff == 0:
        return ZERO
    out: list[Expr] = []
    again = False
    for base, es in exps.items():
        e = es[0] if len(es) == 1 else add(*es)
        p = power(base, e)
        if isinstance(p, Num):
            coeff *= p.value
            if coeff == 0:
                return ZERO
        elif isinstance(p, Mul):
            again = True
            out.append(p)
        else:
            out.append(p)
    if again:
        return mul(Num(coeff), *out)
    out.sort(key=lambda f: f.key)
    if coeff != 1:
        out.insert(0, Num(coeff))
    if not out:
        return Num(coeff)
    if len(out) == 1:
        return out[0]
    return Mul(tuple(out))


def _exact_root(v: Fraction, q: int) -> Fraction | None:
    if v < 0:
        if q % 2 == 0:
            return None
        r = _exact_root(-v, q)
        return None if r is None else -r

    def iroot(n: int) -> int | None:
        if n in (0, 1):
            return n
        r = round(n ** (1.0 / q))
        for cand in (r - 1, r, r + 1):
            if cand >= 0 and cand**q == n:
                return cand
        return None

    a, b = iroot(v.numerator), iroot(v.denominator)
    if a is None or b is None:
        return None
    return Fraction(a, b)


def power(base: Expr, exp: Expr) -> Expr:
    if isinstance(exp, Num):
        ev = exp.value
        if ev == 0:
            return ONE
        if ev == 1:
            return base
        if isinstance(base, Num):
            bv = base.value
            if ev.denominator == 1:
                if bv == 0 and ev < 0:
                    raise ZeroDivisionError("0 raised to a negative power")
                return Num(bv ** int(ev))
            if bv == 0:
                return ZERO
            if bv == 1:
                return ONE
            if bv > 0:
                r = _exact_root(bv, ev.denominator)
                if r is not None:
                    return Num(r ** ev.numerator)
            return Pow(base, exp)
        if ev.denominator == 1:
            if isinstance(base, Pow):
                return power(base.base, mul(base.exp, exp))
            if isinstance(base, Mul):
                return mul(*(power(f, exp) for f in base.factors))
        return Pow(base, exp)
    if isinstance(base, Num) and base.value == 1:
        return ONE
    return Pow(base, exp)


def sqrt(e: Expr) -> Expr:
    return power(e, HALF)


def fn(kind: str, arg: Expr) -> Expr:
    if kind == "sqrt":
        return sqrt(arg)
    if kind not in ELEMENTARY:
        raise ValueError(f"unknown elementary function {kind!r}")
    if isinstance(arg, Num) and arg.value == 0:
        if kind in ("sin", "tan", "arctan", "arctanh"):
            return ZERO
        if kind in ("exp", "cos", "sec"):
            return ONE
    if kind == "ln" and isinstance(arg, Num) and arg.value == 1:
        return ZERO
    return Fn(kind, arg)


def opaque(name: str, args: Iterable[Expr], index: Iterable[int] | None = None) -> Opaque:
    args = tuple(args)
    idx = tuple(index) if index is not None else (0,) * len(args)
    if len(idx) != len(args):
        raise ValueError("derivative multi-index length must equal the arity")
    return Opaque(name, idx, args)


def var(name: str) -> Var:
    return Var(name)


def param(name: str) -> Param:
    return Param(name)


# ------------------------------------------------------------------- traversal


def walk(e: Expr) -> Iterator[Expr]:
    """Pre-order traversal visiting shared subtrees once."""
    seen: set[int] = set()
    stack = [e]
    while stack:
        n = stack.pop()
        if id(n) in seen:
            continue
        seen.add(id(n))
        yield n
        stack.extend(n.children())


def free_vars(e: Expr) -> set[str]:
    return {n.name for n in walk(e) if isinstance(n, Var)}


def free_params(e: Expr) -> set[str]:
    return {n.name for n in walk(e) if isinstance(n, Param)}


def opaque_apps(e: Expr) -> set[Opaque]:
    return {n for n in walk(e) if isinstance(n, Opaque)}


def opaque_names(e: Expr) -> set[str]:
    return {n.name for n in walk(e) if isinstance(n, Opaque)}


def has_elementary(e: Expr) -> bool:
    return any(isinstance(n, Fn) for n in walk(e))


def count_nodes(e: Expr) -> int:
    return sum(1 for _ in walk(e))


def top_terms(e: Expr) -> tuple[Expr, ...]:
    return e.terms if isinstance(e, Add) else (e,)
