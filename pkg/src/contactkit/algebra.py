"""Abstract Lie algebra tables and contact-bracket realizations.

Tables are stored sparsely: ``c[(i, j)] = {k: coefficient}`` for i < j with
1-based generator indices, coefficients being expressions in the table's
parameters.  Antisymmetry is implied by the storage.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import mpmath

from .contact import as_gf, bracket
from .expr import (
    ZERO,
    Expr,
    Num,
    ProbeConfig,
    ProbeDomain,
    ZeroVerdict,
    add,
    is_zero,
    mul,
    neg,
    num,
    parse,
    simplify,
    substitute,
    sub,
    task_rng,
    to_text,
    weakest,
)
from .expr.core import as_expr
from .expr.numeric import DomainError, evaluate_terms


class UnknownTable(KeyError):
    pass


class JacobiError(ValueError):
    pass


@dataclass(frozen=True)
class ParamRange:
    """Admissible values: an interval (ends open unless flagged) minus excluded points."""

    lo: Fraction | None = None
    hi: Fraction | None = None
    exclude: tuple[Fraction, ...] = ()
    closed: tuple[bool, bool] = (False, False)

    def contains(self, v) -> bool:
        if self.lo is not None and (v < self.lo or (v == self.lo and not self.closed[0])):
            return False
        if self.hi is not None and (v > self.hi or (v == self.hi and not self.closed[1])):
            return False
        return all(v != e for e in self.exclude)

    def sampling_span(self) -> tuple[Fraction, Fraction]:
        """Open interval used when a probe has to pick a value."""
        lo = self.lo if self.lo is not None else Fraction(-3)
        hi = self.hi if self.hi is not None else Fraction(3)
        if self.hi is None and lo >= hi:
            hi = lo + 3
        if self.lo is None and lo >= hi:
            lo = hi - 3
        return lo, hi


@dataclass(frozen=True)
class StructureConstants:
    name: str
    dim: int
    c: dict = field(hash=False, compare=False)
    params: dict = field(default_factory=dict, hash=False, compare=False)

    def __post_init__(self):
        clean = {}
        for (i, j), row in self.c.items():
            if not (1 <= i <= self.dim and 1 <= j <= self.dim) or i == j:
                raise ValueError(f"{self.name}: bad index pair ({i},{j})")
            sign = 1
            if i > j:
                i, j, sign = j, i, -1
            for k, v in row.items():
                if not 1 <= k <= self.dim:
                    raise ValueError(f"{self.name}: bad target index {k}")
                v = as_expr(v) if not isinstance(v, str) else parse(v)
                v = simplify(v if sign == 1 else neg(v))
                if v != ZERO:
                    clean.setdefault((i, j), {})
                    prev = clean[(i, j)].get(k, ZERO)
                    clean[(i, j)][k] = simplify(add(prev, v))
        object.__setattr__(self, "c", clean)

    def coeff(self, i: int, j: int, k: int) -> Expr:
        if i == j:
            return ZERO
        if i < j:
            return self.c.get((i, j), {}).get(k, ZERO)
        return neg(self.c.get((j, i), {}).get(k, ZERO))

    def row(self, i: int, j: int) -> dict[int, Expr]:
        if i < j:
            return dict(self.c.get((i, j), {}))
        return {k: neg(v) for k, v in self.c.get((j, i), {}).items()}

    def bind(self, **values) -> "StructureConstants":
        """Substitute numbers (or expressions) for parameters."""
        table = {k: (v if isinstance(v, Expr) else num(Fraction(v))) for k, v in values.items()}
        for k, v in table.items():
            rng = self.params.get(k)
            if isinstance(v, Num) and rng is not None and not rng.contains(v.value):
                raise ValueError(f"{self.name}: {k}={v} outside the admissible range")
        c = {ij: {k: substitute(e, table) for k, e in row.items()} for ij, row in self.c.items()}
        rest = {k: r for k, r in self.params.items() if k not in table}
        return StructureConstants(self.name, self.dim, c, rest)

    def relations(self) -> list[str]:
        out = []
        for (i, j), row in sorted(self.c.items()):
            rhs = " + ".join(f"({to_text(v)})*g{k}" for k, v in sorted(row.items()))
            out.append(f"[g{i},g{j}] = {rhs}")
        return out

    def same_constants(self, other: "StructureConstants") -> bool:
        if self.dim != other.dim:
            return False
        keys = set(self.c) | set(other.c)
        for ij in keys:
            a, b = self.c.get(ij, {}), other.c.get(ij, {})
            for k in set(a) | set(b):
                if simplify(sub(a.get(k, ZERO), b.get(k, ZERO))) != ZERO:
                    return False
        return True


# ------------------------------------------------------------------ tables


def _table(name: str, dim: int, rows: dict, params: dict | None = None) -> StructureConstants:
    c = {}
    for (i, j), targets in rows.items():
        c[(i, j)] = {k: parse(v) if isinstance(v, str) else num(v) for k, v in targets.items()}
    return StructureConstants(name, dim, c, params or {})


def _rng(lo=None, hi=None, nonzero=False, closed=(False, False)):
    return ParamRange(None if lo is None else Fraction(lo), None if hi is None else Fraction(hi),
                      (Fraction(0),) if nonzero else (), closed)


def _build_tables() -> dict[str, StructureConstants]:
    T = {}
    T["A1"] = _table("A1", 1, {})
    T["A2.1"] = _table("A2.1", 2, {})
    T["A2.2"] = _table("A2.2", 2, {(1, 2): {2: 1}})
    T["A3.1"] = _table("A3.1", 3, {})
    T["A3.2"] = _table("A3.2", 3, {(1, 2): {2: 1}})
    T["A3.3"] = _table("A3.3", 3, {(2, 3): {1: 1}})
    T["A3.4"] = _table("A3.4", 3, {(1, 3): {1: 1}, (2, 3): {1: 1, 2: 1}})
    T["A3.5"] = _table("A3.5", 3, {(1, 3): {1: 1}, (2, 3): {2: 1}})
    T["A3.6"] = _table("A3.6", 3, {(1, 3): {1: 1}, (2, 3): {2: -1}})
    T["A3.7"] = _table("A3.7", 3, {(1, 3): {1: 1}, (2, 3): {2: "q"}}, {"q": _rng(-1, 1, nonzero=True)})
    T["A3.8"] = _table("A3.8", 3, {(1, 3): {2: -1}, (2, 3): {1: 1}})
    T["A3.9"] = _table("A3.9", 3, {(1, 3): {1: "q", 2: -1}, (2, 3): {1: 1, 2: "q"}},
                       {"q": _rng(0)})
    T["A4.1"] = _table("A4.1", 4, {(2, 4): {1: 1}, (3, 4): {2: 1}})
    T["A4.2"] = _table("A4.2", 4, {(1, 4): {1: "q"}, (2, 4): {2: 1}, (3, 4): {2: 1, 3: 1}},
                       {"q": _rng(nonzero=True)})
    T["A4.3"] = _table("A4.3", 4, {(1, 4): {1: 1}, (3, 4): {2: 1}})
    T["A4.4"] = _table("A4.4", 4, {(1, 4): {1: 1}, (2, 4): {1: 1, 2: 1}, (3, 4): {2: 1, 3: 1}})
    # -1 <= p <= q <= 1, pq != 0; the coupling p <= q is not enforced by the table
    T["A4.5"] = _table("A4.5", 4, {(1, 4): {1: 1}, (2, 4): {2: "q"}, (3, 4): {3: "p"}},
                       {"q": _rng(-1, 1, True, (True, True)), "p": _rng(-1, 1, True, (True, True))})
    T["A4.6"] = _table("A4.6", 4, {(1, 4): {1: "q"}, (2, 4): {2: "p", 3: -1},
                                   (3, 4): {2: 1, 3: "p"}},
                       {"q": _rng(nonzero=True), "p": _rng(0, closed=(True, False))})
    T["A4.7"] = _table("A4.7", 4, {(2, 3): {1: 1}, (1, 4): {1: 2}, (2, 4): {2: 1},
                                   (3, 4): {2: 1, 3: 1}})
    T["A4.8"] = _table("A4.8", 4, {(2, 3): {1: 1}, (1, 4): {1: "1+q"}, (2, 4): {2: 1},
                                   (3, 4): {3: "q"}},
                       {"q": _rng(-1, 1, closed=(True, True))})
    T["A4.9"] = _table("A4.9", 4, {(2, 3): {1: 1}, (1, 4): {1: "2*q"}, (2, 4): {2: "q", 3: -1},
                                   (3, 4): {2: 1, 3: "q"}},
                       {"q": _rng(0, closed=(True, False))})
    T["A4.10"] = _table("A4.10", 4, {(1, 3): {1: 1}, (2, 3): {2: 1}, (1, 4): {2: -1},
                                     (2, 4): {1: 1}})
    T["sl2R"] = _table("sl2R", 3, {(1, 2): {1: 1}, (1, 3): {2: 2}, (2, 3): {3: 1}})
    T["so3"] = _table("so3", 3, {(1, 2): {3: 1}, (1, 3): {2: -1}, (2, 3): {1: 1}})
    T["so22"] = direct_sum(T["sl2R"], T["sl2R"], name="so22")
    T["2A2.2"] = direct_sum(T["A2.2"], T["A2.2"], name="2A2.2")
    T["4A1"] = direct_sum(T["A3.1"], T["A1"], name="4A1")
    T["sl2R|A2.1"] = semidirect(
        T["sl2R"], T["A2.1"],
        {(1, 2): {1: 1}, (2, 1): {1: "-1/2"}, (2, 2): {2: "1/2"}, (3, 1): {2: -1}},
        name="sl2R|A2.1",
    )
    T["so3|A3.1"] = semidirect(
        T["so3"], T["A3.1"],
        {(1, 2): {3: 1}, (1, 3): {2: -1}, (2, 1): {3: -1}, (2, 3): {1: 1},
         (3, 1): {2: 1}, (3, 2): {1: -1}},
        name="so3|A3.1",
    )
    return T


def direct_sum(a: StructureConstants, b: StructureConstants, name: str | None = None
               ) -> StructureConstants:
    """Block sum; generators of ``b`` are renumbered after those of ``a``."""
    shift = a.dim
    c = {ij: dict(row) for ij, row in a.c.items()}
    for (i, j), row in b.c.items():
        c[(i + shift, j + shift)] = {k + shift: v for k, v in row.items()}
    clash = set(a.params) & set(b.params)
    if clash:
        raise ValueError(f"parameter names clash in direct sum: {sorted(clash)}")
    return StructureConstants(name or f"{a.name}+{b.name}", a.dim + b.dim, c,
                              {**a.params, **b.params})


def semidirect(levi: StructureConstants, radical: StructureConstants, action: dict,
               name: str | None = None) -> StructureConstants:
    """Levi factor acting on a radical.

    ``action[(s, r)] = {r2: coeff}`` gives ``[levi_s, radical_r]`` in terms of
    radical generators (all indices local to each factor).  Raises
    :class:`JacobiError` when the result is not a Lie algebra.
    """
    out = direct_sum(levi, radical, name=name)
    c = {ij: dict(row) for ij, row in out.c.items()}
    shift = levi.dim
    for (s, r), row in action.items():
        c[(s, r + shift)] = {k + shift: parse(v) if isinstance(v, str) else num(v)
                             for k, v in row.items()}
    sc = StructureConstants(out.name, out.dim, c, out.params)
    bad = [ijk for ijk, v in jacobi_check(sc).items() if not v.is_zero]
    if bad:
        raise JacobiError(f"{sc.name}: Jacobi identity fails for triples {bad}")
    return sc


_TABLES: dict[str, StructureConstants] | None = None


def builtin_names() -> list[str]:
    return list(_tables())


def _tables():
    global _TABLES
    if _TABLES is None:
        _TABLES = _build_tables()
    return _TABLES


def builtin_table(name: str) -> StructureConstants:
    """Named table; ``A+B`` builds the direct sum of two known tables."""
    tables = _tables()
    if name in tables:
        return tables[name]
    if "+" in name:
        head, _, tail = name.partition("+")
        if head in tables:
            return direct_sum(tables[head], builtin_table(tail), name=name)
    raise UnknownTable(f"unknown algebra {name!r}; known: {', '.join(tables)}")


# ------------------------------------------------------------------ Jacobi


def jacobi_expr(sc: StructureConstants, i: int, j: int, k: int, l: int) -> Expr:
    terms = []
    for m in range(1, sc.dim + 1):
        for a, b, cc in ((i, j, k), (j, k, i), (k, i, j)):
            terms.append(mul(sc.coeff(a, b, m), sc.coeff(m, cc, l)))
    return add(*terms)


def jacobi_check(sc: StructureConstants, cfg: ProbeConfig | None = None
                 ) -> dict[tuple[int, int, int], ZeroVerdict]:
    """Jacobi verdict for every triple i < j < k, symbolic in the parameters."""
    cfg = cfg or ProbeConfig()
    out = {}
    for i, j, k in combinations(range(1, sc.dim + 1), 3):
        parts = []
        for l in range(1, sc.dim + 1):
            e = jacobi_expr(sc, i, j, k, l)
            parts.append(is_zero(e, cfg, task=f"jacobi:{sc.name}:{i}{j}{k}:{l}"))
        out[(i, j, k)] = weakest(parts)
    return out


# ------------------------------------------------------------ realizations


@dataclass
class Realization:
    table: StructureConstants
    generators: list
    bindings: dict = field(default_factory=dict)
    domain: ProbeDomain | None = None

    def __post_init__(self):
        self.generators = [as_gf(g) for g in self.generators]
        if len(self.generators) != self.table.dim:
            raise ValueError(
                f"{self.table.name} has dimension {self.table.dim}, "
                f"got {len(self.generators)} generators"
            )

    def bound_table(self) -> StructureConstants:
        return self.table.bind(**self.bindings) if self.bindings else self.table


def closure_residual(r: Realization, i: int, j: int, table: StructureConstants | None = None
                     ) -> Expr:
    table = table or r.bound_table()
    gi, gj = r.generators[i - 1].expr, r.generators[j - 1].expr
    rhs = add(*(mul(v, r.generators[k - 1].expr) for k, v in table.row(i, j).items()))
    return sub(bracket(gi, gj).expr, rhs)


def check_realization(r: Realization, cfg: ProbeConfig | None = None, task: str = ""
                      ) -> dict[tuple[int, int], ZeroVerdict]:
    """Verdict of ``[g_i, g_j] - sum_k c_ij^k g_k`` for every pair i < j."""
    cfg = cfg or ProbeConfig()
    table = r.bound_table()
    out = {}
    for i, j in combinations(range(1, table.dim + 1), 2):
        e = closure_residual(r, i, j, table)
        out[(i, j)] = is_zero(e, cfg, r.domain, task=f"{task}:closure:{i},{j}")
    return out


# ------------------------------------------------------- structure matching


class NotClosed(ValueError):
    def __init__(self, pair, detail=""):
        self.pair = pair
        super().__init__(f"bracket of generators {pair} is not in their span{detail}")


class DegenerateSampling(ValueError):
    pass


def _sample_values(exprs, cfg, domain, rng, count):
    """Evaluate every expression at ``count`` shared random points."""
    from .expr.zero import _Sampler

    sampler = _Sampler(exprs, cfg, domain or ProbeDomain(), rng)
    rows = []
    tries = 0
    while len(rows) < count:
        tries += 1
        if tries > count + cfg.max_domain_retries:
            raise DegenerateSampling("too many rejected sample points")
        point, inst = sampler.draw()
        if not sampler.admissible(point, inst):
            continue
        try:
            with mpmath.workdps(40):
                vals = [mpmath.fsum(evaluate_terms(e, point, inst, "mp")) for e in exprs]
        except DomainError:
            continue
        rows.append(vals)
    return rows


def _solve_least_squares(A, b):
    with mpmath.workdps(40):
        M = mpmath.matrix(A)
        v = mpmath.matrix(b)
        sol = mpmath.qr_solve(M, v)[0]
        return [sol[i] for i in range(len(A[0]))]


def fit_structure(gens, cfg: ProbeConfig | None = None, domain: ProbeDomain | None = None,
                  name: str = "matched", max_denominator: int = 1000):
    """Recover constants ``c_ij^k`` for the span of ``gens``.

    Brackets and generators are evaluated at shared random points; each bracket
    is fitted by least squares, rounded to nearby rationals and then confirmed
    with :func:`is_zero`.  Returns the table and the per-pair verdicts.
    """
    cfg = cfg or ProbeConfig()
    gens = [as_gf(g).expr for g in gens]
    n = len(gens)
    pairs = list(combinations(range(1, n + 1), 2))
    brackets = [bracket(gens[i - 1], gens[j - 1]).expr for i, j in pairs]
    rng = task_rng(cfg.seed, f"match:{name}")
    npts = 2 * n + 6
    rows = _sample_values(gens + brackets, cfg, domain, rng, npts)
    basis = [r[:n] for r in rows]
    with mpmath.workdps(40):
        svals = mpmath.svd_r(mpmath.matrix(basis), compute_uv=False)
        sv = [abs(svals[i]) for i in range(n)]
        if min(sv) < max(sv) * mpmath.mpf(10) ** -20:
            raise DegenerateSampling("generators look linearly dependent")
    c = {}
    verdicts = {}
    for col, ((i, j), br) in enumerate(zip(pairs, brackets)):
        if br == ZERO:
            verdicts[(i, j)] = ZeroVerdict("ProvenZero")
            continue
        coeffs = _solve_least_squares(basis, [r[n + col] for r in rows])
        row = {}
        for k, cv in enumerate(coeffs, start=1):
            q = Fraction(mpmath.nstr(cv, 30, strip_zeros=False)).limit_denominator(max_denominator)
            if q != 0:
                row[k] = num(q)
        resid = sub(br, add(*(mul(v, gens[k - 1]) for k, v in row.items())))
        verdicts[(i, j)] = is_zero(resid, cfg, domain, task=f"match:{name}:{i},{j}")
        if row:
            c[(i, j)] = row
    return StructureConstants(name, n, c), verdicts


def match_structure(gens, cfg: ProbeConfig | None = None, domain: ProbeDomain | None = None,
                    name: str = "matched", max_denominator: int = 1000) -> StructureConstants:
    """Like :func:`fit_structure` but raises :class:`NotClosed` on the first open pair."""
    sc, verdicts = fit_structure(gens, cfg, domain, name, max_denominator)
    for pair, v in sorted(verdicts.items()):
        if not v.is_zero:
            raise NotClosed(pair, f" ({v.kind})")
    return sc


__all__ = [
    "ParamRange",
    "StructureConstants",
    "UnknownTable",
    "JacobiError",
    "builtin_table",
    "builtin_names",
    "direct_sum",
    "semidirect",
    "jacobi_check",
    "jacobi_expr",
    "Realization",
    "closure_residual",
    "check_realization",
    "match_structure",
    "fit_structure",
    "NotClosed",
    "DegenerateSampling",
]
