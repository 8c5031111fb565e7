"""Zero testing: symbolic normal form first, randomized probing second.

Probing replaces every opaque symbol by a fresh random polynomial per
sample and evaluates at random rational points.  Rational residuals are
evaluated exactly; anything else in double precision, with borderline
samples re-evaluated in :mod:`mpmath`.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath

from .core import ZERO, Expr, Fn, Num, Opaque, Param, Pow, Var, walk
from .numeric import (
    DomainError,
    ExprInstance,
    NotExact,
    PolyInstance,
    evaluate_terms,
    is_rational,
)
from .simplify import rewrite_trig, simplify

PROVEN_ZERO = "ProvenZero"
EXACT_PROBE_ZERO = "ExactProbeZero"
NUMERIC_ZERO = "NumericZero"
PROVEN_NONZERO = "ProvenNonzero"
INCONCLUSIVE = "Inconclusive"

ZERO_KINDS = (PROVEN_ZERO, EXACT_PROBE_ZERO, NUMERIC_ZERO)
# weakest evidence last
_STRENGTH = {PROVEN_ZERO: 0, EXACT_PROBE_ZERO: 1, NUMERIC_ZERO: 2}

MP_DIGITS = 50


@dataclass(frozen=True)
class ProbeConfig:
    seed: int = 7
    samples: int = 32
    opaque_poly_degree: int = 4
    tol_rel: float = 1e-8
    max_domain_retries: int = 200

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if not self.tol_rel > 0:
            raise ValueError("tol_rel must be positive")


@dataclass
class ZeroVerdict:
    kind: str
    witness: dict | None = None
    samples: int = 0
    max_residual: float | None = None
    detail: str = ""

    @property
    def is_zero(self) -> bool:
        return self.kind in ZERO_KINDS

    @property
    def is_nonzero(self) -> bool:
        return self.kind == PROVEN_NONZERO

    def __str__(self):
        extra = ""
        if self.max_residual is not None:
            extra = f" max_residual={self.max_residual:.3g}"
        if self.witness:
            pts = ", ".join(f"{k}={v}" for k, v in sorted(self.witness.items()))
            extra += f" witness[{pts}]"
        return f"{self.kind}{extra}"


def weakest(verdicts) -> ZeroVerdict:
    """Combine zero-class verdicts, keeping the weakest evidence."""
    out = ZeroVerdict(PROVEN_ZERO)
    best = -1
    total = 0
    worst_res = None
    for v in verdicts:
        if not v.is_zero:
            return v
        total += v.samples
        if v.max_residual is not None:
            worst_res = v.max_residual if worst_res is None else max(worst_res, v.max_residual)
        if _STRENGTH[v.kind] > best:
            best = _STRENGTH[v.kind]
            out = v
    return ZeroVerdict(out.kind, None, total, worst_res, out.detail)


@dataclass
class ProbeDomain:
    """What the sampler must respect.

    ``nonzero`` and ``positive`` are side conditions evaluated at each sample
    (after instantiation); ``ranges`` fixes open sampling intervals for named
    variables or parameters; ``instances`` pins opaque symbols to concrete
    functions instead of random polynomials.
    """

    nonzero: tuple[Expr, ...] = ()
    positive: tuple[Expr, ...] = ()
    ranges: dict[str, tuple[Fraction, Fraction]] = field(default_factory=dict)
    instances: dict[str, object] = field(default_factory=dict)

    def merged(self, other: "ProbeDomain | None") -> "ProbeDomain":
        if other is None:
            return self
        return ProbeDomain(
            self.nonzero + other.nonzero,
            self.positive + other.positive,
            {**self.ranges, **other.ranges},
            {**self.instances, **other.instances},
        )


def task_rng(seed: int, task: str = "") -> random.Random:
    """Independent stream per (seed, task) so scheduling never changes results."""
    h = hashlib.sha256(f"{seed}:{task}".encode()).digest()
    return random.Random(int.from_bytes(h[:8], "big"))


# ----------------------------------------------------------------- sampling


def _positive_names(exprs) -> set[str]:
    out = set()
    for e in exprs:
        for n in walk(e):
            base = None
            if isinstance(n, Pow) and not (isinstance(n.exp, Num) and n.exp.value.denominator == 1):
                base = n.base
            elif isinstance(n, Fn) and n.kind == "ln":
                base = n.arg
            if isinstance(base, (Var, Param)):
                out.add(base.name)
    return out


def _opaque_arities(exprs) -> dict[str, int]:
    out: dict[str, int] = {}
    for e in exprs:
        for n in walk(e):
            if isinstance(n, Opaque):
                out[n.name] = len(n.args)
    return out


def _names(exprs) -> list[str]:
    acc: set[str] = set()
    for e in exprs:
        acc |= e.free
    return sorted(acc)


def _rand_value(rng: random.Random, positive: bool, span: tuple | None) -> Fraction:
    d = rng.randint(1, 7)
    if span is not None:
        lo, hi = span
        # strictly inside the open interval
        k = rng.randint(1, 4 * d - 1)
        return Fraction(lo) + (Fraction(hi) - Fraction(lo)) * Fraction(k, 4 * d)
    if positive:
        return Fraction(rng.randint(1, 3 * d), d)
    return Fraction(rng.randint(-3 * d, 3 * d), d)


class _Sampler:
    def __init__(self, exprs, cfg: ProbeConfig, domain: ProbeDomain, rng):
        self.cfg = cfg
        self.domain = domain
        self.rng = rng
        side = list(domain.nonzero) + list(domain.positive)
        self.names = _names(list(exprs) + side)
        self.positive = _positive_names(list(exprs) + side)
        self.arities = _opaque_arities(list(exprs) + side)
        self.first = True

    def draw(self):
        if self.first:
            # first point: all ones, a readable witness for simple cases
            self.first = False
            point = {
                n: (_rand_value(self.rng, False, self.domain.ranges[n])
                    if n in self.domain.ranges else Fraction(1))
                for n in self.names
            }
        else:
            point = {
                n: _rand_value(self.rng, n in self.positive, self.domain.ranges.get(n))
                for n in self.names
            }
        inst = {}
        for name, arity in self.arities.items():
            fixed = self.domain.instances.get(name)
            inst[name] = fixed if fixed is not None else PolyInstance.random(
                self.rng, arity, self.cfg.opaque_poly_degree)
        return point, inst

    def admissible(self, point, inst) -> bool:
        for c in self.domain.nonzero:
            v = _value(c, point, inst)
            if v is None or abs(v) < 1e-9:
                return False
        for c in self.domain.positive:
            v = _value(c, point, inst)
            if v is None or not v > 1e-12:
                return False
        return True


def _value(e: Expr, point, inst):
    try:
        backend = "exact" if _exact_ok(e, inst) else "float"
        terms = evaluate_terms(e, point, inst, backend)
    except (DomainError, NotExact):
        return None
    return float(sum(terms[1:], terms[0]))


def _exact_ok(e: Expr, inst) -> bool:
    if not is_rational(e):
        return False
    return all(getattr(i, "rational", False) for i in inst.values())


# --------------------------------------------------------------------- probe


def probe(e: Expr, cfg: ProbeConfig, domain: ProbeDomain | None = None,
          task: str = "") -> ZeroVerdict:
    """Randomized zero test of ``e`` without the symbolic pre-pass."""
    domain = domain or ProbeDomain()
    rng = task_rng(cfg.seed, task)
    sampler = _Sampler([e], cfg, domain, rng)
    retries = 0
    done = 0
    exact_all = True
    max_res = 0.0
    while done < cfg.samples:
        point, inst = sampler.draw()
        if not sampler.admissible(point, inst):
            retries += 1
            if retries > cfg.max_domain_retries:
                return _inconclusive(done, retries, max_res)
            continue
        exact = _exact_ok(e, inst)
        try:
            terms = evaluate_terms(e, point, inst, "exact" if exact else "float")
        except DomainError:
            retries += 1
            if retries > cfg.max_domain_retries:
                return _inconclusive(done, retries, max_res)
            continue
        done += 1
        if exact:
            r = sum(terms[1:], terms[0])
            if r != 0:
                return ZeroVerdict(PROVEN_NONZERO, dict(point), done, float(abs(r)),
                                   "exact evaluation is nonzero")
            continue
        exact_all = False
        r = float(sum(terms[1:], terms[0]))
        m = max(abs(float(t)) for t in terms)
        thr = cfg.tol_rel * m
        if abs(r) <= thr:
            max_res = max(max_res, abs(r) / m if m else 0.0)
            continue
        # borderline or failing in double precision: settle in high precision
        verdict = _mp_check(e, point, inst, cfg)
        if verdict is None:
            retries += 1
            done -= 1
            if retries > cfg.max_domain_retries:
                return _inconclusive(done, retries, max_res)
            continue
        ok, rel = verdict
        if not ok:
            return ZeroVerdict(PROVEN_NONZERO, dict(point), done, rel,
                               "residual above tolerance")
        max_res = max(max_res, rel)
    if exact_all:
        return ZeroVerdict(EXACT_PROBE_ZERO, None, done, 0.0)
    return ZeroVerdict(NUMERIC_ZERO, None, done, max_res)


def _mp_check(e, point, inst, cfg):
    with mpmath.workdps(MP_DIGITS):
        try:
            terms = evaluate_terms(e, point, inst, "mp")
        except DomainError:
            return None
        r = abs(mpmath.fsum(terms))
        m = max(abs(t) for t in terms)
    rel = float(r / m) if m else 0.0
    return rel <= cfg.tol_rel, rel


def _inconclusive(done, retries, max_res):
    return ZeroVerdict(INCONCLUSIVE, None, done, max_res,
                       f"domain sampling exhausted after {retries} rejected points")


# ------------------------------------------------------------------- is_zero


# symbolic simplification is skipped for larger trees; probing decides
SIMPLIFY_NODE_LIMIT = 20_000


def symbolic_zero(e: Expr) -> tuple[bool, Expr]:
    """Try the rewrite set; returns ``(proved, reduced)``."""
    from .core import count_nodes

    if e == ZERO:
        return True, e
    if count_nodes(e) > SIMPLIFY_NODE_LIMIT:
        return False, e
    s = simplify(e)
    if s == ZERO:
        return True, s
    if any(isinstance(n, Fn) and n.kind in ("sec", "tan") for n in walk(s)):
        s2 = simplify(rewrite_trig(s))
        if s2 == ZERO:
            return True, s2
    return False, s


def is_zero(e: Expr, cfg: ProbeConfig | None = None, domain: ProbeDomain | None = None,
            task: str = "") -> ZeroVerdict:
    """Decide whether ``e`` vanishes identically (for arbitrary opaque symbols)."""
    cfg = cfg or ProbeConfig()
    proved, reduced = symbolic_zero(e)
    if proved:
        return ZeroVerdict(PROVEN_ZERO)
    return probe(reduced, cfg, domain, task)


def instance_from_text(text: str, arity: int) -> ExprInstance:
    """Parse a body in placeholders ``y1..ym`` (used for pinned instantiations)."""
    from .parse import parse

    return ExprInstance(parse(text), arity)


__all__ = [
    "ProbeConfig",
    "ProbeDomain",
    "ZeroVerdict",
    "is_zero",
    "probe",
    "symbolic_zero",
    "task_rng",
    "weakest",
    "PROVEN_ZERO",
    "EXACT_PROBE_ZERO",
    "NUMERIC_ZERO",
    "PROVEN_NONZERO",
    "INCONCLUSIVE",
    "ZERO_KINDS",
]
