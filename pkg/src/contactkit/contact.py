"""Contact vector fields, the contact bracket and contact transformations."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from .expr import (
    ZERO,
    Expr,
    ProbeConfig,
    ProbeDomain,
    SymbolTable,
    ZeroVerdict,
    add,
    diff,
    fn,
    is_zero,
    mul,
    neg,
    num,
    parse,
    power,
    simplify,
    substitute,
    sub,
    var,
)
from .jet import JET_VARS, jet_vars, restricted_x, total_t, total_x

GF_VARS = frozenset(("t", "x", "u", "u_t", "u_x"))
# coordinates of the space the contact field acts on
COORDS = ("t", "x", "u", "u_x", "u_t")

t, x, u, u_t, u_x = (var(n) for n in ("t", "x", "u", "u_t", "u_x"))


class InvalidGeneratingFunction(ValueError):
    pass


@dataclass(frozen=True)
class GeneratingFunction:
    """A function of (t, x, u, u_t, u_x) generating a contact symmetry."""

    expr: Expr

    def __post_init__(self):
        extra = jet_vars(self.expr) - GF_VARS
        if extra:
            raise InvalidGeneratingFunction(
                f"generating functions depend on t, x, u, u_t, u_x only; found {sorted(extra)}"
            )

    @classmethod
    def parse(cls, text: str, table: SymbolTable | None = None) -> "GeneratingFunction":
        return cls(parse(text, table))

    def __str__(self):
        return str(self.expr)


def as_gf(g) -> GeneratingFunction:
    if isinstance(g, GeneratingFunction):
        return g
    if isinstance(g, str):
        return GeneratingFunction.parse(g)
    return GeneratingFunction(g)


@dataclass(frozen=True)
class ContactField:
    """Coefficients of d/dt, d/dx, d/du, d/du_x, d/du_t."""

    coef_t: Expr
    coef_x: Expr
    coef_u: Expr
    coef_ux: Expr
    coef_ut: Expr

    def components(self) -> dict[str, Expr]:
        return {"t": self.coef_t, "x": self.coef_x, "u": self.coef_u,
                "u_x": self.coef_ux, "u_t": self.coef_ut}

    def apply(self, h: Expr) -> Expr:
        """Lie derivative of a function of (t, x, u, u_x, u_t)."""
        return add(*(mul(c, diff(h, v)) for v, c in self.components().items() if v in h.free))

    def simplified(self) -> "ContactField":
        return ContactField(*(simplify(c) for c in self.components().values()))

    def __sub__(self, other: "ContactField") -> "ContactField":
        a, b = self.components(), other.components()
        return ContactField(*(sub(a[k], b[k]) for k in a))

    def is_zero(self) -> bool:
        return all(simplify(c) == ZERO for c in self.components().values())


def vector_field(g) -> ContactField:
    """The contact field whose characteristic function is ``g``."""
    g = as_gf(g).expr
    g_ut, g_ux = diff(g, "u_t"), diff(g, "u_x")
    g_u = diff(g, "u")
    return ContactField(
        coef_t=neg(g_ut),
        coef_x=neg(g_ux),
        coef_u=add(g, neg(mul(u_t, g_ut)), neg(mul(u_x, g_ux))),
        coef_ux=add(diff(g, "x"), mul(u_x, g_u)),
        coef_ut=add(diff(g, "t"), mul(u_t, g_u)),
    )


def _bracket_raw(f: Expr, g: Expr) -> Expr:
    d = diff
    f_t, f_x, f_u, f_ut, f_ux = (d(f, v) for v in ("t", "x", "u", "u_t", "u_x"))
    g_t, g_x, g_u, g_ut, g_ux = (d(g, v) for v in ("t", "x", "u", "u_t", "u_x"))
    return add(
        mul(sub(mul(g_ut, f_u), mul(f_ut, g_u)), u_t),
        mul(sub(mul(g_ux, f_u), mul(f_ux, g_u)), u_x),
        mul(g_ut, f_t), neg(mul(f_ut, g_t)),
        mul(g_ux, f_x), neg(mul(f_ux, g_x)),
        mul(f, g_u), neg(mul(g, f_u)),
    )


def bracket(f, g, simplified: bool = True) -> GeneratingFunction:
    """Closed-form contact bracket ``[f, g]``."""
    out = _bracket_raw(as_gf(f).expr, as_gf(g).expr)
    return GeneratingFunction(simplify(out) if simplified else out)


def linearization(f: Expr, h: Expr) -> Expr:
    """``f_*(h) = f_{u_t} D_t h + f_u h + f_{u_x} D_x h`` with unrestricted totals."""
    return add(
        mul(diff(f, "u_t"), total_t(h)),
        mul(diff(f, "u"), h),
        mul(diff(f, "u_x"), total_x(h)),
    )


def bracket_via_star(f, g) -> Expr:
    """``g_*(f) - f_*(g)``; second-order jet terms cancel only after simplification."""
    f, g = as_gf(f).expr, as_gf(g).expr
    return sub(linearization(g, f), linearization(f, g))


def field_commutator(f, g) -> ContactField:
    """Commutator of the two contact fields on (t, x, u, u_x, u_t)."""
    vf, vg = vector_field(f), vector_field(g)
    a, b = vf.components(), vg.components()
    return ContactField(*(sub(vf.apply(b[k]), vg.apply(a[k])) for k in a))


@dataclass(frozen=True)
class SymmetryKind:
    point: bool
    evolution: bool

    @property
    def label(self) -> str:
        if self.point and self.evolution:
            return "point+evolution"
        if self.point:
            return "point"
        if self.evolution:
            return "evolution"
        return "general-contact"


def classify_kind(g, cfg: ProbeConfig | None = None,
                  domain: ProbeDomain | None = None) -> SymmetryKind:
    """Point iff all second derivatives in (u_t, u_x) vanish; evolution iff free of u_t."""
    e = as_gf(g).expr
    cfg = cfg or ProbeConfig()

    def zero(h: Expr, tag: str) -> bool:
        return is_zero(h, cfg, domain, task=f"kind:{tag}").is_zero

    evolution = zero(diff(e, "u_t"), "ut")
    point = all(
        zero(diff(diff(e, a), b), a + b)
        for a, b in (("u_t", "u_t"), ("u_t", "u_x"), ("u_x", "u_x"))
    )
    return SymmetryKind(point, evolution)


# ---------------------------------------------------------- transformations


class TransformError(ValueError):
    pass


@dataclass(frozen=True)
class ContactTransformation:
    """``t~ = T(t)``, ``x~ = X(t,x,u,u_x)``, ``u~ = U(t,x,u,u_x)``."""

    T: Expr
    X: Expr
    U: Expr
    DX: Expr = field(init=False, repr=False)
    DU: Expr = field(init=False, repr=False)
    J: Expr = field(init=False, repr=False)

    def __post_init__(self):
        if jet_vars(self.T) - {"t"}:
            raise TransformError("T may depend on t only")
        for name, e in (("X", self.X), ("U", self.U)):
            extra = jet_vars(e) - {"t", "x", "u", "u_x"}
            if extra:
                raise TransformError(f"{name} may depend on t, x, u, u_x only; found {sorted(extra)}")
        DX, DU = restricted_x(self.X), restricted_x(self.U)
        object.__setattr__(self, "DX", DX)
        object.__setattr__(self, "DU", DU)
        J = sub(mul(DX, diff(self.U, "u")), mul(DU, diff(self.X, "u")))
        object.__setattr__(self, "J", J)
        if simplify(J) == ZERO:
            raise TransformError("J = D(X) U_u - D(U) X_u vanishes identically")
        if simplify(diff(self.T, "t")) == ZERO:
            raise TransformError("dT/dt vanishes identically")

    @classmethod
    def parse(cls, T: str, X: str, U: str, table: SymbolTable | None = None):
        return cls(parse(T, table), parse(X, table), parse(U, table))

    @classmethod
    def identity(cls) -> "ContactTransformation":
        return cls(t, x, u)

    @property
    def T_dot(self) -> Expr:
        return diff(self.T, "t")

    def tilde_ux(self) -> Expr:
        return mul(self.DU, power(self.DX, num(-1)))

    def tilde_uxx(self) -> Expr:
        DX, DU = self.DX, self.DU
        top = sub(mul(DX, restricted_x(DU)), mul(DU, restricted_x(DX)))
        return mul(top, power(DX, num(-3)))

    def contact_residual(self) -> Expr:
        X, U = self.X, self.U
        return sub(
            mul(diff(X, "u_x"), add(mul(u_x, diff(U, "u")), diff(U, "x"))),
            mul(diff(U, "u_x"), add(mul(u_x, diff(X, "u")), diff(X, "x"))),
        )


def check_contact_condition(tr: ContactTransformation, cfg: ProbeConfig | None = None,
                            domain: ProbeDomain | None = None) -> ZeroVerdict:
    return is_zero(tr.contact_residual(), cfg or ProbeConfig(), domain, task="contact-condition")


def split_alpha_form(g: Expr) -> tuple[Expr, Expr]:
    """Split ``g = alpha(t) u_t + G(t,x,u,u_x)``; refuse anything else."""
    alpha = simplify(diff(g, "u_t"))
    if alpha.free & (JET_VARS - {"t"}):
        raise TransformError("the u_t coefficient must depend on t alone")
    G = simplify(sub(g, mul(alpha, u_t)))
    if "u_t" in G.free:
        raise TransformError("generating function is not linear in u_t")
    return alpha, G


def transform_generating_function(tr: ContactTransformation, g_tilde) -> GeneratingFunction:
    """Pull back a generating function written in the transformed coordinates."""
    alpha_t, G_t = split_alpha_form(as_gf(g_tilde).expr)
    T, X, U = tr.T, tr.X, tr.U
    DX, DU = tr.DX, tr.DU
    Tdot = tr.T_dot
    alpha = substitute(alpha_t, {"t": T})
    G = substitute(G_t, {"t": T, "x": X, "u": U, "u_x": tr.tilde_ux()})
    inner = add(
        mul(
            sub(mul(DX, diff(U, "t")), mul(DU, diff(X, "t"))),
            power(mul(DX, Tdot), num(-1)),
            alpha,
        ),
        G,
    )
    g = add(
        mul(alpha, power(Tdot, num(-1)), u_t),
        mul(DX, power(tr.J, num(-1)), inner),
    )
    return GeneratingFunction(simplify(g))


def transform_equation(tr: ContactTransformation, F_tilde: Expr) -> Expr:
    """Right-hand side in original coordinates of ``u~_t~ = F~``."""
    extra = jet_vars(F_tilde) - {"t", "x", "u", "u_x", "u_xx"}
    if extra:
        raise TransformError(f"F~ may depend on t, x, u, u_x, u_xx only; found {sorted(extra)}")
    p = tr.tilde_ux()
    q = tr.tilde_uxx()
    F = substitute(F_tilde, {"t": tr.T, "x": tr.X, "u": tr.U, "u_x": p, "u_xx": q})
    rhs = mul(
        tr.DX,
        power(tr.J, num(-1)),
        add(mul(tr.T_dot, F), mul(diff(tr.X, "t"), p), neg(diff(tr.U, "t"))),
    )
    return simplify(rhs)


# ------------------------------------------------------------------ sampler


def random_generating_function(rng: random.Random, depth: int = 3) -> Expr:
    """Random tree over t, x, u, u_t, u_x with rational constants and exp/sin."""
    names = ("t", "x", "u", "u_t", "u_x")

    def leaf() -> Expr:
        if rng.random() < 0.25:
            return num(Fraction(rng.choice([-3, -2, -1, 1, 2, 3]), rng.randint(1, 3)))
        return var(rng.choice(names))

    def build(d: int) -> Expr:
        if d == 0:
            return leaf()
        r = rng.random()
        if r < 0.35:
            return add(build(d - 1), build(d - 1))
        if r < 0.7:
            return mul(build(d - 1), build(d - 1))
        if r < 0.8:
            return power(build(d - 1), num(2))
        if r < 0.9:
            return fn("exp", _small(build(d - 1)))
        return fn("sin", build(d - 1))

    def _small(e: Expr) -> Expr:
        # keep exponentials of moderate size for floating checks
        return mul(num(Fraction(1, 2)), e) if rng.random() < 0.5 else e

    e = build(depth)
    if not (e.free & set(names)):
        e = add(e, var(rng.choice(names)))
    return e


__all__ = [
    "GeneratingFunction",
    "ContactField",
    "ContactTransformation",
    "SymmetryKind",
    "TransformError",
    "InvalidGeneratingFunction",
    "vector_field",
    "bracket",
    "bracket_via_star",
    "linearization",
    "field_commutator",
    "classify_kind",
    "check_contact_condition",
    "transform_generating_function",
    "transform_equation",
    "split_alpha_form",
    "random_generating_function",
]
