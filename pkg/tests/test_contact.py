from __future__ import annotations

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracle
from contactkit.contact import (
    ContactTransformation,
    GeneratingFunction,
    InvalidGeneratingFunction,
    TransformError,
    bracket,
    bracket_via_star,
    check_contact_condition,
    classify_kind,
    field_commutator,
    random_generating_function,
    transform_equation,
    transform_generating_function,
    vector_field,
)
from contactkit.expr import (
    PROVEN_ZERO,
    ZERO,
    ProbeConfig,
    SymbolTable,
    add,
    diff,
    is_zero,
    mul,
    num,
    parse,
    simplify,
    sub,
)

LEGENDRE = ("t", "u_x", "u - x*u_x")
ROOT_SCALING = ("t", "2*x*u_x^(1/2)", "u + x*u_x")


def same(a, b):
    return simplify(sub(a, b)) == ZERO


def test_generating_function_rejects_second_order():
    with pytest.raises(InvalidGeneratingFunction):
        GeneratingFunction(parse("u_xx"))


def test_vector_field_examples():
    one = vector_field(parse("1")).components()
    assert [one[k] for k in ("t", "x", "u", "u_x", "u_t")] == [ZERO, ZERO, parse("1"), ZERO, ZERO]
    vu = vector_field(parse("u")).components()
    assert [vu[k] for k in ("t", "x", "u", "u_x", "u_t")] == [
        ZERO, ZERO, parse("u"), parse("u_x"), parse("u_t")]


def test_vector_field_of_point_symmetry():
    table = SymbolTable().of(tau=3, xi=3, eta=3)
    g = parse("eta(t,x,u) - tau(t,x,u)*u_t - xi(t,x,u)*u_x", table)
    c = vector_field(g).components()
    assert same(c["t"], parse("tau(t,x,u)", table))
    assert same(c["x"], parse("xi(t,x,u)", table))
    assert same(c["u"], parse("eta(t,x,u)", table))


def test_bracket_examples():
    assert bracket(parse("1"), parse("u")).expr == parse("1")
    assert bracket(parse("u_t"), parse("-t*u_t + x*u_x")).expr == parse("u_t")
    f = parse("u_x^2 + t*u")
    assert bracket(f, f).expr == ZERO


@given(st.integers(0, 10_000))
def test_bracket_matches_independent_formula(seed):
    rng = random.Random(seed)
    f, g = random_generating_function(rng), random_generating_function(rng)
    ours = oracle.sym(bracket(f, g).expr)
    ref = oracle.bracket(oracle.sym(f), oracle.sym(g))
    assert oracle.sp.simplify(ours - ref) == 0


@given(st.integers(0, 10_000))
def test_bracket_antisymmetric(seed):
    rng = random.Random(seed)
    f, g = random_generating_function(rng), random_generating_function(rng)
    assert simplify(add(bracket(f, g).expr, bracket(g, f).expr)) == ZERO


@given(st.integers(0, 10_000), st.fractions(-3, 3, max_denominator=4))
def test_bracket_bilinear(seed, c):
    rng = random.Random(seed)
    f, g, h = (random_generating_function(rng, depth=2) for _ in range(3))
    lhs = bracket(add(f, mul(num(c), g)), h).expr
    rhs = add(bracket(f, h).expr, mul(num(c), bracket(g, h).expr))
    assert simplify(sub(lhs, rhs)) == ZERO


def test_bracket_via_star_examples():
    assert same(bracket_via_star(parse("1"), parse("u")), parse("1"))


@given(st.integers(0, 10_000))
def test_star_form_has_no_second_derivatives(seed):
    rng = random.Random(seed)
    f, g = random_generating_function(rng), random_generating_function(rng)
    s = simplify(bracket_via_star(f, g))
    for name in ("u_xx", "u_tx", "u_tt"):
        assert simplify(diff(s, name)) == ZERO


def test_field_commutator_examples():
    d = field_commutator(parse("1"), parse("u")) - vector_field(parse("1"))
    assert d.is_zero()
    f = parse("u_t*u_x + sin(x)")
    assert field_commutator(f, f).is_zero()


def test_classify_kind():
    k = classify_kind(parse("u"))
    assert k.point and k.evolution
    k = classify_kind(parse("u_x^2"))
    assert k.evolution and not k.point
    k = classify_kind(parse("u_t + u_x^2*t"))
    assert not k.point and not k.evolution
    assert k.label


# ------------------------------------------------------------ transformations


def test_contact_condition_fixtures():
    assert check_contact_condition(ContactTransformation.identity()).kind == PROVEN_ZERO
    assert check_contact_condition(ContactTransformation.parse(*LEGENDRE)).kind == PROVEN_ZERO
    assert check_contact_condition(ContactTransformation.parse(*ROOT_SCALING)).kind == PROVEN_ZERO


def test_contact_condition_detects_non_contact_map():
    tr = ContactTransformation.parse("t", "u_x", "u")
    assert check_contact_condition(tr).is_nonzero


def test_transformation_validation():
    with pytest.raises(TransformError):
        ContactTransformation.parse("x", "x", "u")
    with pytest.raises(TransformError):
        ContactTransformation.parse("1", "x", "u")
    with pytest.raises(TransformError):
        ContactTransformation.parse("t", "x", "x")


def test_transform_generating_function_examples():
    g = transform_generating_function(ContactTransformation.parse(*LEGENDRE), parse("x"))
    assert g.expr == parse("u_x")
    g = transform_generating_function(ContactTransformation.parse(*ROOT_SCALING), parse("u_x^2"))
    assert same(g.expr, parse("u_x"))


def test_transform_refuses_general_form():
    with pytest.raises(TransformError):
        transform_generating_function(ContactTransformation.identity(), parse("u_t^2"))


@given(st.integers(0, 10_000))
def test_identity_transform_fixes_alpha_form(seed):
    rng = random.Random(seed)
    G = random_generating_function(rng)
    from contactkit.expr import substitute
    G = substitute(G, {"u_t": parse("t")})
    g = add(parse("t^2*u_t"), G)
    out = transform_generating_function(ContactTransformation.identity(), g)
    assert same(out.expr, g)


def test_identity_transform_fixes_equation():
    F = parse("u_x*F(t, x + arctan(u_xx/u_x))", SymbolTable().of(F=2))
    assert same(transform_equation(ContactTransformation.identity(), F), F)


def test_legendre_heat_against_chain_rule_oracle():
    out = transform_equation(ContactTransformation.parse(*LEGENDRE), parse("u_xx"))
    assert oracle.sp.simplify(oracle.sym(out) - oracle.legendre_heat()) == 0
    assert out == parse("-1/u_xx")


def test_time_reparametrization_removes_time_factor():
    # u~_t~ = G(u~_x~x~) under t~ = t^2/2 becomes u_t = t G(u_xx)
    table = SymbolTable().of(G=1)
    tr = ContactTransformation.parse("t^2/2", "x", "u")
    out = transform_equation(tr, parse("G(u_xx)", table))
    assert same(out, parse("t*G(u_xx)", table))


def test_transformed_symmetry_stays_symmetry():
    # heat scaling symmetry pulled back through Legendre is a symmetry of u_t = -1/u_xx
    from contactkit.verify import check_invariance
    tr = ContactTransformation.parse(*LEGENDRE)
    F = transform_equation(tr, parse("u_xx"))
    g = transform_generating_function(tr, parse("-2*t*u_t - x*u_x"))
    assert check_invariance(F, g, ProbeConfig()).verdict.is_zero
    assert is_zero(sub(F, parse("-1/u_xx"))).kind == PROVEN_ZERO
