from __future__ import annotations

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracle
from contactkit.contact import random_generating_function
from contactkit.expr import (
    ONE,
    PROVEN_NONZERO,
    ZERO,
    ProbeConfig,
    SymbolTable,
    add,
    collect_opaque,
    is_zero,
    mul,
    num,
    opaque,
    parse,
    simplify,
    sub,
    var,
)
from contactkit.verify import (
    CE_TERM_COUNT,
    check_invariance,
    classifying_residual,
    invariance_residual,
    lemma1_consistency,
)

F5 = SymbolTable().of(F=5)
HEAT = parse("u_xx")


def test_translation_in_u_gives_f_u():
    F = parse("F(t,x,u,u_x,u_xx)", F5)
    res = invariance_residual(F, parse("1"))
    assert res == parse("pd(F;0,0,1,0,0)(t,x,u,u_x,u_xx)", F5)
    parts = collect_opaque(res)
    assert parts == {res: ONE}


def test_entry_a12_residual_vanishes():
    F = parse("F(t,x,u_x,u_xx)", SymbolTable().of(F=4))
    assert simplify(invariance_residual(F, parse("1"))) == ZERO


@pytest.mark.parametrize("g", ["-2*t*u_t - x*u_x", "u^2", "u*u_x", "u_x", "x*u - 2*t*u_x"])
def test_heat_residuals_match_hand_expansion(g):
    ours = simplify(invariance_residual(HEAT, parse(g)))
    gs = oracle.sym(g).subs(oracle.u_t, oracle.u_xx)
    assert oracle.sp.simplify(oracle.sym(ours) - oracle.heat_invariance(gs)) == 0


def test_heat_scaling_is_symmetry():
    assert check_invariance(HEAT, parse("-2*t*u_t - x*u_x")).verdict.is_zero


@pytest.mark.parametrize("g", ["u^2", "u*u_x"])
def test_heat_non_symmetries(g):
    v = check_invariance(HEAT, parse(g)).verdict
    assert v.kind == PROVEN_NONZERO and v.witness


def test_sl2_second_realization_invariance():
    F = parse("u_x*F(t, x + arctan(u_xx/u_x))", SymbolTable().of(F=2))
    assert check_invariance(F, parse("u^2 + u_x^2")).verdict.is_zero


def test_a33_invariance():
    F = parse("F(u_x - t, u_xx)", SymbolTable().of(F=2))
    rep = check_invariance(F, parse("u_t - x"))
    assert rep.verdict.is_zero


def test_breakdown_consistent_with_verdict():
    F = parse("F(t, u_x, u_xx)", SymbolTable().of(F=3))
    rep = check_invariance(F, parse("u"))
    assert rep.method == "whole" or not all(v.is_zero for v in rep.breakdown.values())
    assert rep.verdict.is_nonzero
    ok = check_invariance(F, parse("1"))
    assert ok.verdict.is_zero


@given(st.integers(0, 10_000))
def test_two_construction_paths_agree(seed):
    rng = random.Random(seed)
    g = random_generating_function(rng)
    F = parse("u_x*u_xx + sin(u)*t")
    diff = sub(invariance_residual(F, g, "lifted"), invariance_residual(F, g, "restricted"))
    assert is_zero(diff, ProbeConfig(seed=seed)).is_zero


@given(st.integers(0, 10_000), st.integers(-3, 3), st.integers(-3, 3))
def test_residual_linear_in_generator(seed, a, b):
    rng = random.Random(seed)
    g1, g2 = random_generating_function(rng), random_generating_function(rng)
    F = parse("exp(u)*u_xx + x*u_x")
    lhs = invariance_residual(F, add(mul(num(a), g1), mul(num(b), g2)))
    rhs = add(mul(num(a), invariance_residual(F, g1)), mul(num(b), invariance_residual(F, g2)))
    assert is_zero(sub(lhs, rhs), ProbeConfig(seed=seed)).is_zero


def test_invalid_path():
    with pytest.raises(ValueError):
        invariance_residual(HEAT, parse("1"), path="sideways")


# ------------------------------------------------------- classifying equation


def test_classifying_residual_g_one():
    F = parse("F(t,x,u,u_x,u_xx)", F5)
    res = classifying_residual(F, ZERO, ONE)
    assert simplify(sub(res, parse("pd(F;0,0,1,0,0)(t,x,u,u_x,u_xx)", F5))) == ZERO


def test_classifying_residual_time_translation():
    F = parse("F(t,x,u,u_x,u_xx)", F5)
    res = classifying_residual(F, ONE, ZERO)
    assert simplify(add(res, parse("pd(F;1,0,0,0,0)(t,x,u,u_x,u_xx)", F5))) == ZERO


def test_flipping_a_term_changes_the_residual():
    t, x, u = var("t"), var("x"), var("u")
    F = opaque("F", [t, x, u, var("u_x"), var("u_xx")])
    a, G = opaque("a", [t]), opaque("G", [t, x, u, var("u_x")])
    base = classifying_residual(F, a, G)
    for k in range(CE_TERM_COUNT):
        assert simplify(sub(base, classifying_residual(F, a, G, flip=k))) != ZERO


def test_classifying_equation_consistency():
    assert lemma1_consistency(ProbeConfig(samples=50)).is_zero
    assert lemma1_consistency(ProbeConfig(samples=20), alpha_zero=True).is_zero


@pytest.mark.parametrize("flip", range(CE_TERM_COUNT))
def test_every_single_sign_flip_is_caught(flip):
    assert lemma1_consistency(ProbeConfig(samples=8), flip=flip).kind == PROVEN_NONZERO
