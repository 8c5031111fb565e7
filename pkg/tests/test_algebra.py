from __future__ import annotations

import pytest

from contactkit.algebra import (
    JacobiError,
    NotClosed,
    Realization,
    StructureConstants,
    UnknownTable,
    builtin_names,
    builtin_table,
    check_realization,
    direct_sum,
    fit_structure,
    jacobi_check,
    match_structure,
    semidirect,
)
from contactkit.expr import PROVEN_NONZERO, ZERO, ProbeConfig, ProbeDomain, param, parse

SL1 = ["1", "u", "u^2 - u_x^2"]
SO1 = ["1", "tan(x)*sin(u) - u_x*cos(u)", "tan(x)*cos(u) + u_x*sin(u)"]


def gens(texts):
    return [parse(g) for g in texts]


def table(name, dim, rows, params=None):
    return StructureConstants(name, dim, {ij: {k: parse(str(v)) for k, v in row.items()}
                                          for ij, row in rows.items()}, params or {})


# ------------------------------------------------------------------ tables


def test_a22_table():
    sc = builtin_table("A2.2")
    assert sc.relations() == ["[g1,g2] = (1)*g2"]
    assert sc.coeff(2, 1, 2) == parse("-1")


def test_a38_table():
    sc = builtin_table("A3.8")
    assert sc.row(1, 3) == {2: parse("-1")}
    assert sc.row(2, 3) == {1: parse("1")}


def test_a49_table():
    sc = builtin_table("A4.9")
    assert sc.row(2, 3) == {1: parse("1")}
    assert sc.row(1, 4) == {1: parse("2*q")}


def test_semidirect_tables_match_printed_relations():
    sc = builtin_table("sl2R|A2.1")
    assert sc.relations() == [
        "[g1,g2] = (1)*g1", "[g1,g3] = (2)*g2", "[g1,g5] = (1)*g4", "[g2,g3] = (1)*g3",
        "[g2,g4] = (-1/2)*g4", "[g2,g5] = (1/2)*g5", "[g3,g4] = (-1)*g5"]
    so = builtin_table("so3|A3.1")
    cross = [r for r in so.relations() if int(r[2]) <= 3 < int(r[5])]
    assert cross == ["[g1,g5] = (1)*g6", "[g1,g6] = (-1)*g5", "[g2,g4] = (-1)*g6",
                     "[g2,g6] = (1)*g4", "[g3,g4] = (1)*g5", "[g3,g5] = (-1)*g4"]


def test_unknown_table():
    with pytest.raises(UnknownTable):
        builtin_table("A5.1")


def test_antisymmetric_storage():
    sc = table("t", 2, {(2, 1): {1: 1}})
    assert sc.coeff(1, 2, 1) == parse("-1")


def test_bind_respects_ranges():
    a37 = builtin_table("A3.7")
    assert a37.bind(q="1/2").row(2, 3) == {2: parse("1/2")}
    with pytest.raises(ValueError):
        a37.bind(q=2)
    with pytest.raises(ValueError):
        a37.bind(q=0)


# ------------------------------------------------------------------ sums


def test_direct_sum_a22_a1_is_a32():
    assert direct_sum(builtin_table("A2.2"), builtin_table("A1")).same_constants(
        builtin_table("A3.2"))


def test_direct_sum_sl2_sl2_is_so22():
    assert direct_sum(builtin_table("sl2R"), builtin_table("sl2R")).same_constants(
        builtin_table("so22"))


def test_direct_sum_compositional_names():
    sc = builtin_table("A3.7+A1")
    assert sc.dim == 4 and set(sc.params) == {"q"}


def test_direct_sum_associative():
    a, b, c = builtin_table("A2.2"), builtin_table("A1"), builtin_table("A3.3")
    left = direct_sum(direct_sum(a, b), c)
    right = direct_sum(a, direct_sum(b, c))
    assert left.same_constants(right)


def test_semidirect_reproduces_table():
    action = {(1, 2): {1: 1}, (2, 1): {1: "-1/2"}, (2, 2): {2: "1/2"}, (3, 1): {2: -1}}
    sc = semidirect(builtin_table("sl2R"), builtin_table("A2.1"), action)
    assert sc.same_constants(builtin_table("sl2R|A2.1"))


def test_semidirect_rejects_bad_action():
    with pytest.raises(JacobiError):
        semidirect(builtin_table("sl2R"), builtin_table("A2.1"), {(1, 1): {1: 1}})


# ------------------------------------------------------------------ Jacobi


@pytest.mark.parametrize("name", builtin_names())
def test_builtin_tables_satisfy_jacobi(name):
    verdicts = jacobi_check(builtin_table(name))
    assert all(v.is_zero for v in verdicts.values())


def test_jacobi_a21_trivial():
    assert jacobi_check(builtin_table("A2.1")) == {}


def test_jacobi_a48_symbolic():
    verdicts = jacobi_check(builtin_table("A4.8"))
    assert len(verdicts) == 4
    assert all(v.kind == "ProvenZero" for v in verdicts.values())


def test_jacobi_catches_corruption():
    # A2.2 with c_12^1 = 1 added is still a Lie algebra (no triples in dimension two),
    # so the negative control corrupts a three-dimensional table instead
    bad = table("bad", 3, {(1, 2): {2: 1, 1: 1}, (1, 3): {3: 1}, (2, 3): {1: 1}})
    verdicts = jacobi_check(bad)
    assert verdicts[(1, 2, 3)].kind == PROVEN_NONZERO


def test_jacobi_corruption_of_a22_has_nothing_to_check():
    bad = table("bad", 2, {(1, 2): {1: 1, 2: 1}})
    assert jacobi_check(bad) == {}


def test_jacobi_catches_symbolic_parameter_corruption():
    bad = table("bad", 3, {(1, 3): {1: 1}, (2, 3): {2: "q"}, (1, 2): {3: "q"}},
                {})
    assert any(v.is_nonzero for v in jacobi_check(bad).values())


# ------------------------------------------------------------ realizations


def test_sl1_realization():
    r = Realization(builtin_table("sl2R"), gens(SL1))
    assert all(v.is_zero for v in check_realization(r).values())


def test_so3_realization():
    r = Realization(builtin_table("so3"), gens(SO1))
    assert all(v.is_zero for v in check_realization(r).values())


def test_point_sl2_realization_closes():
    r = Realization(builtin_table("sl2R"), gens(["1", "u", "u^2"]))
    assert all(v.is_zero for v in check_realization(r).values())


def test_wrong_basis_order_fails():
    r = Realization(builtin_table("A2.2"), gens(["1", "-u"]))
    assert check_realization(r)[(1, 2)].is_nonzero


def test_realization_dimension_mismatch():
    with pytest.raises(ValueError):
        Realization(builtin_table("A3.5"), gens(["1", "u_x"]))


def test_symbolic_parameter_realization():
    r = Realization(builtin_table("A3.7"), gens(["1", "u_t", "-q*t*u_t + u"]),
                    domain=ProbeDomain(nonzero=(param("q"),), ranges={"q": (-1, 1)}))
    assert all(v.is_zero for v in check_realization(r, ProbeConfig()).values())


# ------------------------------------------------------------ fitting


def test_match_time_translation_pair():
    sc = match_structure(gens(["u_t", "-t*u_t"]))
    # [g1, g2] = g1: A2.2 with the basis listed in the opposite order
    assert sc.relations() == ["[g1,g2] = (1)*g1"]
    assert sc.same_constants(table("A2.2-swapped", 2, {(2, 1): {1: -1}}))


def test_match_abelian_pair():
    sc = match_structure(gens(["1", "t"]))
    assert sc.c == {} or all(not row for row in sc.c.values())


def test_match_seven_dimensional_algebra():
    g = gens(SL1 + ["(exp(-x)*u_x)^(1/2)", "(exp(-x)*u_x)^(1/2)*(u + u_x)",
                    "u_t", "-4/3*t*u_t - 2*u_x"])
    sc = match_structure(g, domain=ProbeDomain(positive=(parse("u_x"),)))
    assert sc.dim == 7
    assert "[g6,g7] = (4/3)*g6" in sc.relations()
    assert sc.row(4, 7) == {4: parse("1")} and sc.row(5, 7) == {5: parse("1")}
    assert all(v.is_zero for v in jacobi_check(sc).values())


def test_match_not_closed():
    with pytest.raises(NotClosed):
        match_structure(gens(["1", "u^3"]))


def test_fit_structure_returns_verdicts():
    sc, verdicts = fit_structure(gens(SL1))
    assert sc.same_constants(builtin_table("sl2R"))
    assert set(verdicts) == {(1, 2), (1, 3), (2, 3)}
    assert all(v.is_zero for v in verdicts.values())
    assert sc.coeff(1, 3, 3) == ZERO
