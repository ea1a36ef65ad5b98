import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from ustsle.harmonic import cont_excursion
from ustsle.linkpat import (
    CoefficientError,
    LinkPattern,
    PartitionEvaluator,
    RationalPartition,
    boundary_visit_pde_residual,
    coefficient_instances,
    default_table,
    continuum_Z,
    discrete_Z,
    enumerate_link_patterns,
    excursion_determinant,
    grad_continuum_Z,
    left_to_right_orientation,
    load_coefficients,
    pde_residual,
    recover_coefficients,
    relative_pde_residual,
    save_coefficients,
)
from ustsle.loewner import BatchPartition
from ustsle.oracle import enumerate_trees, pairing_probabilities

P = LinkPattern.parse


def increasing(n, lo=-5.0, hi=5.0, gap=0.3):
    return st.lists(st.floats(gap, 3.0), min_size=n - 1, max_size=n - 1).flatmap(
        lambda gaps: st.floats(lo, hi).map(lambda x0: np.concatenate([[x0], x0 + np.cumsum(gaps)]))
    )


def test_pattern_counts():
    assert enumerate_link_patterns(1) == (P("(1,2)"),)
    assert set(enumerate_link_patterns(2)) == {P("(1,2)(3,4)"), P("(1,4)(2,3)")}
    assert len(enumerate_link_patterns(3)) == 5
    assert len(enumerate_link_patterns(4)) == 14


@given(st.integers(1, 5))
def test_patterns_are_planar_pairings(N):
    for a in enumerate_link_patterns(N):
        assert a.is_planar() and a.N == N
        assert all(a.partner(a.partner(i)) == i for i in range(1, 2 * N + 1))


def test_left_to_right_orientation():
    assert left_to_right_orientation(P("(1,2)")) == ((1, 2),)
    assert left_to_right_orientation(P("(1,4)(2,3)")) == ((1, 4), (2, 3))
    assert left_to_right_orientation(P("(1,2)(3,4)")) == ((1, 2), (3, 4))


def test_continuum_determinants():
    assert excursion_determinant(cont_excursion, P("(1,2)"), [0.0, 1.0]) == pytest.approx(1 / math.pi)
    val = excursion_determinant(cont_excursion, P("(1,2)(3,4)"), [0.0, 1.0, 2.0, 3.0])
    assert val == pytest.approx(8 / (9 * math.pi**2))


def test_determinant_antisymmetry():
    x = [0.0, 0.7, 1.9, 3.2]
    k = lambda a, b: cont_excursion(x[a - 1], x[b - 1])
    m = np.array([[k(a, b) for (_, b) in ((1, 2), (3, 4))] for (a, _) in ((1, 2), (3, 4))])
    swapped = m[::-1]
    assert np.linalg.det(swapped) == pytest.approx(-np.linalg.det(m))


def test_recover_single_pair_from_probe(probe):
    table = recover_coefficients(1, [(probe, (0, 1))] * 3)
    assert table.coeffs == ((Fraction(1),),)


def test_rank_deficient_family_rejected(grid2):
    marked = tuple(grid2.boundary_edge_order[i] for i in (0, 2, 4, 6))
    with pytest.raises(CoefficientError):
        recover_coefficients(2, [(grid2, marked)] * 6)


def test_cached_tables(tables):
    assert tables[1].coeffs == ((1,),)
    assert [list(r) for r in tables[2].coeffs] == [[1, 1], [0, 1]]
    assert all(t.is_integral for t in tables.values())
    assert [list(r) for r in tables[3].coeffs][-1] == [0, 0, 0, 0, 1]


def test_table_round_trip(tmp_path, tables):
    save_coefficients(tables[2], tmp_path / "t.json")
    assert load_coefficients(tmp_path / "t.json").coeffs == tables[2].coeffs


def test_probe_partition_function(probe, tables):
    assert discrete_Z(probe, (0, 1), P("(1,2)"), tables[1]) == Fraction(1, 2)


@pytest.mark.parametrize("positions", [(0, 2, 4, 6), (0, 1, 3, 5), (1, 3, 4, 7)])
def test_two_by_two_against_enumeration(grid2, tables, positions):
    marked = [grid2.boundary_edge_order[i] for i in positions]
    probs = pairing_probabilities(enumerate_trees(grid2), marked)
    total = discrete_Z(grid2, marked, "total", tables[2])
    assert sum(discrete_Z(grid2, marked, a, tables[2]) for a in tables[2].patterns) == total
    for a in tables[2].patterns:
        assert discrete_Z(grid2, marked, a, tables[2]) == probs[a]


def test_fresh_instances_against_enumeration(tables):
    for g, marked in coefficient_instances(2, 3, seed=99):
        probs = pairing_probabilities(enumerate_trees(g), marked)
        for a in tables[2].patterns:
            assert discrete_Z(g, marked, a, tables[2]) == probs[a]


def test_single_pair_continuum_values(tables):
    assert continuum_Z("total", [0.0, 1.0], tables[1]) == pytest.approx(1 / math.pi)
    assert grad_continuum_Z("total", [0.0, 1.0], tables[1])[0] == pytest.approx(2 / math.pi)


@given(increasing(4), st.floats(-10, 10))
@settings(max_examples=40, deadline=None)
def test_translation_invariance(x, c):
    t = default_table(2)
    for a in ("total", *t.patterns):
        assert continuum_Z(a, x + c, t) == pytest.approx(continuum_Z(a, x, t), rel=1e-9)


@given(increasing(6))
@settings(max_examples=25, deadline=None)
def test_gradient_matches_finite_differences(x):
    t = default_table(3)
    f = PartitionEvaluator(t)
    v, g = f.value_and_grad(x)
    h = 1e-5
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        fd = (f(x + e) - f(x - e)) / (2 * h)
        assert fd == pytest.approx(g[i], rel=1e-6, abs=1e-9 * abs(v))


@given(increasing(4))
@settings(max_examples=25, deadline=None)
def test_batched_evaluator_matches_scalar(x):
    t = default_table(2)
    for a in ("total", *t.patterns):
        val, grad = BatchPartition(t, a).value_and_grad(x[None, :])
        v0, g0 = PartitionEvaluator(t, a).value_and_grad(x)
        assert val[0] == pytest.approx(v0, rel=1e-12)
        assert np.allclose(grad[0], g0, rtol=1e-10, atol=1e-14)


def test_single_pair_equation_symbolically():
    x1, x2 = sp.symbols("x1 x2", real=True)
    Z = 1 / (sp.pi * (x1 - x2) ** 2)
    for j, (xj, xi) in enumerate(((x1, x2), (x2, x1))):
        expr = sp.diff(Z, xj, 2) + 2 / (xi - xj) * sp.diff(Z, xi) - 2 / (xi - xj) ** 2 * Z
        assert sp.simplify(expr) == 0


def test_single_pair_equation_numerically(tables):
    ev = PartitionEvaluator(tables[1])
    assert relative_pde_residual(ev, [0.0, 1.0], 1, 1e-3) < 1e-6


def test_richardson_ratio_exact(tables):
    x = [Fraction(0), Fraction(7, 10), Fraction(19, 10), Fraction(3)]
    for a in ("total", *tables[2].patterns):
        ev = RationalPartition(tables[2], a)
        for j in range(1, 5):
            h = Fraction(7, 10000)
            ratio = pde_residual(ev, x, j, h) / pde_residual(ev, x, j, h / 2)
            assert 3.9 < ratio < 4.1


@given(increasing(4))
@settings(max_examples=30, deadline=None)
def test_two_pair_equations(x):
    t = default_table(2)
    h = 1e-3 * float(np.min(np.diff(x)))
    for a in t.patterns:
        for j in range(1, 5):
            assert relative_pde_residual(PartitionEvaluator(t, a), x, j, h) < 1e-4


def test_boundary_visit_operator_degenerate_and_linear():
    zeta = lambda xin, xout, xhat: (xout - xin) ** -2.0
    assert abs(boundary_visit_pde_residual(zeta, 0.0, 1.0, [], 1e-3)) < 1e-5
    zeta1 = lambda xin, xout, xhat: (xout - xin) ** -2.0 * (xhat[0] - xin) ** -1.0
    double = lambda xin, xout, xhat: 2 * zeta1(xin, xout, xhat)
    r1 = boundary_visit_pde_residual(zeta1, 0.0, 2.0, [1.0], 1e-3)
    assert boundary_visit_pde_residual(double, 0.0, 2.0, [1.0], 1e-3) == pytest.approx(2 * r1)


def test_rejects_unordered_points(tables):
    with pytest.raises(ValueError):
        continuum_Z("total", [1.0, 0.0], tables[1])
