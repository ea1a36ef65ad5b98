import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ustsle.graph import build_square_domain
from ustsle.harmonic import (
    GreenSolver,
    cont_excursion,
    cont_green,
    cont_poisson,
    harmonic_measure,
    kernel_ratio_experiment,
    kernels,
    laplacian_apply,
    laplacian_apply_exact,
)
from ustsle.sampler import RngStream, random_walk_exits


def test_constants_and_linear_functions_are_harmonic():
    g = build_square_domain(4, 3, 0.25)
    assert np.allclose(laplacian_apply(g, np.ones(g.n_vertices))[g.interior], 0)
    assert np.allclose(laplacian_apply(g, g.xy[:, 0])[g.interior], 0, atol=1e-12)


def test_probe_laplacian_of_indicator(probe):
    f = [Fraction(1), Fraction(0), Fraction(0)]
    assert laplacian_apply_exact(probe, f)[0] == -2


def test_probe_kernels(probe):
    ks = kernels(probe, exact=True)
    assert ks.G(0, 0) == Fraction(1, 2)
    assert ks.P(0, 0) == Fraction(1, 2)
    assert ks.K(0, 1) == Fraction(1, 2)


def test_green_symmetric_with_equal_diagonal(grid2):
    G = np.array([[kernels(grid2).G(int(v), int(w)) for w in grid2.interior] for v in grid2.interior])
    assert np.allclose(G, G.T, atol=1e-10)
    assert np.allclose(np.diag(G), G[0, 0])


def test_exact_and_float_kernels_agree(grid3):
    ke, kf = kernels(grid3, exact=True), kernels(grid3)
    for v in grid3.interior[:4]:
        for w in grid3.interior:
            assert float(ke.G(int(v), int(w))) == pytest.approx(kf.G(int(v), int(w)), rel=1e-12)


@given(st.integers(2, 6), st.integers(2, 6), st.data())
@settings(max_examples=20, deadline=None)
def test_green_solves_dirac(cols, rows, data):
    g = build_square_domain(cols, rows, 1.0)
    w = data.draw(st.sampled_from([int(v) for v in g.interior]))
    col = GreenSolver(g).columns([w])[:, 0]
    delta = np.zeros(g.n_vertices)
    delta[w] = 1
    assert np.allclose((laplacian_apply(g, col) + delta)[g.interior], 0, atol=1e-10)


def test_harmonic_measure_of_whole_boundary(grid3):
    for v in grid3.interior:
        assert harmonic_measure(grid3, int(v), grid3.boundary_edge_order) == pytest.approx(1.0)


def test_probe_harmonic_measure(probe):
    assert harmonic_measure(probe, 0, [1], kernels(probe, exact=True)) == Fraction(1, 2)


def test_harmonic_measure_against_walks():
    g = build_square_domain(3, 2, 1.0)
    v = int(g.interior[0])
    n = 100_000
    counts = random_walk_exits(g, v, n, RngStream(11))
    ks = kernels(g)
    for e in g.boundary_edge_order:
        p = harmonic_measure(g, v, [e], ks)
        assert abs(counts[e] / n - p) < 3 * math.sqrt(p * (1 - p) / n) + 1e-12


def test_continuum_kernel_values():
    assert cont_poisson(1j, 0.0) == pytest.approx(1 / math.pi)
    assert cont_excursion(0.0, 1.0) == pytest.approx(1 / math.pi)
    assert cont_green(1j, 2j) == pytest.approx(math.log(3) / (2 * math.pi))


def test_kernel_ratio_positive_and_converging():
    rows = kernel_ratio_experiment((8, 16, 32), (3 / 8, 0.0), (1.0, 1 / 4), (0.5, 0.5), (0.75, 0.5))
    assert all(r.discrete_value > 0 and r.continuum_value > 0 for r in rows)
    errs = [r.abs_error for r in rows]
    assert errs[0] > errs[1] > errs[2]
