import numpy as np
import pytest

from ustsle import experiments as ex
from ustsle.linkpat import LinkPattern

P = LinkPattern.parse


def test_continuum_probabilities_sum_to_one():
    probs = ex.continuum_pairing_probabilities()
    assert sum(probs.values()) == pytest.approx(1.0)
    assert all(0 < p < 1 for p in probs.values())


def test_rotation_symmetric_points_split_evenly():
    pts = ((0.25, 0.0), (1.0, 0.25), (0.75, 1.0), (0.0, 0.75))
    probs = ex.continuum_pairing_probabilities(pts)
    assert probs[P("(1,2)(3,4)")] == pytest.approx(0.5, abs=1e-9)


def test_nearby_pair_is_likely_paired():
    # points 1,2 close together and 3,4 close together on opposite sides
    pts = ((0.25, 0.0), (0.35, 0.0), (0.65, 1.0), (0.55, 1.0))
    probs = ex.continuum_pairing_probabilities(pts)
    assert probs[P("(1,2)(3,4)")] > 0.9


def test_inversion_rule():
    assert ex._inversions_ok([0.1, 0.05, 0.02], [0.001] * 3)
    assert ex._inversions_ok([0.1, 0.05, 0.051, 0.02], [0.001] * 4)
    assert not ex._inversions_ok([0.1, 0.05, 0.06], [0.001] * 3)
    assert not ex._inversions_ok([0.1, 0.05, 0.0501, 0.0502], [0.001] * 4)


def test_random_configurations_are_admissible():
    xs = ex.random_configurations(3, 50, np.random.default_rng(0))
    assert xs.shape == (50, 6)
    assert np.all(np.diff(xs, axis=1) >= 0.2)


def test_small_convergence_run_is_reproducible():
    a = ex.pairing_convergence(sizes=(8, 16), samples=300, seed=5, tolerance=1.0)
    b = ex.pairing_convergence(sizes=(8, 16), samples=300, seed=5, tolerance=1.0)
    assert [r["count"] for r in a.rows] == [r["count"] for r in b.rows]


def test_driving_samples_start_at_zero():
    times = np.array([0.005, 0.01])
    d = ex.branch_driving_samples(16, ex.DRIVING_SETUPS["N1"][0], None, times, 20, ex.RngStream(1))
    s = ex.sde_driving_samples(ex.DRIVING_SETUPS["N1"][0], None, times, 20, np.random.default_rng(1), dt=1e-4)
    assert d.shape == s.shape == (20, 2)
    assert np.all(np.isfinite(d)) and np.all(np.isfinite(s))
