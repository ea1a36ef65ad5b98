import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ustsle.linkpat import default_table
from ustsle.loewner import (
    BatchPartition,
    DrivingFunction,
    Localization,
    SquareMap,
    drift_ode_solution,
    extract_driving,
    halfplane_capacity,
    hydrodynamic_residual,
    martingale_check,
    simulate_partition_sle,
    sle_rho_drift,
    solve_loewner,
    trace_from_driving,
    zero_driving_map,
)

ZERO = DrivingFunction.sample(lambda t: 0 * t, 1.0, 100)


def test_initial_condition():
    r = solve_loewner(ZERO, 0.3 + 0.8j, 0.0)
    assert r.g == 0.3 + 0.8j and r.g_prime == 1


def test_zero_driving_closed_form():
    # the point i is swallowed at t = 1/4; its image stays on the real line at sqrt(3)
    assert abs(zero_driving_map(1j, 1.0)) == pytest.approx(math.sqrt(3))
    for z in (3j, 1 + 1j, -2 + 0.5j):
        g = solve_loewner(ZERO, z, 1.0).g
        assert abs(g - zero_driving_map(z, 1.0)) / abs(g) < 1e-8


def test_swallowed_point_reported():
    assert solve_loewner(ZERO, 1j, 1.0).swallowed


def test_hydrodynamic_normalisation():
    drive = DrivingFunction.sample(np.sin, 1.0, 10_000)
    assert hydrodynamic_residual(drive, 1000j) < 1e-5


def test_vertical_segment_has_constant_driving():
    d = extract_driving(0.7 + 1j * np.linspace(0, 1, 300))
    assert np.max(np.abs(d.values - 0.7)) < 1e-3
    assert d.t_end == pytest.approx(0.25)


def test_round_trip_error_halves():
    drive = DrivingFunction.sample(np.sin, 1.0, 100_000)
    errs = []
    for n in (200, 400, 800):
        d = extract_driving(trace_from_driving(drive, n))
        ts = np.linspace(0, d.t_end, 500)
        errs.append(np.max(np.abs(d(ts) - np.sin(ts))))
    assert errs[0] > errs[1] > errs[2]
    assert errs[1] / errs[2] == pytest.approx(2, rel=0.15)


def test_capacity_of_generated_trace():
    drive = DrivingFunction.sample(np.cos, 0.5, 10_000)
    assert halfplane_capacity(trace_from_driving(drive, 2000)) == pytest.approx(0.5, rel=0.01)


def test_square_map_symmetries():
    f = SquareMap()
    c = f(0.5 + 0.5j)
    assert abs(c.real) < 1e-12 and c.imag > 0
    for p in (0.2 + 0.3j, 0.1 + 0.9j, 0.45 + 0.05j):
        assert f(1 - p.real + 1j * p.imag) == pytest.approx(-np.conj(f(p)), abs=1e-10)


def test_square_map_round_trip():
    rng = np.random.default_rng(0)
    pts = rng.uniform(0.001, 0.999, size=(1000, 2))
    z = pts[:, 0] + 1j * pts[:, 1]
    f = SquareMap()
    back = np.array([f.inverse(w) for w in f(z)])
    assert np.max(np.abs(back - z)) < 1e-10


@given(st.floats(0.01, 0.99))
@settings(max_examples=30, deadline=None)
def test_bottom_side_maps_to_real_line(x):
    w = SquareMap()(complex(x, 0.0))
    assert abs(w.imag) < 1e-9


def test_initial_drift_single_pair():
    ev = BatchPartition(default_table(1))
    val, grad = ev.value_and_grad(np.array([[0.0, 1.0]]))
    assert 2 * grad[0, 0] / val[0] == pytest.approx(4.0)


def test_rho_drift_identity():
    # kappa * d log Z for a single pair equals the SLE(kappa, kappa - 6) drift at kappa = 2
    ev = BatchPartition(default_table(1))
    for x in ((0.0, 1.0), (-1.3, 0.4), (2.0, 7.5)):
        val, grad = ev.value_and_grad(np.array([x]))
        assert 2 * grad[0, 0] / val[0] == pytest.approx(sle_rho_drift(x[0], x[1]), rel=1e-12)


def test_zero_noise_matches_ode():
    ev = BatchPartition(default_table(2))
    x0 = (0.0, 2.0, 4.0, 6.0)
    ens = simulate_partition_sle(x0, 2, ev, 1e-4, np.random.default_rng(0), t_end=0.05, noise=False)
    ref = drift_ode_solution(x0, 2, ev, 0.05, ens.times)
    assert np.max(np.abs(ens.W[0] - ref)) < 1e-6


def test_quadratic_variation():
    ev = BatchPartition(default_table(1))
    ens = simulate_partition_sle((0.0, 2.0), 1, ev, 1e-4, np.random.default_rng(1), n_paths=500, t_end=0.05,
                                 record=False)
    qv = ens.qv[~ens.failed] / 0.05
    assert abs(qv.mean() - 2) < 3 * qv.std() / math.sqrt(qv.size)


def test_seeded_simulation_is_reproducible():
    ev = BatchPartition(default_table(1))
    run = lambda: simulate_partition_sle((0.0, 1.0), 1, ev, 1e-3, np.random.default_rng(5), n_paths=4, t_end=0.01).W
    assert np.array_equal(run(), run())


def test_martingale_at_time_zero():
    ev = BatchPartition(default_table(1))
    c = martingale_check(ev, (0.0, 1.0), 1, 2j, 1j, Localization(0.1), 10, np.random.default_rng(0), t_end=0)
    assert c.mean == c.m0


def test_martingale_small_run():
    ev = BatchPartition(default_table(1))
    c = martingale_check(ev, (0.0, 1.0), 1, 2j, 1j, Localization(0.1), 500, np.random.default_rng(2), dt=1e-4)
    assert c.n_failed == 0
    assert abs(c.mean - c.m0) < 3 * c.stderr


def test_rejects_points_inside_localization():
    ev = BatchPartition(default_table(1))
    with pytest.raises(ValueError):
        martingale_check(ev, (0.0, 1.0), 1, 0.05j, 1j, Localization(0.1), 10, np.random.default_rng(0))
