import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ustsle.graph import (
    AngleBoundError,
    GraphError,
    IsoradialSpec,
    build_rhombic_strip,
    build_square_domain,
    boundary_neighbouring_edges,
    graph_from_dict,
    graph_to_dict,
    slit,
)


def test_smallest_grid():
    g = build_square_domain(1, 1, 1.0)
    assert g.interior.size == 1
    assert len(g.boundary) == 4
    assert len(g.boundary_edge_order) == 4


def test_two_by_two_counts(grid2):
    assert grid2.interior.size == 4
    assert len(grid2.boundary_edge_order) == 8
    assert grid2.n_edges == 12


def test_boundary_order_is_a_single_cycle():
    g = build_square_domain(3, 1, 0.5)
    order = g.boundary_edge_order
    assert len(order) == 8
    assert sorted(order) == sorted(g.boundary_edges)
    angles = [math.atan2(*(g.xy[g.boundary_endpoint(e)] - g.xy[g.interior].mean(axis=0))[::-1]) for e in order]
    turns = np.diff(np.unwrap(angles + angles[:1]))
    assert np.all(turns > 0) and math.isclose(turns.sum(), 2 * math.pi)


@given(st.integers(1, 6), st.integers(1, 6))
@settings(max_examples=25, deadline=None)
def test_square_domain_validates(cols, rows):
    g = build_square_domain(cols, rows, 1.0)
    g.validate()
    assert g.interior.size == cols * rows
    assert len(g.boundary_edge_order) == 2 * (cols + rows)


def test_isoradial_weights():
    square = build_rhombic_strip(3, 2, 1.0, math.pi / 4)
    assert np.allclose(square.weight_array, 1.0)
    spec = IsoradialSpec(1.0, {0: math.pi / 3}, 0.05)
    assert spec.weight(0) == pytest.approx(1.7320508, abs=1e-7)


def test_isoradial_angle_bound():
    with pytest.raises(AngleBoundError):
        build_rhombic_strip(2, 2, 1.0, 0.01, angle_bound=0.05)


def test_empty_slit_is_base_graph(grid2):
    e = grid2.boundary_edge_order[0]
    s = slit(grid2, [], e)
    assert s.boundary == grid2.boundary
    assert s.tip_edge == e


def test_one_step_slit_grows_boundary_by_one(grid2):
    e = grid2.boundary_edge_order[0]
    v = grid2.interior_endpoint(e)
    w = next(u for _, u in grid2.neighbours(v) if not grid2.is_boundary[u])
    s = slit(grid2, [v, w], e)
    assert len(s.boundary) == len(grid2.boundary) + 1


def test_revisiting_slit_rejected(grid2):
    e = grid2.boundary_edge_order[0]
    v = grid2.interior_endpoint(e)
    w = next(u for _, u in grid2.neighbours(v) if not grid2.is_boundary[u])
    with pytest.raises(GraphError):
        slit(grid2, [v, w, v], e)


def test_boundary_neighbouring_edges(grid2, grid3):
    assert boundary_neighbouring_edges(build_square_domain(1, 1, 1.0)) == []
    assert len(boundary_neighbouring_edges(grid2)) == 4
    assert len(boundary_neighbouring_edges(grid3)) == 8


def test_round_trip_serialisation(grid3):
    h = graph_from_dict(graph_to_dict(grid3))
    assert np.array_equal(h.edge_uv, grid3.edge_uv)
    assert tuple(h.boundary_edge_order) == tuple(grid3.boundary_edge_order)
