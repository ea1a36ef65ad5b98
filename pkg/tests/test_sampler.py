import math
from collections import Counter

import numpy as np
import pytest

from ustsle.harmonic import unit_square
from ustsle.linkpat import LinkPattern, discrete_Z
from ustsle.oracle import (
    Measure,
    Visits,
    branch_table,
    enumerate_trees,
    event_mask,
    pairing_probabilities,
    visit_relabeling,
)
from ustsle.sampler import (
    ConditionedBranchSampler,
    RejectionBudgetError,
    RngStream,
    cut_at_visits,
    estimate_link_pattern_probs,
    sample_boundary_visiting_branch,
    sample_multibranch,
    wilson_ust,
)


def within(p_hat, p, n, k=3.0):
    return abs(p_hat - p) <= k * math.sqrt(p * (1 - p) / n) + 1e-12


@pytest.fixture(scope="module")
def bundled(grid3):
    return grid3, tuple(grid3.boundary_edge_order[i] for i in (0, 3, 6, 9))


def test_probe_tree_frequencies(probe):
    n = 100_000
    rng = RngStream(1)
    counts = Counter(wilson_ust(probe, rng).edges for _ in range(n))
    assert set(counts) == {(0,), (1,)}
    assert within(counts[(0,)] / n, 0.5, n)


def test_tree_property(grid3):
    t = wilson_ust(grid3, RngStream(2))
    assert len(t.edges) == grid3.interior.size
    for v in grid3.interior:
        path = t.branch(int(v))
        assert len(set(path)) == len(path) and grid3.is_boundary[path[-1]]


def test_stream_determinism(grid3):
    a = wilson_ust(grid3, RngStream(7, 3)).edges
    assert a == wilson_ust(grid3, RngStream(7, 3)).edges
    assert len({wilson_ust(grid3, RngStream(7, k)).edges for k in range(20)}) > 1


def test_probe_acceptance_rate(probe):
    rng = RngStream(4)
    attempts = [sample_multibranch(probe, (0, 1), rng).attempts for _ in range(4000)]
    assert within(len(attempts) / sum(attempts), 0.5, sum(attempts))


def test_multibranch_samples_satisfy_event(bundled):
    g, marked = bundled
    rng = RngStream(5)
    for _ in range(200):
        s = sample_multibranch(g, marked, rng)
        inner = [v for p in s.paths for v in p[1:-1]]
        assert len(inner) == len(set(inner))
        assert s.alpha.is_planar()
        for p in s.paths:
            assert g.is_boundary[p[0]] and g.is_boundary[p[-1]]


def test_rejection_budget(bundled):
    g, marked = bundled
    with pytest.raises(RejectionBudgetError):
        estimate_link_pattern_probs(g, marked, 100, RngStream(0), max_attempts=10)


@pytest.mark.parametrize("method", ["rejection", "sequential"])
def test_pattern_frequencies_match_oracle(bundled, method):
    g, marked = bundled
    n = 20_000
    est = estimate_link_pattern_probs(g, marked, n, RngStream(6), method=method)
    assert sum(r.p_hat for r in est.rows) == pytest.approx(1.0)
    probs = pairing_probabilities(enumerate_trees(g), marked)
    total = sum(probs.values())
    for r in est.rows:
        assert within(r.p_hat, float(probs[r.alpha] / total), n)


def test_sequential_sampler_on_sixteen_grid(tables):
    g = unit_square(17)
    order = g.boundary_edge_order
    marked = [order[i] for i in (4, 20, 36, 52)]
    n = 20_000
    est = estimate_link_pattern_probs(g, marked, n, RngStream(8), method="sequential")
    total = discrete_Z(g, marked, "total", tables[2], exact_arith=False)
    for r in est.rows:
        assert within(r.p_hat, discrete_Z(g, marked, r.alpha, tables[2], exact_arith=False) / total, n)


def test_conditioned_branch_law_matches_oracle(bundled, tables):
    g, marked = bundled
    alpha = LinkPattern.parse("(1,4)(2,3)")
    bt = branch_table(enumerate_trees(g), marked, Measure("alpha", 1, alpha))
    law = bt.step_law((g.interior_endpoint(marked[0]),))
    sampler = ConditionedBranchSampler(g, marked, alpha=alpha)
    rng = RngStream(9)
    n = 10_000
    counts = Counter(sampler.sample(rng).path[2] for _ in range(n))
    for v, p in law.items():
        assert within(counts[v] / n, float(p), n)


def test_visiting_branch_traverses_in_order(grid3):
    rng = RngStream(10)
    visits = [1, 11]
    uv = [tuple(grid3.edge_uv[e]) for e in visits]
    for _ in range(50):
        path = sample_boundary_visiting_branch(grid3, 13, 18, visits, rng)
        pieces = cut_at_visits(path, uv)
        assert len(pieces) == 3
        assert sum(len(p) for p in pieces) == len(path)


def test_visiting_branch_without_visits_is_single_branch(grid3):
    ens = enumerate_trees(grid3)
    mask = event_mask(ens, [], Visits(13, 18, ()))
    start = grid3.interior_endpoint(13)
    verts, _, length = ens.paths(start)
    w = ens.weight_num[mask].astype(float)
    mean_len = float(np.sum(w * length[mask]) / w.sum())
    rng = RngStream(12)
    lens = np.array([len(sample_boundary_visiting_branch(grid3, 13, 18, [], rng)) - 2 for _ in range(5000)])
    assert abs(lens.mean() - mean_len) < 3 * lens.std() / math.sqrt(lens.size)


def test_visit_branch_matches_pattern_sample_in_law(grid3):
    visits = [11]
    relabel = visit_relabeling(grid3, 13, 18, visits, (True,))
    rng = RngStream(13)
    n = 4000
    # interior vertices: the visit path has two boundary ends, each pattern branch has two
    a = np.array([len(sample_boundary_visiting_branch(grid3, 13, 18, visits, rng)) - 2 for _ in range(n)])
    b = np.array([sum(len(p) - 2 for p in sample_multibranch(grid3, relabel.marked, rng, alpha=relabel.alpha).paths)
                  for _ in range(n)])
    se = math.hypot(a.std() / math.sqrt(n), b.std() / math.sqrt(n))
    assert abs(a.mean() - b.mean()) < 3 * se
