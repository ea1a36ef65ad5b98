from fractions import Fraction

import pytest

from ustsle.graph import GraphError, build_square_domain
from ustsle.linkpat import LinkPattern
from ustsle.oracle import (
    AllPaired,
    Measure,
    Paired,
    SinglePair,
    branch_step_law,
    enumerate_trees,
    event_probability,
    matrix_tree_total,
    pairing_probabilities,
    verify_boundary_visit_bijection,
    verify_branch_martingale,
    verify_conditional_probability_martingale,
    verify_girsanov_closure,
    verify_tower_property,
    visit_relabeling,
)

P = LinkPattern.parse
A, B = P("(1,2)(3,4)"), P("(1,4)(2,3)")


@pytest.fixture(scope="module")
def bundled(grid3):
    marked = tuple(grid3.boundary_edge_order[i] for i in (0, 3, 6, 9))
    return grid3, marked, enumerate_trees(grid3)


def test_probe_trees(probe):
    ens = enumerate_trees(probe)
    assert ens.n_trees == 2
    assert set(ens.weight_num) == {1}


def test_star_has_one_tree_per_edge():
    assert enumerate_trees(build_square_domain(1, 1, 1.0)).n_trees == 4


@pytest.mark.parametrize("shape", [(2, 2), (2, 3), (3, 3)])
def test_tree_count_matches_matrix_tree(shape):
    g = build_square_domain(*shape, 1.0)
    ens = enumerate_trees(g)
    assert ens.total == matrix_tree_total(g)


def test_probe_single_pair(probe):
    assert event_probability(enumerate_trees(probe), (0, 1), AllPaired()) == Fraction(1, 2)


def test_pattern_probabilities_sum(bundled):
    g, marked, ens = bundled
    probs = pairing_probabilities(ens, marked)
    assert sum(probs.values()) == event_probability(ens, marked, AllPaired())
    assert probs[A] == event_probability(ens, marked, Paired(A))


def test_crossing_pattern_has_probability_zero(bundled):
    g, marked, ens = bundled
    crossing = LinkPattern(((1, 3), (2, 4)))
    assert not crossing.is_planar()
    assert event_probability(ens, marked, Paired(crossing)) == 0


def test_forced_step_on_probe(probe):
    law = branch_step_law(enumerate_trees(probe), (0, 1), Measure("N", 1), (0,))
    assert law == {probe.boundary_endpoint(1): Fraction(1)}


def test_symmetric_step_law():
    g = build_square_domain(3, 2, 1.0)
    at = lambda x, y: next(e for e in g.boundary_edge_order if tuple(g.xy[g.boundary_endpoint(e)]) == (x, y))
    marked = (at(2.0, 0.0), at(2.0, 3.0))
    start = g.interior_endpoint(marked[0])
    law = branch_step_law(enumerate_trees(g), marked, Measure("N", 1), (start,))
    assert sum(law.values()) == 1
    side = {tuple(g.xy[v]): p for v, p in law.items()}
    assert side[(1.0, 1.0)] == side[(3.0, 1.0)] > 0


def test_conditional_probability_martingale(bundled, tables):
    g, marked, ens = bundled
    for rep in verify_conditional_probability_martingale(g, marked, A, 3, tables, ens=ens):
        assert rep.all_exact, rep.first_failure


def test_branch_martingales_on_probe(probe, tables):
    for which in ("M1", "Malpha", "MN"):
        rep = verify_branch_martingale(probe, (0, 1), which, P("(1,2)"), P("(1,2)"), 2, tables)
        assert rep.all_exact


@pytest.mark.parametrize("which", ["M1", "Malpha", "MN", "tildeMN", "tildeMalpha"])
def test_branch_martingales_bundled(bundled, tables, which):
    g, marked, ens = bundled
    rep = verify_branch_martingale(g, marked, which, B, A, 2, tables, j=1, ens=ens)
    assert rep.all_exact, rep.first_failure
    assert rep.states_checked > 0


def test_unreachable_policy_gives_same_verdict(bundled, tables):
    g, marked, ens = bundled
    a = verify_branch_martingale(g, marked, "tildeMalpha", B, A, 2, tables, ens=ens, unreachable_triggers=True)
    b = verify_branch_martingale(g, marked, "tildeMalpha", B, A, 2, tables, ens=ens, unreachable_triggers=False)
    assert a.all_exact and b.all_exact


def test_girsanov_and_tower(bundled, tables):
    g, marked, ens = bundled
    for alpha in (A, B):
        assert verify_girsanov_closure(g, marked, alpha, 3, tables, beta=A, ens=ens).all_exact
        assert verify_tower_property(ens, marked, alpha, 1, 3).all_exact


def test_visit_bijection_single_visit(grid3, tables):
    rep = verify_boundary_visit_bijection(grid3, 13, 18, [11], tables)
    assert rep.all_exact and rep.states_checked > 0
    assert rep.notes["Z_visit"] == "403/25088"


def test_visit_bijection_two_visits(grid3, tables):
    rep = verify_boundary_visit_bijection(grid3, 13, 18, [1, 11], tables)
    assert rep.all_exact
    assert rep.notes["alpha"] == "(1,6)(2,5)(3,4)"


def test_no_visits_is_single_pair(grid3, tables):
    rep = verify_boundary_visit_bijection(grid3, 13, 18, [], tables)
    assert rep.all_exact
    ens = enumerate_trees(grid3)
    assert Fraction(rep.notes["Z_visit"]) == event_probability(ens, (13, 18), SinglePair(1, 2))


def test_degenerate_visit_configuration(grid3):
    with pytest.raises(GraphError):
        visit_relabeling(grid3, 13, 18, [0], (True,))
