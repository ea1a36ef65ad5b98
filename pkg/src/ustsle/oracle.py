"""Exhaustive spanning-tree enumeration and exact checks on tiny graphs.

A spanning tree of the graph with its boundary wired to one root is stored as
an arborescence: every interior vertex records the edge of its first step
towards the root.  All probabilities are exact rationals.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import exact
from .graph import GraphError, PlanarGraph, SlitGraph, _DomainView, slit
from .harmonic import exact_interior_laplacian, kernels
from .linkpat import (
    CoefficientTable,
    LinkPattern,
    discrete_Z,
    enumerate_link_patterns,
)

MAX_TREES = 2_000_000


class SizeGuardError(RuntimeError):
    """The graph has too many spanning trees to enumerate."""


class ImpossibleConditioningError(ValueError):
    """The conditioning event has probability zero."""


def tree_count(graph: _DomainView) -> int:
    """Number of wired spanning trees, from the unit-weight matrix-tree determinant."""
    idx = graph.interior_index
    n = graph.interior.size
    lap = np.zeros((n, n), dtype=np.int64)
    for u, v in graph.edge_uv:
        for a, b in ((u, v), (v, u)):
            if idx[a] >= 0:
                lap[idx[a], idx[a]] += 1
                if idx[b] >= 0:
                    lap[idx[a], idx[b]] -= 1
    sign, logdet = np.linalg.slogdet(lap.astype(float)) if n else (1.0, 0.0)
    if logdet > 60:
        return int(math.exp(min(logdet, 700)))
    return int(exact.det([[Fraction(int(x)) for x in row] for row in lap]))


@dataclass(frozen=True, eq=False)
class TreeEnsemble:
    """All wired spanning trees of ``graph`` with exact weights.

    ``step_edge[k, i]`` and ``step_to[k, i]`` give the first edge and vertex on
    the way to the root from interior vertex ``graph.interior[i]`` in tree ``k``.
    Tree ``k`` has weight ``weight_num[k] / denom``.
    """

    graph: _DomainView
    step_edge: np.ndarray
    step_to: np.ndarray
    weight_num: np.ndarray
    denom: int

    @property
    def n_trees(self) -> int:
        return int(self.step_edge.shape[0])

    @cached_property
    def total_num(self) -> int:
        return int(self.weight_num.sum())

    @property
    def total(self) -> Fraction:
        return Fraction(self.total_num, self.denom)

    def probability(self, mask: np.ndarray) -> Fraction:
        if self.total_num == 0:
            raise ImpossibleConditioningError("empty ensemble")
        return Fraction(int(self.weight_num[mask].sum()), self.total_num)

    def tree_edges(self, k: int) -> frozenset[int]:
        return frozenset(int(e) for e in self.step_edge[k])

    @cached_property
    def edge_sets(self) -> list[tuple[int, ...]]:
        return [tuple(sorted(row)) for row in self.step_edge.tolist()]

    def exits(self, start: int) -> np.ndarray:
        """Boundary edge through which the branch from interior vertex ``start`` leaves, per tree."""
        return self.paths(start)[1]

    def paths(self, start: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Branch from ``start`` in every tree.

        Returns ``(vertices, exit_edge, length)``: ``vertices[k, :length[k]]``
        are the interior vertices in order, followed by the boundary vertex.
        """
        g = self.graph
        idx = g.interior_index
        m, n = self.step_edge.shape
        rows = np.arange(m)
        verts = np.full((m, n + 1), -1, dtype=np.int64)
        verts[:, 0] = start
        cur = np.full(m, start, dtype=np.int64)
        exit_edge = np.full(m, -1, dtype=np.int64)
        length = np.zeros(m, dtype=np.int64)
        active = np.ones(m, dtype=bool)
        for s in range(n):
            col = idx[cur]
            nxt = self.step_to[rows, col]
            edge = self.step_edge[rows, col]
            hit = active & g.is_boundary[nxt]
            exit_edge[hit] = edge[hit]
            length[hit] = s + 1
            verts[active, s + 1] = nxt[active]
            active &= ~hit
            cur = np.where(active, nxt, cur)
            if not active.any():
                break
        return verts, exit_edge, length


def enumerate_trees(graph: _DomainView, max_trees: int = MAX_TREES) -> TreeEnsemble:
    """Every wired spanning tree, built vertex by vertex with on-the-fly cycle pruning."""
    count = tree_count(graph)
    if count > max_trees:
        raise SizeGuardError(f"{count} spanning trees exceed the guard {max_trees}")
    inner = [int(v) for v in graph.interior]
    n = len(inner)
    if n == 0:
        return TreeEnsemble(graph, np.zeros((1, 0), np.int64), np.zeros((1, 0), np.int64), np.ones(1, np.int64), 1)
    order = _bfs_order(graph)
    pos = np.full(graph.n_vertices, -1, dtype=np.int64)
    pos[order] = np.arange(n)
    pos[graph.is_boundary] = -1
    edges = np.zeros((1, 0), dtype=np.int64)
    targets = np.zeros((1, 0), dtype=np.int64)
    for k, v in enumerate(order):
        new_e, new_t = [], []
        for e, u in graph.neighbours(v):
            m = edges.shape[0]
            rows = np.arange(m)
            cur = np.full(m, u, dtype=np.int64)
            for _ in range(k + 1):
                col = pos[cur]
                live = (col >= 0) & (col < k)
                if not live.any():
                    break
                cur = np.where(live, targets[rows, np.where(live, col, 0)], cur)
            ok = cur != v
            new_e.append(np.column_stack([edges[ok], np.full(ok.sum(), e)]))
            new_t.append(np.column_stack([targets[ok], np.full(ok.sum(), u)]))
        edges = np.concatenate(new_e)
        targets = np.concatenate(new_t)
    if edges.shape[0] != count:
        raise AssertionError(f"enumerated {edges.shape[0]} trees, matrix-tree count is {count}")
    perm = np.argsort(order)
    step_edge = np.ascontiguousarray(edges[:, perm])
    step_to = np.ascontiguousarray(targets[:, perm])
    # reorder columns to interior-index order
    col_of = np.array([graph.interior_index[v] for v in np.array(order)[perm]])
    step_edge = step_edge[:, np.argsort(col_of)]
    step_to = step_to[:, np.argsort(col_of)]
    num, denom = _tree_weights(graph, step_edge)
    return TreeEnsemble(graph, step_edge, step_to, num, denom)


def _bfs_order(graph: _DomainView) -> list[int]:
    seen = set(int(v) for v in np.flatnonzero(graph.is_boundary))
    frontier = sorted(seen)
    order: list[int] = []
    while frontier:
        nxt = []
        for b in frontier:
            for _, u in graph.neighbours(b):
                if u not in seen:
                    seen.add(u)
                    order.append(u)
                    nxt.append(u)
        frontier = nxt
    missing = [int(v) for v in graph.interior if v not in seen]
    if missing:
        raise GraphError("interior vertices without boundary access")
    return order


def _tree_weights(graph: _DomainView, step_edge: np.ndarray) -> tuple[np.ndarray, int]:
    ws = [Fraction(w) for w in graph.weights]
    d = math.lcm(*(w.denominator for w in ws)) if ws else 1
    nums = [int(w * d) for w in ws]
    n = step_edge.shape[1]
    big = max(nums) ** n * max(step_edge.shape[0], 1) >= 2**62
    if all(x == nums[0] for x in nums) and not big:
        return np.full(step_edge.shape[0], nums[0] ** n, dtype=np.int64), d**n
    table = np.array(nums, dtype=object if big else np.int64)
    prod = table[step_edge].prod(axis=1)
    return prod, d**n


def matrix_tree_total(graph: _DomainView) -> Fraction:
    """Weighted matrix-tree determinant of the interior Laplacian."""
    return Fraction(exact.det(exact_interior_laplacian(graph)))


# ---------------------------------------------------------------- events


@dataclass(frozen=True)
class AllPaired:
    """Odd marked edges' branches leave through distinct even marked edges."""


@dataclass(frozen=True)
class Paired:
    alpha: LinkPattern


@dataclass(frozen=True)
class SinglePair:
    """The branch from the odd one of marked edges ``i, k`` (1-based) leaves through the other."""

    i: int
    k: int


@dataclass(frozen=True)
class Visits:
    """Branch from ``e_in`` leaves through ``e_out`` after traversing ``visits`` in this order."""

    e_in: int
    e_out: int
    visits: tuple[int, ...]


def _pairing_arrays(ens: TreeEnsemble, marked: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Per tree: partner index (1-based) of every marked index, and the all-paired mask."""
    g = ens.graph
    twoN = len(marked)
    slot = {e: i + 1 for i, e in enumerate(marked)}
    partner = np.zeros((ens.n_trees, twoN + 1), dtype=np.int64)
    ok = np.ones(ens.n_trees, dtype=bool)
    for i in range(1, twoN + 1, 2):
        start = g.interior_endpoint(marked[i - 1])
        if start is None:
            ok[:] = False
            continue
        ex = ens.exits(start)
        k = np.array([slot.get(int(e), 0) for e in ex], dtype=np.int64)
        good = (k > 0) & (k % 2 == 0)
        ok &= good
        partner[:, i] = np.where(good, k, 0)
        rows = np.flatnonzero(good)
        partner[rows, k[rows]] = i
    for i in range(2, twoN + 1, 2):
        ok &= partner[:, i] > 0
    return partner, ok


def event_mask(ens: TreeEnsemble, marked: Sequence[int], event) -> np.ndarray:
    marked = list(marked)
    if isinstance(event, AllPaired):
        return _pairing_arrays(ens, marked)[1]
    if isinstance(event, Paired):
        partner, ok = _pairing_arrays(ens, marked)
        for a, b in event.alpha.pairs:
            ok &= partner[:, a] == b
        return ok
    if isinstance(event, SinglePair):
        odd, even = sorted((event.i, event.k), key=lambda x: x % 2 == 0)
        if odd % 2 == 0 or even % 2 == 1:
            return np.zeros(ens.n_trees, dtype=bool)
        start = ens.graph.interior_endpoint(marked[odd - 1])
        if start is None:
            return np.zeros(ens.n_trees, dtype=bool)
        return ens.exits(start) == marked[even - 1]
    if isinstance(event, Visits):
        return _visit_mask(ens, event)
    raise TypeError(f"unknown event {event!r}")


def _visit_mask(ens: TreeEnsemble, ev: Visits) -> np.ndarray:
    g = ens.graph
    start = g.interior_endpoint(ev.e_in)
    verts, exit_edge, length = ens.paths(start)
    ok = exit_edge == ev.e_out
    uv = g.edge_uv
    last_pos = np.full(ens.n_trees, -1)
    for e in ev.visits:
        a, b = int(uv[e, 0]), int(uv[e, 1])
        hit_pos = np.full(ens.n_trees, -1)
        for s in range(verts.shape[1] - 1):
            x, y = verts[:, s], verts[:, s + 1]
            step = ((x == a) & (y == b)) | ((x == b) & (y == a))
            hit_pos = np.where(step & (hit_pos < 0), s, hit_pos)
        ok &= (hit_pos >= 0) & (hit_pos > last_pos)
        last_pos = hit_pos
    return ok


def event_probability(ens: TreeEnsemble, marked: Sequence[int], event) -> Fraction:
    """Exact probability of ``event``; a crossing pattern is reported as impossible (zero)."""
    if isinstance(event, Paired) and not event.alpha.is_planar():
        mask = event_mask(ens, marked, event)
        if mask.any() and ens.weight_num[mask].sum() > 0:
            raise AssertionError("a crossing pattern has positive probability: marked edges out of order?")
        return Fraction(0)
    return ens.probability(event_mask(ens, marked, event))


def pairing_probabilities(ens: TreeEnsemble, marked: Sequence[int]) -> dict[LinkPattern, Fraction]:
    """``{alpha: P[E_alpha]}`` for every planar pattern of ``len(marked)/2`` pairs."""
    marked = list(marked)
    partner, ok = _pairing_arrays(ens, marked)
    N = len(marked) // 2
    out = {a: Fraction(0) for a in enumerate_link_patterns(N)}
    if not ok.any():
        return out
    keys = partner[ok][:, 1::2]
    weights = ens.weight_num[ok]
    uniq, inv = np.unique(keys, axis=0, return_inverse=True)
    sums = np.zeros(len(uniq), dtype=weights.dtype)
    np.add.at(sums, inv.ravel(), weights)
    for row, s in zip(uniq.tolist(), sums.tolist()):
        alpha = LinkPattern(tuple((2 * i + 1, k) for i, k in enumerate(row)))
        if alpha not in out:
            raise AssertionError(f"crossing pattern {alpha} observed: marked edges out of order?")
        out[alpha] = Fraction(int(s), ens.total_num)
    return out


# ---------------------------------------------------------------- branch laws


@dataclass(frozen=True)
class Measure:
    """Conditioning for the growing branch from marked index ``j`` (1-based).

    ``kind`` is ``"N"`` (all paired), ``"alpha"`` (paired as ``alpha``) or
    ``"single"`` (only ``j`` and its ``alpha`` partner are required to connect).
    """

    kind: str
    j: int
    alpha: LinkPattern | None = None

    def event(self):
        if self.kind == "N":
            return AllPaired()
        if self.kind == "alpha":
            return Paired(self.alpha)
        if self.kind == "single":
            return SinglePair(self.j, self.alpha.partner(self.j))
        raise ValueError(self.kind)


@dataclass(eq=False)
class BranchTable:
    """Branch from ``e_j`` in every tree of a conditioned ensemble.

    ``gamma[k]`` lists ``gamma(1), gamma(2), ...`` (interior vertices, then the
    final boundary vertex), padded with ``-1``.
    """

    ens: TreeEnsemble
    marked: tuple[int, ...]
    measure: Measure
    mask: np.ndarray
    gamma: np.ndarray
    weight: np.ndarray

    @property
    def total(self) -> int:
        return int(self.weight.sum())

    def prefix_mask(self, prefix: Sequence[int]) -> np.ndarray:
        t = len(prefix)
        if t > self.gamma.shape[1]:
            return np.zeros(self.gamma.shape[0], dtype=bool)
        return np.all(self.gamma[:, :t] == np.asarray(prefix, dtype=np.int64), axis=1)

    def reachable(self, prefix: Sequence[int]) -> bool:
        return bool(self.weight[self.prefix_mask(prefix)].sum() > 0)

    def step_law(self, prefix: Sequence[int]) -> dict[int, Fraction]:
        pm = self.prefix_mask(prefix)
        tot = int(self.weight[pm].sum())
        if tot == 0:
            raise ImpossibleConditioningError(f"state {tuple(prefix)} is unreachable")
        t = len(prefix)
        nxt = self.gamma[pm, t]
        out: dict[int, Fraction] = {}
        for u in np.unique(nxt):
            w = int(self.weight[pm][nxt == u].sum())
            if w:
                out[int(u)] = Fraction(w, tot)
        return out

    def conditional_probability(self, prefix: Sequence[int], sub_mask: np.ndarray) -> Fraction:
        pm = self.prefix_mask(prefix)
        tot = int(self.weight[pm].sum())
        return Fraction(int(self.weight[pm & sub_mask[self.mask]].sum()), tot)

    def states(self, t: int) -> list[tuple[int, ...]]:
        """Reachable prefixes ``gamma(1..t)`` that are still interior."""
        g = self.ens.graph
        rows = self.gamma[:, :t]
        keep = np.all(rows >= 0, axis=1) & (self.weight > 0)
        keep &= ~np.any(g.is_boundary[np.where(rows >= 0, rows, 0)], axis=1)
        uniq = np.unique(rows[keep], axis=0)
        return [tuple(int(x) for x in r) for r in uniq]


def branch_table(ens: TreeEnsemble, marked: Sequence[int], measure: Measure) -> BranchTable:
    marked = tuple(marked)
    g = ens.graph
    mask = event_mask(ens, marked, measure.event())
    if measure.kind == "single":
        partner = np.zeros((ens.n_trees, len(marked) + 1), dtype=np.int64)
        k = measure.alpha.partner(measure.j)
        partner[:, measure.j] = k
    else:
        partner, _ = _pairing_arrays(ens, marked)
    j = measure.j
    n = g.interior.size
    gamma = np.full((ens.n_trees, n + 1), -1, dtype=np.int64)
    rows = np.flatnonzero(mask)
    if j % 2 == 1:
        verts, _, length = ens.paths(g.interior_endpoint(marked[j - 1]))
        gamma[rows] = verts[rows]
    else:
        for i in range(1, len(marked) + 1, 2):
            sel = rows[partner[rows, j] == i]
            if sel.size == 0:
                continue
            verts, _, length = ens.paths(g.interior_endpoint(marked[i - 1]))
            for r in sel:
                L = int(length[r])
                path = verts[r, :L][::-1]
                gamma[r, :L] = path
                gamma[r, L] = g.boundary_endpoint(marked[i - 1])
    sub = gamma[mask]
    return BranchTable(ens, marked, measure, mask, sub, ens.weight_num[mask])


def branch_step_law(ens: TreeEnsemble, marked: Sequence[int], measure: Measure, prefix: Sequence[int]) -> dict[int, Fraction]:
    """Exact law of the next vertex of the branch from ``e_j`` given its first vertices."""
    return branch_table(ens, marked, measure).step_law(prefix)


# ---------------------------------------------------------------- reports


@dataclass
class OracleReport:
    instance: str
    check: str
    states_checked: int = 0
    all_exact: bool = True
    first_failure: dict | None = None
    notes: dict = field(default_factory=dict)

    def fail(self, **state) -> None:
        if self.all_exact:
            self.first_failure = {k: str(v) for k, v in state.items()}
        self.all_exact = False

    def to_json(self) -> str:
        d = asdict(self)
        if d["first_failure"] is None:
            d.pop("first_failure")
        return json.dumps(d, default=str)


class _SlitCache:
    """Exact kernels and partition functions on the slit graphs along a branch."""

    def __init__(self, graph: PlanarGraph, marked: Sequence[int], j: int, tables: dict[int, CoefficientTable]):
        self.graph = graph
        self.marked = tuple(marked)
        self.j = j
        self.tables = tables
        self._ks: dict[tuple[int, ...], object] = {}

    def view(self, prefix: tuple[int, ...]) -> SlitGraph:
        return slit(self.graph, prefix, self.marked[self.j - 1])

    def ks(self, prefix: tuple[int, ...]):
        if prefix not in self._ks:
            self._ks[prefix] = kernels(self.view(prefix), exact=True)
        return self._ks[prefix]

    def marked_at(self, prefix) -> tuple[int, ...]:
        return self.view(prefix).replace_marked(self.marked)

    def Z(self, prefix, alpha, normalized=False) -> Fraction:
        sg = self.view(prefix)
        table = self.tables[len(self.marked) // 2]
        return discrete_Z(sg, self.marked_at(prefix), alpha, table, ks=self.ks(prefix), normalized=normalized)

    def Z1(self, prefix, k: int, normalized=False) -> Fraction:
        """Single-pair function between the tip and marked index ``k``."""
        sg = self.view(prefix)
        tip = sg.tip_edge
        e_k = self.marked[k - 1]
        pair = [tip, e_k] if self.j % 2 == 1 else [e_k, tip]
        return discrete_Z(sg, pair, LinkPattern(((1, 2),)), self.tables[1], ks=self.ks(prefix), normalized=normalized)

    def poisson_tip(self, prefix, v: int) -> Fraction:
        sg = self.view(prefix)
        return self.ks(prefix).P(v, sg.tip_edge)


def verify_conditional_probability_martingale(
    graph: PlanarGraph,
    marked: Sequence[int],
    alpha: LinkPattern,
    max_t: int,
    tables: dict[int, CoefficientTable],
    j: int = 1,
    ens: TreeEnsemble | None = None,
) -> list[OracleReport]:
    """Pairing probability given the first branch vertices equals the partition-function ratio on the slit graph."""
    ens = ens or enumerate_trees(graph)
    cache = _SlitCache(graph, marked, j, tables)
    alpha_mask = event_mask(ens, marked, Paired(alpha))
    k = alpha.partner(j)
    reports = []
    for kind in ("N", "single"):
        meas = Measure(kind, j, alpha)
        bt = branch_table(ens, marked, meas)
        rep = OracleReport(_describe(graph, marked), f"conditional-probability[{kind}]")
        for t in range(1, max_t + 1):
            for prefix in bt.states(t):
                lhs = bt.conditional_probability(prefix, alpha_mask)
                if kind == "N":
                    rhs = cache.Z(prefix, alpha) / cache.Z(prefix, "total")
                else:
                    rhs = cache.Z(prefix, alpha) / cache.Z1(prefix, k)
                rep.states_checked += 1
                if lhs != rhs:
                    rep.fail(t=t, state=prefix, enumeration=lhs, formula=rhs)
        reports.append(rep)
    return reports


def _describe(graph: _DomainView, marked) -> str:
    return f"V={graph.n_vertices},interior={graph.interior.size},marked={list(marked)}"


MARTINGALES = ("M1", "Malpha", "MN", "tildeMN", "tildeMalpha")


def _stopping_rule(
    graph: _DomainView,
    cache: "_SlitCache",
    bt: BranchTable,
    ref: BranchTable | None,
    alpha: LinkPattern,
    unreachable_triggers: bool,
) -> Callable[[tuple[int, ...]], bool]:
    """Whether the stopping time fires at the state ``prefix`` (time ``len(prefix)``).

    It fires when a next step possible under the reference law ``ref`` leaves
    no tree realising ``alpha``.  With ``unreachable_triggers`` it also fires
    on states, or working-law next states, that ``ref`` cannot reach.
    """
    if ref is None:
        return lambda prefix: False
    memo: dict[tuple[int, ...], bool] = {}

    def triggered(prefix: tuple[int, ...]) -> bool:
        if prefix in memo:
            return memo[prefix]
        if not ref.reachable(prefix):
            out = unreachable_triggers
        else:
            steps = [u for u in ref.step_law(prefix) if not graph.is_boundary[u]]
            out = any(cache.Z(prefix + (u,), alpha) == 0 for u in steps)
            if not out and unreachable_triggers:
                out = any(
                    not graph.is_boundary[u] and not ref.reachable(prefix + (u,)) for u in bt.step_law(prefix)
                )
        memo[prefix] = out
        return out

    return triggered


def verify_branch_martingale(
    graph: PlanarGraph,
    marked: Sequence[int],
    which: str,
    alpha: LinkPattern,
    beta: LinkPattern,
    max_t: int,
    tables: dict[int, CoefficientTable],
    j: int = 1,
    v_list: Sequence[int] | None = None,
    w: int | None = None,
    ens: TreeEnsemble | None = None,
    unreachable_triggers: bool = True,
) -> OracleReport:
    """One-step conditional expectation check of a branch martingale on every reachable state.

    ``which`` is one of :data:`MARTINGALES`.  The growing branch starts from
    marked index ``j``; once it steps onto the boundary the process is frozen.
    States at or after the relevant stopping time are counted as stopped, and
    the observable at a vertex ``v`` is only compared while the branch has not
    yet reached ``v``.
    """
    if which not in MARTINGALES:
        raise ValueError(which)
    marked = tuple(marked)
    ens = ens or enumerate_trees(graph)
    cache = _SlitCache(graph, marked, j, tables)
    v_list = list(v_list) if v_list is not None else list(range(graph.n_vertices))
    w = int(graph.interior[0]) if w is None else w
    ks0 = cache.ks(())
    k = alpha.partner(j)
    pw_k = ks0.P(w, marked[k - 1])
    pw_all = math.prod((ks0.P(w, marked[i - 1]) for i in range(1, len(marked) + 1) if i != j), start=Fraction(1))

    def poisson_vec(prefix):
        return tuple(cache.poisson_tip(prefix, v) for v in v_list)

    values: dict[str, Callable] = {
        "M1": lambda p: tuple(x / cache.Z1(p, k, normalized=True) * pw_k for x in poisson_vec(p)),
        "Malpha": lambda p: tuple(x / cache.Z(p, alpha, normalized=True) * pw_all for x in poisson_vec(p)),
        "MN": lambda p: tuple(x / cache.Z(p, "total", normalized=True) * pw_all for x in poisson_vec(p)),
        "tildeMN": lambda p: (cache.Z(p, beta, normalized=True) / cache.Z(p, "total", normalized=True),),
        "tildeMalpha": lambda p: (cache.Z(p, beta, normalized=True) / cache.Z(p, alpha, normalized=True),),
    }
    setup = {
        "M1": ("single", None),
        "Malpha": ("alpha", "T"),
        "MN": ("N", "T"),
        "tildeMN": ("N", None),
        "tildeMalpha": ("alpha", "TN"),
    }[which]
    measure = Measure(setup[0], j, alpha)
    bt = branch_table(ens, marked, measure)
    stop_ref = {
        "T": branch_table(ens, marked, Measure("single", j, alpha)),
        "TN": branch_table(ens, marked, Measure("N", j, alpha)),
    }
    value = values[which]
    rep = OracleReport(_describe(graph, marked), f"{which}[alpha={alpha},beta={beta},j={j}]")
    rep.notes = {"stopped_states": 0, "unstopped_would_fail": 0, "frozen_terminal_steps": 0, "pocketed_vertex_states": 0}
    triggered = _stopping_rule(graph, cache, bt, stop_ref.get(setup[1]), alpha, unreachable_triggers)

    for t in range(1, max_t + 1):
        for prefix in bt.states(t):
            if any(triggered(prefix[:s]) for s in range(1, t)):
                rep.notes["stopped_states"] += 1
                continue
            law = bt.step_law(prefix)
            m_t = value(prefix)
            expect = [Fraction(0)] * len(m_t)
            for u, p in law.items():
                if graph.is_boundary[u]:
                    nxt = m_t
                    rep.notes["frozen_terminal_steps"] += 1
                else:
                    nxt = value(prefix + (u,))
                expect = [a + p * b for a, b in zip(expect, nxt)]
            # a vertex stops contributing once the branch has reached it or
            # walled it into a pocket the branch cannot enter
            pocket = _pocketed(graph, prefix, law)
            hit = set(prefix) | {graph.boundary_endpoint(marked[j - 1])} | pocket
            per_vertex = len(m_t) == len(v_list)
            live = [i for i, v in enumerate(v_list) if v not in hit] if per_vertex else range(len(m_t))
            if per_vertex:
                rep.notes["pocketed_vertex_states"] += sum(v in pocket for v in v_list)
            ok = all(expect[i] == m_t[i] for i in live)
            if triggered(prefix):
                rep.notes["stopped_states"] += 1
                if not ok:
                    rep.notes["unstopped_would_fail"] += 1
                continue
            rep.states_checked += 1
            if not ok:
                rep.fail(t=t, state=prefix, expected_next=expect, current=m_t)
    return rep


def _pocketed(graph: _DomainView, prefix: tuple[int, ...], law: dict) -> set[int]:
    """Interior vertices sharing a component of the unvisited interior with a tip neighbour of zero step probability."""
    seen = set(prefix)
    blocked = [u for _, u in graph.neighbours(prefix[-1]) if not graph.is_boundary[u] and u not in seen and not law.get(u)]
    out: set[int] = set()
    for start in blocked:
        if start in out:
            continue
        stack = [start]
        out.add(start)
        while stack:
            x = stack.pop()
            for _, y in graph.neighbours(x):
                if not graph.is_boundary[y] and y not in seen and y not in out:
                    out.add(y)
                    stack.append(y)
    return out


def verify_girsanov_closure(
    graph: PlanarGraph,
    marked: Sequence[int],
    alpha: LinkPattern,
    max_t: int,
    tables: dict[int, CoefficientTable],
    j: int = 1,
    beta: LinkPattern | None = None,
    ens: TreeEnsemble | None = None,
    unreachable_triggers: bool = True,
) -> OracleReport:
    """Reweight the stopped ratio ``Z_beta/Z_alpha`` (a martingale for the alpha-conditioned law) by ``Z_alpha/Z_N``.

    The product is checked to be a one-step martingale for the all-paired law
    on every reachable state.
    """
    marked = tuple(marked)
    ens = ens or enumerate_trees(graph)
    cache = _SlitCache(graph, marked, j, tables)
    beta = beta or enumerate_link_patterns(len(marked) // 2)[0]
    bt_alpha = branch_table(ens, marked, Measure("alpha", j, alpha))
    bt_n = branch_table(ens, marked, Measure("N", j, alpha))
    triggered = _stopping_rule(graph, cache, bt_alpha, bt_n, alpha, unreachable_triggers)

    def stopped_ratio(prefix):
        t = next((s for s in range(1, len(prefix)) if triggered(prefix[:s])), len(prefix))
        p = prefix[:t]
        return cache.Z(p, beta, normalized=True) / cache.Z(p, alpha, normalized=True)

    def transformed(prefix):
        za = cache.Z(prefix, alpha)
        if za == 0:
            return Fraction(0)
        return stopped_ratio(prefix) * za / cache.Z(prefix, "total")

    rep = OracleReport(_describe(graph, marked), f"girsanov-closure[alpha={alpha},beta={beta},j={j}]")
    for t in range(1, max_t + 1):
        for prefix in bt_n.states(t):
            law = bt_n.step_law(prefix)
            cur = transformed(prefix)
            nxt = sum((p * (cur if graph.is_boundary[u] else transformed(prefix + (u,))) for u, p in law.items()), start=Fraction(0))
            rep.states_checked += 1
            if nxt != cur:
                rep.fail(t=t, state=prefix, expected_next=nxt, current=cur)
    return rep


def verify_tower_property(ens: TreeEnsemble, marked: Sequence[int], alpha: LinkPattern, j: int, max_t: int) -> OracleReport:
    """``E[E[1{E_alpha} | F_{t+1}] | F_t] = E[1{E_alpha} | F_t]`` under the all-paired law."""
    bt = branch_table(ens, marked, Measure("N", j, alpha))
    amask = event_mask(ens, marked, Paired(alpha))
    rep = OracleReport(_describe(ens.graph, marked), "tower")
    for t in range(1, max_t + 1):
        for prefix in bt.states(t):
            cur = bt.conditional_probability(prefix, amask)
            law = bt.step_law(prefix)
            nxt = Fraction(0)
            for u, p in law.items():
                q = cur if ens.graph.is_boundary[u] else bt.conditional_probability(prefix + (u,), amask)
                nxt += p * q
            rep.states_checked += 1
            if nxt != cur:
                rep.fail(t=t, state=prefix, lhs=nxt, rhs=cur)
    return rep


# ---------------------------------------------------------------- boundary visits


def visit_boundary_edges(graph: PlanarGraph, edge: int) -> tuple[int, int]:
    """Boundary edges ``(f_u, f_v)`` at the endpoints of a boundary-neighbouring edge.

    They are chosen as the unique pair adjacent in the counterclockwise boundary order.
    """
    u, v = (int(x) for x in graph.edge_uv[edge])
    n = len(graph.boundary_edge_order)
    pos = {e: i for i, e in enumerate(graph.boundary_edge_order)}
    found = [
        (a, b)
        for a in graph.boundary_edges_at(u)
        for b in graph.boundary_edges_at(v)
        if (pos[a] - pos[b]) % n in (1, n - 1)
    ]
    if len(found) != 1:
        raise GraphError(f"edge {edge} has {len(found)} candidate pairs of adjacent boundary edges")
    return found[0]


@dataclass(frozen=True)
class VisitRelabeling:
    """Marked edges and pattern of the cut configuration for a visit order."""

    marked: tuple[int, ...]
    alpha: LinkPattern
    segments: tuple[tuple[int, int], ...]


def visit_relabeling(graph: PlanarGraph, e_in: int, e_out: int, visits: Sequence[int], directions: Sequence[bool]) -> VisitRelabeling:
    """Cut the branch at each visit.

    ``directions[m]`` is ``True`` when the ``m``-th visited edge is traversed
    from its first endpoint ``edge_uv[e, 0]`` to the second.
    """
    ends = []
    for e, fwd in zip(visits, directions):
        fu, fv = visit_boundary_edges(graph, e)
        ends.append((fu, fv) if fwd else (fv, fu))
    segs = []
    prev = e_in
    for first, second in ends:
        segs.append((prev, first))
        prev = second
    segs.append((prev, e_out))
    edges = [e_in] + [x for pair in ends for x in pair] + [e_out]
    if len(set(edges)) != len(edges):
        raise GraphError("visit edges share boundary edges with each other or with the end edges")
    ordered = list(graph.ccw_sorted(edges))
    r = ordered.index(e_in)
    ordered = ordered[r:] + ordered[:r]
    label = {e: i + 1 for i, e in enumerate(ordered)}
    alpha = LinkPattern(tuple((label[a], label[b]) for a, b in segs))
    return VisitRelabeling(tuple(ordered), alpha, tuple(segs))


def _visit_directions(ens: TreeEnsemble, ev: Visits, mask: np.ndarray) -> list[tuple[bool, ...]]:
    g = ens.graph
    verts, _, _ = ens.paths(g.interior_endpoint(ev.e_in))
    out = []
    for r in np.flatnonzero(mask):
        path = [int(x) for x in verts[r] if x >= 0]
        dirs = []
        for e in ev.visits:
            a, b = (int(x) for x in g.edge_uv[e])
            i = next(s for s in range(len(path) - 1) if {path[s], path[s + 1]} == {a, b})
            dirs.append(path[i] == a)
        out.append(tuple(dirs))
    return out


def cut_tree(graph: PlanarGraph, edges: Sequence[int], relabel: VisitRelabeling, visits: Sequence[int]) -> tuple[int, ...]:
    """Remove the visited edges and attach every segment through its even-labelled end."""
    label = {e: i + 1 for i, e in enumerate(relabel.marked)}
    out = set(edges) - set(visits)
    for a, b in relabel.segments:
        odd_end, even_end = (a, b) if label[a] % 2 else (b, a)
        out.discard(odd_end)
        out.add(even_end)
    return tuple(sorted(out))


def verify_boundary_visit_bijection(
    graph: PlanarGraph,
    e_in: int,
    e_out: int,
    visits: Sequence[int],
    tables: dict[int, CoefficientTable] | None = None,
    ens: TreeEnsemble | None = None,
) -> OracleReport:
    """Exact equality of the visit probability and the cut pairing probability, tree by tree."""
    ens = ens or enumerate_trees(graph)
    visits = tuple(visits)
    ev = Visits(e_in, e_out, visits)
    mask = event_mask(ens, [], ev)
    rep = OracleReport(_describe(graph, [e_in, e_out]), f"boundary-visits[{list(visits)}]")
    dirs = sorted(set(_visit_directions(ens, ev, mask)))
    if len(dirs) > 1:
        rep.fail(reason="visit directions are not forced", directions=dirs)
        return rep
    if dirs:
        relabel = visit_relabeling(graph, e_in, e_out, visits, dirs[0])
    else:
        relabel = None
        for cand in _all_directions(len(visits)):
            r = visit_relabeling(graph, e_in, e_out, visits, cand)
            if r.alpha.is_planar():
                relabel = r
                break
        if relabel is None:
            relabel = visit_relabeling(graph, e_in, e_out, visits, (True,) * len(visits))
    z_visit = ens.probability(mask)
    z_alpha = event_probability(ens, relabel.marked, Paired(relabel.alpha))
    rep.notes = {
        "Z_visit": str(z_visit),
        "Z_alpha": str(z_alpha),
        "alpha": str(relabel.alpha),
        "relabelled_edges": list(relabel.marked),
    }
    if z_visit != z_alpha:
        rep.fail(reason="probabilities differ", Z_visit=z_visit, Z_alpha=z_alpha)
    if tables and relabel.alpha.is_planar() and len(relabel.marked) // 2 in tables:
        zf = discrete_Z(graph, relabel.marked, relabel.alpha, tables[len(relabel.marked) // 2])
        rep.notes["Z_alpha_formula"] = str(zf)
        if zf != z_visit:
            rep.fail(reason="formula differs", Z_formula=zf, Z_visit=z_visit)
    target_mask = event_mask(ens, relabel.marked, Paired(relabel.alpha)) if relabel.alpha.is_planar() else np.zeros(ens.n_trees, bool)
    index = {ens.edge_sets[k]: k for k in np.flatnonzero(target_mask)}
    image = set()
    for k in np.flatnonzero(mask):
        cut = cut_tree(graph, ens.edge_sets[k], relabel, visits)
        rep.states_checked += 1
        tgt = index.get(cut)
        if tgt is None:
            rep.fail(reason="image outside the pairing event", tree=ens.edge_sets[k], image=cut)
            continue
        if ens.weight_num[tgt] != ens.weight_num[k]:
            rep.fail(reason="weight not preserved", tree=ens.edge_sets[k])
        if tgt in image:
            rep.fail(reason="map not injective", tree=ens.edge_sets[k])
        image.add(tgt)
    if len(image) != len(index):
        rep.fail(reason="map not surjective", image=len(image), target=len(index))
    return rep


def _all_directions(n: int):
    for bits in range(2**n):
        yield tuple(bool(bits >> i & 1) for i in range(n))
