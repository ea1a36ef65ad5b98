"""Random walks, Wilson's algorithm and conditioned spanning-tree branches."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numba as nb
import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.sparse.linalg import splu

from .graph import GraphError, PlanarGraph, WiredView, _DomainView
from .harmonic import GreenSolver, interior_laplacian
from .linkpat import (
    CoefficientTable,
    LinkPattern,
    enumerate_link_patterns,
    excursion_determinant,
)


class RejectionBudgetError(RuntimeError):
    """Too many rejected proposals."""

    def __init__(self, message: str, acceptance_rate: float):
        super().__init__(f"{message} (empirical acceptance rate {acceptance_rate:.3g})")
        self.acceptance_rate = acceptance_rate


class RngStream:
    """Reproducible random stream identified by ``(seed, stream_id)``."""

    def __init__(self, seed: int = 0, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.gen = np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))))

    def spawn(self, n: int) -> list[RngStream]:
        """``n`` independent streams with ids ``stream_id * n + k`` under a derived seed."""
        base = int(np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, 1)).generate_state(1)[0])
        return [RngStream(base, k) for k in range(n)]

    def numba_seed(self) -> int:
        return int(self.gen.integers(0, 2**31 - 1))


# ---------------------------------------------------------------- walk tables


@dataclass(frozen=True, eq=False)
class WalkTables:
    """Transition tables of a (possibly h-transformed) random walk, in CSR form."""

    indptr: np.ndarray
    nbr: np.ndarray
    edge: np.ndarray
    cum: np.ndarray
    stop: np.ndarray


def walk_tables(graph: _DomainView, h: np.ndarray | None = None) -> WalkTables:
    """Walk with step probabilities ``w(e)/w(v)``, or ``w(e) h(u) / sum`` when ``h`` is given."""
    uv = np.asarray(graph.edge_uv, dtype=np.int64)
    m = uv.shape[0]
    src = np.concatenate([uv[:, 0], uv[:, 1]])
    dst = np.concatenate([uv[:, 1], uv[:, 0]])
    eid = np.concatenate([np.arange(m), np.arange(m)])
    w = np.concatenate([graph.weight_array, graph.weight_array])
    if h is not None:
        w = w * np.asarray(h, dtype=float)[dst]
    order = np.lexsort((dst, src))
    src, dst, eid, w = src[order], dst[order], eid[order], w[order]
    n = graph.n_vertices
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    indptr = np.cumsum(indptr)
    csum = np.cumsum(w)
    before = np.where(indptr[src] > 0, csum[np.maximum(indptr[src] - 1, 0)], 0.0)
    before = np.where(indptr[src] == 0, 0.0, before)
    total = np.zeros(n)
    np.add.at(total, src, w)
    with np.errstate(invalid="ignore", divide="ignore"):
        cum = (csum - before) / total[src]
    cum = np.nan_to_num(cum)
    return WalkTables(indptr, dst, eid, cum, np.ascontiguousarray(graph.is_boundary, dtype=np.bool_))


@nb.njit(cache=True)
def _seed(s):
    np.random.seed(s)


@nb.njit(cache=True)
def _step(v, indptr, cum):
    r = np.random.random()
    k = indptr[v]
    hi = indptr[v + 1] - 1
    while k < hi and cum[k] < r:
        k += 1
    return k


@nb.njit(cache=True)
def _exit_counts(start, n, indptr, nbr, edge, cum, stop, n_edges):
    counts = np.zeros(n_edges, dtype=np.int64)
    for _ in range(n):
        v = start
        while True:
            k = _step(v, indptr, cum)
            u = nbr[k]
            if stop[u]:
                counts[edge[k]] += 1
                break
            v = u
    return counts


@nb.njit(cache=True)
def _lerw(start, indptr, nbr, cum, stop, nxt, buf):
    """Loop-erased walk from ``start`` until ``stop``; fills ``buf`` and returns (length, last arc)."""
    v = start
    while not stop[v]:
        k = _step(v, indptr, cum)
        nxt[v] = k
        v = nbr[k]
    v = start
    length = 0
    last = -1
    while not stop[v]:
        buf[length] = v
        length += 1
        last = nxt[v]
        v = nbr[last]
    buf[length] = v
    return length + 1, last


@nb.njit(cache=True)
def _wilson(order, indptr, nbr, edge, cum, stop):
    n = stop.size
    in_tree = stop.copy()
    nxt = np.full(n, -1, dtype=np.int64)
    parent_edge = np.full(n, -1, dtype=np.int64)
    parent = np.full(n, -1, dtype=np.int64)
    for v0 in order:
        v = v0
        while not in_tree[v]:
            k = _step(v, indptr, cum)
            nxt[v] = k
            v = nbr[k]
        v = v0
        while not in_tree[v]:
            k = nxt[v]
            parent_edge[v] = edge[k]
            parent[v] = nbr[k]
            in_tree[v] = True
            v = nbr[k]
    return parent_edge, parent


@nb.njit(cache=True)
def _multibranch_batch(n_accept, max_attempts, starts, even_slot, indptr, nbr, edge, cum, stop):
    """Repeated sequential loop-erased branches from ``starts``; keep draws where all exit through even edges."""
    n = stop.size
    nb_ = starts.size
    exits = np.full((n_accept, nb_), -1, dtype=np.int64)
    nxt = np.full(n, -1, dtype=np.int64)
    buf = np.empty(n + 1, dtype=np.int64)
    accepted = 0
    attempts = 0
    while accepted < n_accept and attempts < max_attempts:
        attempts += 1
        in_tree = stop.copy()
        ok = True
        for b in range(nb_):
            if in_tree[starts[b]]:
                ok = False
                break
            length, last = _lerw(starts[b], indptr, nbr, cum, in_tree, nxt, buf)
            end = buf[length - 1]
            if not stop[end] or even_slot[edge[last]] < 0:
                ok = False
                break
            exits[accepted, b] = edge[last]
            for i in range(length - 1):
                in_tree[buf[i]] = True
        if ok:
            accepted += 1
    return exits[:accepted], attempts


# ---------------------------------------------------------------- trees


@dataclass(frozen=True, eq=False)
class SpanningTree:
    """``parent_edge[v]`` is the first edge from ``v`` towards the wired root (``-1`` on the boundary)."""

    graph: _DomainView
    parent_edge: np.ndarray
    parent: np.ndarray

    @property
    def edges(self) -> tuple[int, ...]:
        return tuple(sorted(int(e) for e in self.parent_edge if e >= 0))

    def branch(self, v: int) -> list[int]:
        """Vertices from ``v`` to the first boundary vertex."""
        path = [int(v)]
        while not self.graph.is_boundary[path[-1]]:
            path.append(int(self.parent[path[-1]]))
            if len(path) > self.graph.n_vertices + 1:
                raise AssertionError("parent pointers contain a cycle")
        return path

    def exit_edge(self, v: int) -> int:
        path = self.branch(v)
        return int(self.parent_edge[path[-2]])


def wilson_ust(graph: _DomainView, rng: RngStream, tables: WalkTables | None = None) -> SpanningTree:
    """Wired spanning tree with probability proportional to the product of edge weights."""
    t = tables or walk_tables(graph)
    _seed(rng.numba_seed())
    order = np.asarray(graph.interior, dtype=np.int64)
    pe, par = _wilson(order, t.indptr, t.nbr, t.edge, t.cum, t.stop)
    return SpanningTree(graph, pe, par)


def random_walk_exits(graph: _DomainView, start: int, n: int, rng: RngStream, tables: WalkTables | None = None) -> np.ndarray:
    """Exit-edge counts of ``n`` simple random walks from ``start``, indexed by edge id."""
    if graph.is_boundary[start]:
        raise GraphError("walks start at interior vertices")
    t = tables or walk_tables(graph)
    _seed(rng.numba_seed())
    return _exit_counts(int(start), int(n), t.indptr, t.nbr, t.edge, t.cum, t.stop, graph.edge_uv.shape[0])


def loop_erased_walk(graph: _DomainView, start: int, rng: RngStream, tables: WalkTables | None = None) -> tuple[list[int], int]:
    """Loop-erased walk from ``start`` to the boundary: ``(vertices, exit edge)``."""
    t = tables or walk_tables(graph)
    _seed(rng.numba_seed())
    nxt = np.full(graph.n_vertices, -1, dtype=np.int64)
    buf = np.empty(graph.n_vertices + 1, dtype=np.int64)
    length, last = _lerw(int(start), t.indptr, t.nbr, t.cum, t.stop, nxt, buf)
    return [int(x) for x in buf[:length]], int(t.edge[last])


# ---------------------------------------------------------------- multi-branch rejection


@dataclass(frozen=True)
class MultiBranch:
    """Branches from the odd marked edges; ``paths[i]`` runs from the boundary vertex of the odd edge to that of its partner."""

    paths: tuple[tuple[int, ...], ...]
    alpha: LinkPattern
    attempts: int = 1


def _pattern_from_exits(marked: Sequence[int], exits: Sequence[int]) -> LinkPattern:
    slot = {e: i + 1 for i, e in enumerate(marked)}
    return LinkPattern(tuple((2 * b + 1, slot[int(e)]) for b, e in enumerate(exits)))


def _odd_starts(graph: _DomainView, marked: Sequence[int]) -> np.ndarray:
    starts = [graph.interior_endpoint(e) for e in marked[0::2]]
    if any(s is None for s in starts):
        raise GraphError("marked edges must be boundary edges")
    return np.asarray(starts, dtype=np.int64)


def _even_slots(graph: _DomainView, marked: Sequence[int]) -> np.ndarray:
    slot = np.full(graph.edge_uv.shape[0], -1, dtype=np.int64)
    for i, e in enumerate(marked[1::2]):
        slot[e] = i
    return slot


def sample_multibranch(
    graph: _DomainView,
    marked: Sequence[int],
    rng: RngStream,
    alpha: LinkPattern | None = None,
    max_rejects: int = 1_000_000,
    tables: WalkTables | None = None,
) -> MultiBranch:
    """Exact sample of the branches under the all-paired law (or pattern ``alpha``) by rejection."""
    marked = list(marked)
    t = tables or walk_tables(graph)
    starts = _odd_starts(graph, marked)
    even = _even_slots(graph, marked)
    attempts = 0
    while attempts < max_rejects:
        tree = wilson_ust(graph, rng, t)
        attempts += 1
        paths, exits = [], []
        for e, s in zip(marked[0::2], starts):
            path = tree.branch(int(s))
            paths.append(tuple([graph.boundary_endpoint(e)] + path))
            exits.append(int(tree.parent_edge[path[-2]]))
        if any(even[x] < 0 for x in exits) or len(set(exits)) != len(exits):
            continue
        flat = [v for p in paths for v in p[1:-1]]
        if len(flat) != len(set(flat)):
            continue
        pat = _pattern_from_exits(marked, exits)
        if alpha is not None and pat != alpha:
            continue
        return MultiBranch(tuple(paths), pat, attempts)
    raise RejectionBudgetError("reject budget exhausted", 0.0)


@dataclass(frozen=True)
class PatternEstimate:
    alpha: LinkPattern
    count: int
    p_hat: float
    stderr: float


@dataclass
class PatternEstimates:
    rows: list[PatternEstimate]
    proposals: int
    accepted: int

    @property
    def acceptance_rate(self) -> float:
        return self.accepted / self.proposals if self.proposals else 0.0

    def p(self, alpha: LinkPattern) -> float:
        return next(r.p_hat for r in self.rows if r.alpha == alpha)

    def stderr(self, alpha: LinkPattern) -> float:
        return next(r.stderr for r in self.rows if r.alpha == alpha)


def _estimates(N: int, patterns: Sequence[LinkPattern], proposals: int) -> PatternEstimates:
    n = len(patterns)
    rows = []
    for a in enumerate_link_patterns(N):
        c = sum(1 for p in patterns if p == a)
        p = c / n if n else float("nan")
        rows.append(PatternEstimate(a, c, p, math.sqrt(p * (1 - p) / n) if n else float("nan")))
    return PatternEstimates(rows, proposals, n)


def estimate_link_pattern_probs(
    graph: _DomainView,
    marked: Sequence[int],
    samples: int,
    rng: RngStream,
    method: str = "rejection",
    max_attempts: int | None = None,
    table: CoefficientTable | None = None,
) -> PatternEstimates:
    """Empirical pairing frequencies given that all branches pair up.

    ``method="rejection"`` grows the odd branches by loop-erased walks (the
    first steps of Wilson's algorithm) and keeps the draws in the all-paired
    event.  ``method="sequential"`` uses :class:`ConditionedBranchSampler`,
    which is exact and practical when the event is rare.
    """
    marked = list(marked)
    N = len(marked) // 2
    if samples < 1:
        raise ValueError("samples must be positive")
    if method == "rejection":
        t = walk_tables(graph)
        starts = _odd_starts(graph, marked)
        even = _even_slots(graph, marked)
        _seed(rng.numba_seed())
        budget = max_attempts or 10_000 * samples
        exits, attempts = _multibranch_batch(samples, budget, starts, even, t.indptr, t.nbr, t.edge, t.cum, t.stop)
        if exits.shape[0] < samples:
            raise RejectionBudgetError("reject budget exhausted", exits.shape[0] / attempts)
        pats = [_pattern_from_exits(marked, row) for row in exits]
        return _estimates(N, pats, int(attempts))
    if method == "sequential":
        sampler = ConditionedBranchSampler(graph, marked, table=table)
        pats, proposals = [], 0
        for _ in range(samples):
            s = sampler.sample(rng)
            pats.append(s.alpha)
            proposals += s.proposals
        return _estimates(N, pats, proposals)
    raise ValueError(f"unknown method {method!r}")


def write_estimates_csv(est: PatternEstimates, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "count", "p_hat", "stderr"])
        for r in est.rows:
            w.writerow([str(r.alpha), r.count, f"{r.p_hat:.10g}", f"{r.stderr:.10g}"])


def write_branches_jsonl(samples: Sequence[MultiBranch], path: str | Path) -> None:
    with open(path, "w") as fh:
        for s in samples:
            fh.write(json.dumps({"alpha": str(s.alpha), "paths": [list(p) for p in s.paths]}) + "\n")


# ---------------------------------------------------------------- exact sequential conditioning


@dataclass(frozen=True)
class ConditionedSample:
    """Branch from the chosen marked edge, boundary vertex to boundary vertex, with the full pattern."""

    path: tuple[int, ...]
    alpha: LinkPattern
    proposals: int


def _h_transform(graph: _DomainView, targets: Sequence[int], solver: GreenSolver | None = None) -> np.ndarray:
    """Probability that a walk from each vertex exits through one of ``targets``."""
    solver = solver or GreenSolver(graph)
    ends = [graph.interior_endpoint(e) for e in targets]
    h = np.zeros(graph.n_vertices)
    live = [(e, v) for e, v in zip(targets, ends) if v is not None]
    if live:
        cols = solver.columns([v for _, v in live])
        for k, (e, _) in enumerate(live):
            h += graph.weight_array[e] * cols[:, k]
    for e in targets:
        if graph.interior_endpoint(e) is not None:
            h[graph.boundary_endpoint(e)] = 1.0
    return h


def _flatten(graph: _DomainView, extra=()) -> WiredView | PlanarGraph:
    if isinstance(graph, WiredView):
        return WiredView(graph.base, graph.extra | frozenset(extra))
    if extra:
        return WiredView(graph, frozenset(extra))
    return graph


class ConditionedBranchSampler:
    """Exact sampler for the branch from marked edge ``j`` given that all branches pair (or pair as ``alpha``).

    The branch is drawn as a loop-erased walk conditioned to exit through an
    admissible partner edge, then accepted with probability proportional to
    the chance that the remaining marked edges still pair up in the slit
    domain.  That chance is a partition function of the remaining edges,
    computed from Green-function Schur complements.  For the remaining
    single pair the excursion kernel in the unslit domain bounds it, which
    keeps the acceptance rate high; otherwise the bound is 1.
    """

    def __init__(
        self,
        graph: _DomainView,
        marked: Sequence[int],
        alpha: LinkPattern | None = None,
        j: int = 1,
        table: CoefficientTable | None = None,
        tables: dict[int, CoefficientTable] | None = None,
        dense_limit: int = 6000,
    ):
        from .linkpat import default_table

        self.graph = _flatten(graph)
        self.marked = tuple(int(e) for e in marked)
        self.N = len(self.marked) // 2
        self.alpha = alpha
        self.j = j
        if alpha is not None and (alpha.N != self.N or not alpha.is_planar()):
            raise ValueError("alpha must be a planar pattern on the marked edges")
        self._tables = dict(tables or {})
        if table is not None:
            self._tables[table.N] = table
        self._default_table = default_table
        if alpha is not None:
            cand = [alpha.partner(j)]
        else:
            cand = [k for k in range(1, 2 * self.N + 1) if (k - j) % 2 == 1]
        self.candidates = cand
        targets = [self.marked[k - 1] for k in cand]
        self._solver = GreenSolver(self.graph)
        self._h = _h_transform(self.graph, targets, self._solver)
        self._walk = walk_tables(self.graph, self._h)
        start = self.graph.interior_endpoint(self.marked[j - 1])
        if start is None:
            raise GraphError("start edge is not a boundary edge")
        self._start = start
        if self._h[start] <= 0:
            raise GraphError("no admissible exit is reachable")
        self._green = None
        if self.N > 1 and self.graph.interior.size <= dense_limit:
            lu = splu(interior_laplacian(self.graph))
            self._green = lu.solve(np.eye(self.graph.interior.size))
            self._green = 0.5 * (self._green + self._green.T)
        self._bound = self._acceptance_bound()

    def table(self, m: int) -> CoefficientTable:
        if m not in self._tables:
            self._tables[m] = self._default_table(m)
        return self._tables[m]

    def _rest(self, k: int) -> tuple[list[int], LinkPattern | None]:
        """Remaining marked indices after pairing ``j`` with ``k``, and the induced pattern."""
        rest = [i for i in range(1, 2 * self.N + 1) if i not in (self.j, k)]
        if self.alpha is None:
            return rest, None
        rank = {i: r + 1 for r, i in enumerate(rest)}
        return rest, LinkPattern(tuple((rank[a], rank[b]) for a, b in self.alpha.pairs if a in rank))

    def _acceptance_bound(self) -> float:
        if self.N == 1:
            return 1.0
        if self.N > 2:
            return 1.0
        best = 0.0
        for k in self.candidates:
            rest, _ = self._rest(k)
            z = self._pair_value([self.marked[i - 1] for i in rest], ())
            best = max(best, z)
        return best

    def _kernel_matrix(self, edges: Sequence[int], path: Sequence[int]) -> np.ndarray:
        g = self.graph
        ends = [g.interior_endpoint(e) for e in edges]
        blocked = set(path)
        idx = g.interior_index
        live = [i for i, v in enumerate(ends) if v is not None and v not in blocked]
        K = np.zeros((len(edges), len(edges)))
        if not live:
            return K
        rows = np.array([idx[ends[i]] for i in live])
        pidx = np.array([idx[v] for v in path], dtype=np.int64)
        if self._green is not None:
            G = self._green
            block = G[np.ix_(rows, rows)]
            if pidx.size:
                cf = cho_factor(G[np.ix_(pidx, pidx)])
                cross = G[np.ix_(pidx, rows)]
                block = block - cross.T @ cho_solve(cf, cross)
        else:
            view = _flatten(self.graph, path)
            cols = GreenSolver(view).columns([ends[i] for i in live])
            block = cols[[ends[i] for i in live]]
        K[np.ix_(live, live)] = block
        return K

    def _pair_value(self, edges: Sequence[int], path: Sequence[int], pattern: LinkPattern | str = "total") -> float:
        """Pairing probability of ``edges`` (ccw) in the domain with ``path`` wired to the boundary."""
        K = self._kernel_matrix(edges, path)
        m = len(edges) // 2
        table = self.table(m)
        feats = [excursion_determinant(lambda a, b: K[a - 1, b - 1], beta, list(range(1, 2 * m + 1))) for beta in table.patterns]
        rows = table.coeffs if pattern == "total" else (table.row(pattern),)
        val = sum(float(c) * f for row in rows for c, f in zip(row, feats))
        w_even = math.prod(self.graph.weight_array[e] for e in edges[1::2])
        return max(float(val) * w_even, 0.0)

    def _propose(self, rng: RngStream) -> tuple[list[int], int]:
        t = self._walk
        nxt = np.full(self.graph.n_vertices, -1, dtype=np.int64)
        buf = np.empty(self.graph.n_vertices + 1, dtype=np.int64)
        length, last = _lerw(self._start, t.indptr, t.nbr, t.cum, t.stop, nxt, buf)
        return [int(x) for x in buf[:length]], int(t.edge[last])

    def sample(self, rng: RngStream, max_proposals: int = 1_000_000) -> ConditionedSample:
        _seed(rng.numba_seed())
        slot = {e: i + 1 for i, e in enumerate(self.marked)}
        first = self.graph.boundary_endpoint(self.marked[self.j - 1])
        for proposals in range(1, max_proposals + 1):
            path, exit_edge = self._propose(rng)
            k = slot[exit_edge]
            if self.N == 1:
                return ConditionedSample(tuple([first] + path), LinkPattern(((1, 2),)), proposals)
            rest, sub = self._rest(k)
            rest_edges = [self.marked[i - 1] for i in rest]
            inner = path[:-1]
            q = self._pair_value(rest_edges, inner, "total" if sub is None else sub)
            if q > self._bound * (1 + 1e-9):
                raise AssertionError("acceptance bound violated")
            if rng.gen.random() * self._bound >= q:
                continue
            pairs = [(min(self.j, k), max(self.j, k))]
            if sub is None:
                sub = self._sample_rest(rest_edges, inner, rng)
            pairs += [(rest[a - 1], rest[b - 1]) for a, b in sub.pairs]
            return ConditionedSample(tuple([first] + path), LinkPattern(tuple(pairs)), proposals)
        raise RejectionBudgetError("proposal budget exhausted", 1.0 / max_proposals)

    def _sample_rest(self, edges: Sequence[int], path: Sequence[int], rng: RngStream) -> LinkPattern:
        if len(edges) == 2:
            return LinkPattern(((1, 2),))
        view = _flatten(self.graph, path)
        inner = ConditionedBranchSampler(view, edges, tables=self._tables, dense_limit=0)
        return inner.sample(rng).alpha


# ---------------------------------------------------------------- boundary visits


def sample_boundary_visiting_branch(
    graph: _DomainView,
    e_in: int,
    e_out: int,
    visits: Sequence[int],
    rng: RngStream,
    max_rejects: int = 1_000_000,
    tables: WalkTables | None = None,
) -> tuple[int, ...]:
    """Branch from ``e_in`` conditioned to leave through ``e_out`` after traversing ``visits`` in order.

    Proposals are loop-erased walks conditioned on the exit edge; the visit
    order is imposed by rejection.  Returns interior vertices followed by the
    exit boundary vertex, prefixed by the entry boundary vertex.
    """
    h = _h_transform(graph, [e_out])
    t = tables or walk_tables(graph, h)
    start = graph.interior_endpoint(e_in)
    if start is None or h[start] <= 0:
        raise GraphError("exit edge unreachable")
    steps = [tuple(sorted(int(x) for x in graph.edge_uv[e])) for e in visits]
    nxt = np.full(graph.n_vertices, -1, dtype=np.int64)
    buf = np.empty(graph.n_vertices + 1, dtype=np.int64)
    _seed(rng.numba_seed())
    for attempt in range(1, max_rejects + 1):
        length, _ = _lerw(start, t.indptr, t.nbr, t.cum, t.stop, nxt, buf)
        path = [int(x) for x in buf[:length]]
        if _visits_in_order(path, steps):
            return tuple([graph.boundary_endpoint(e_in)] + path)
    raise RejectionBudgetError("reject budget exhausted", 0.0)


def _visits_in_order(path: Sequence[int], steps: Sequence[tuple[int, int]]) -> bool:
    where = {}
    for i in range(len(path) - 1):
        where[tuple(sorted((path[i], path[i + 1])))] = i
    pos = [where.get(s, -1) for s in steps]
    return all(p >= 0 for p in pos) and all(a < b for a, b in zip(pos, pos[1:]))


def cut_at_visits(path: Sequence[int], visits_uv: Sequence[tuple[int, int]]) -> list[tuple[int, ...]]:
    """Split a vertex path at each traversed visited edge."""
    cuts = []
    for a, b in visits_uv:
        for i in range(len(path) - 1):
            if {path[i], path[i + 1]} == {a, b}:
                cuts.append(i)
                break
    cuts.sort()
    out, prev = [], 0
    for c in cuts:
        out.append(tuple(path[prev : c + 1]))
        prev = c + 1
    out.append(tuple(path[prev:]))
    return out
