"""Embedded weighted planar graphs with a wired boundary.

A graph is immutable after construction.  Slitting a graph along a growing
path produces a cheap :class:`SlitGraph` view that promotes the visited
vertices to the boundary without copying the edge data.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from numbers import Rational
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components


class GraphError(ValueError):
    """Raised when a graph or a path violates a structural invariant."""


class AngleBoundError(GraphError):
    """Raised when an isoradial half-angle leaves [eta, pi/2 - eta]."""


class _DomainView:
    """Shared queries for anything exposing ``edge_uv``, ``weights`` and ``is_boundary``."""

    edge_uv: np.ndarray
    weights: tuple
    is_boundary: np.ndarray

    @property
    def n_vertices(self) -> int:
        return int(self.is_boundary.shape[0])

    @cached_property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(~self.is_boundary)

    @cached_property
    def interior_index(self) -> np.ndarray:
        """Row of each vertex in interior-indexed tables, or -1 for boundary vertices."""
        idx = np.full(self.n_vertices, -1, dtype=np.int64)
        idx[self.interior] = np.arange(self.interior.size)
        return idx

    @cached_property
    def boundary_edges(self) -> tuple[int, ...]:
        ub = self.is_boundary[self.edge_uv]
        return tuple(int(e) for e in np.flatnonzero(ub[:, 0] ^ ub[:, 1]))

    @cached_property
    def weight_array(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights])

    def interior_endpoint(self, edge: int) -> int | None:
        """Interior endpoint of a boundary edge; ``None`` once both ends are boundary."""
        u, v = (int(x) for x in self.edge_uv[edge])
        bu, bv = bool(self.is_boundary[u]), bool(self.is_boundary[v])
        if bu and bv:
            return None
        if not bu and not bv:
            raise GraphError(f"edge {edge} joins two interior vertices")
        return v if bu else u

    def boundary_endpoint(self, edge: int) -> int:
        u, v = (int(x) for x in self.edge_uv[edge])
        return u if self.is_boundary[u] else v

    def vertex_weight(self, v: int):
        return sum((self.weights[e] for e, _ in self.neighbours(v)), start=0)

    def neighbours(self, v: int) -> list[tuple[int, int]]:
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class PlanarGraph(_DomainView):
    """Weighted planar graph with wired boundary.

    Vertex ids are ``0..n-1``; edge ids index ``edge_uv``.  ``weights`` holds the
    exact edge weights (ints, Fractions or floats) so rational instances can be
    fed straight into exact arithmetic.
    """

    xy: np.ndarray
    edge_uv: np.ndarray
    weights: tuple
    is_boundary: np.ndarray
    boundary_edge_order: tuple[int, ...]
    mesh: float = 1.0
    half_angles: tuple[float, ...] | None = None
    marked_edges: tuple[int, ...] = ()
    dual_points: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        for arr in (self.xy, self.edge_uv, self.is_boundary):
            arr.setflags(write=False)

    @property
    def boundary(self) -> frozenset[int]:
        return frozenset(int(v) for v in np.flatnonzero(self.is_boundary))

    @property
    def n_edges(self) -> int:
        return int(self.edge_uv.shape[0])

    @cached_property
    def _adjacency(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n = self.n_vertices
        heads = np.concatenate([self.edge_uv[:, 0], self.edge_uv[:, 1]])
        tails = np.concatenate([self.edge_uv[:, 1], self.edge_uv[:, 0]])
        eids = np.concatenate([np.arange(self.n_edges)] * 2)
        order = np.lexsort((eids, heads))
        ptr = np.searchsorted(heads[order], np.arange(n + 1))
        return ptr, eids[order], tails[order]

    def neighbours(self, v: int) -> list[tuple[int, int]]:
        """Pairs ``(edge id, other endpoint)`` around ``v``."""
        ptr, eids, tails = self._adjacency
        return [(int(e), int(u)) for e, u in zip(eids[ptr[v] : ptr[v + 1]], tails[ptr[v] : ptr[v + 1]])]

    @cached_property
    def edge_lookup(self) -> dict[tuple[int, int], int]:
        out: dict[tuple[int, int], int] = {}
        for e, (u, v) in enumerate(self.edge_uv.tolist()):
            out.setdefault((u, v), e)
            out.setdefault((v, u), e)
        return out

    def edge_between(self, u: int, v: int) -> int:
        try:
            return self.edge_lookup[(u, v)]
        except KeyError:
            raise GraphError(f"vertices {u} and {v} are not adjacent") from None

    def boundary_edges_at(self, v: int) -> list[int]:
        return [e for e, u in self.neighbours(v) if self.is_boundary[u]]

    def with_marked(self, marked) -> PlanarGraph:
        marked = tuple(int(e) for e in marked)
        bset = set(self.boundary_edges)
        if len(set(marked)) != len(marked):
            raise GraphError("marked edges must be distinct")
        if not set(marked) <= bset:
            raise GraphError("marked edges must be boundary edges")
        return PlanarGraph(
            self.xy.copy(),
            self.edge_uv.copy(),
            self.weights,
            self.is_boundary.copy(),
            self.boundary_edge_order,
            self.mesh,
            self.half_angles,
            marked,
            self.dual_points,
        )

    def with_weights(self, weights) -> PlanarGraph:
        weights = tuple(weights)
        if len(weights) != self.n_edges:
            raise GraphError("one weight per edge is required")
        return PlanarGraph(
            self.xy.copy(),
            self.edge_uv.copy(),
            weights,
            self.is_boundary.copy(),
            self.boundary_edge_order,
            self.mesh,
            self.half_angles,
            self.marked_edges,
            self.dual_points,
        )

    def ccw_sorted(self, edges) -> tuple[int, ...]:
        """Sort boundary edges by their position in the counterclockwise order."""
        pos = {e: i for i, e in enumerate(self.boundary_edge_order)}
        return tuple(sorted(edges, key=pos.__getitem__))

    def cyclic_position(self, edge: int) -> int:
        return self.boundary_edge_order.index(edge)

    def validate(self, check_embedding: bool = True) -> None:
        """Raise :class:`GraphError` unless every structural invariant holds."""
        if any(not (float(w) > 0) for w in self.weights):
            raise GraphError("edge weights must be positive")
        if len(self.weights) != self.n_edges:
            raise GraphError("one weight per edge is required")
        n = self.n_vertices
        adj = coo_matrix((np.ones(self.n_edges), (self.edge_uv[:, 0], self.edge_uv[:, 1])), shape=(n, n))
        if connected_components(adj, directed=False)[0] != 1:
            raise GraphError("graph is not connected")
        ub = self.is_boundary[self.edge_uv]
        if np.any(ub[:, 0] & ub[:, 1]):
            raise GraphError("an edge joins two boundary vertices")
        if not self.is_boundary.any():
            raise GraphError("boundary is empty")
        bvert = [self.boundary_endpoint(e) for e in self.boundary_edges]
        if len(set(bvert)) != len(bvert):
            raise GraphError("boundary edges must end at distinct boundary vertices")
        if sorted(self.boundary_edge_order) != sorted(self.boundary_edges):
            raise GraphError("boundary_edge_order must list every boundary edge exactly once")
        if not _is_rotation(self.boundary_edge_order, _angular_order(self)):
            raise GraphError("boundary_edge_order is not counterclockwise")
        if check_embedding and self.n_edges <= 10_000:
            _check_noncrossing(self.xy, self.edge_uv)


def _is_rotation(a, b) -> bool:
    a, b = list(a), list(b)
    if len(a) != len(b):
        return False
    if not a:
        return True
    k = b.index(a[0]) if a[0] in b else -1
    return k >= 0 and b[k:] + b[:k] == a


def _angular_order(g: PlanarGraph) -> list[int]:
    edges = list(g.boundary_edges)
    if not edges:
        return []
    mids = np.array([g.xy[g.edge_uv[e]].mean(axis=0) for e in edges])
    centre = g.xy[g.is_boundary].mean(axis=0)
    ang = np.arctan2(mids[:, 1] - centre[1], mids[:, 0] - centre[0])
    return [edges[i] for i in np.argsort(ang, kind="stable")]


def _check_noncrossing(xy: np.ndarray, uv: np.ndarray, chunk: int = 256) -> None:
    p, q = xy[uv[:, 0]], xy[uv[:, 1]]
    lo, hi = np.minimum(p, q), np.maximum(p, q)
    scale = max(float(np.ptp(xy)), 1.0)
    tol = 1e-12 * scale * scale

    def orient(a, b, c):
        return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])

    m = uv.shape[0]
    for s in range(0, m, chunk):
        i = np.arange(s, min(s + chunk, m))[:, None]
        j = np.arange(m)[None, :]
        mask = j > i
        mask &= np.all(lo[i] <= hi[j] + 1e-12 * scale, axis=-1) & np.all(lo[j] <= hi[i] + 1e-12 * scale, axis=-1)
        shared = (uv[i, 0] == uv[j, 0]) | (uv[i, 0] == uv[j, 1]) | (uv[i, 1] == uv[j, 0]) | (uv[i, 1] == uv[j, 1])
        mask &= ~shared
        ii, jj = np.nonzero(mask)
        if ii.size == 0:
            continue
        ii = ii + s
        a, b, c, d = p[ii], q[ii], p[jj], q[jj]
        o1, o2, o3, o4 = orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b)
        proper = (o1 * o2 < -tol) & (o3 * o4 < -tol)
        touching = (np.abs(o1) <= tol) | (np.abs(o2) <= tol) | (np.abs(o3) <= tol) | (np.abs(o4) <= tol)
        bad = proper | (touching & (o1 * o2 <= tol) & (o3 * o4 <= tol))
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise GraphError(f"edges {int(ii[k])} and {int(jj[k])} cross")


def build_square_domain(cols: int, rows: int, mesh: float = 1.0) -> PlanarGraph:
    """Rectangular piece of the square lattice with one layer of wired boundary vertices.

    Interior vertex ``(i, k)`` sits at ``((i+1)*mesh, (k+1)*mesh)`` and has id
    ``i*rows + k``.  Every boundary edge gets its own boundary vertex, so corner
    interior vertices carry two boundary edges.
    """
    if cols < 1 or rows < 1:
        raise GraphError("grid dimensions must be positive")
    if not mesh > 0:
        raise GraphError("mesh must be positive")
    n_int = cols * rows
    xy = [((i + 1) * mesh, (k + 1) * mesh) for i in range(cols) for k in range(rows)]
    edges: list[tuple[int, int]] = []
    for i in range(cols):
        for k in range(rows):
            v = i * rows + k
            if i + 1 < cols:
                edges.append((v, v + rows))
            if k + 1 < rows:
                edges.append((v, v + 1))
    order: list[int] = []

    def add_boundary(v: int, bx: float, by: float) -> None:
        xy.append((bx, by))
        edges.append((v, len(xy) - 1))
        order.append(len(edges) - 1)

    top, right = (rows + 1) * mesh, (cols + 1) * mesh
    for i in range(cols):
        add_boundary(i * rows, (i + 1) * mesh, 0.0)
    for k in range(rows):
        add_boundary((cols - 1) * rows + k, right, (k + 1) * mesh)
    for i in reversed(range(cols)):
        add_boundary(i * rows + rows - 1, (i + 1) * mesh, top)
    for k in reversed(range(rows)):
        add_boundary(k, 0.0, (k + 1) * mesh)
    is_b = np.zeros(len(xy), dtype=bool)
    is_b[n_int:] = True
    return PlanarGraph(
        np.array(xy, dtype=float),
        np.array(edges, dtype=np.int64),
        (1,) * len(edges),
        is_b,
        tuple(order),
        float(mesh),
    )


def square_vertex(cols: int, rows: int, i: int, k: int) -> int:
    """Id of interior vertex ``(i, k)`` in :func:`build_square_domain`."""
    if not (0 <= i < cols and 0 <= k < rows):
        raise GraphError("vertex outside the grid")
    return i * rows + k


def p3_probe() -> PlanarGraph:
    """One interior vertex between two boundary vertices, unit weights.

    Edge 0 goes to the right boundary vertex, edge 1 to the left one; they are
    the marked edges ``(e1, e2)`` in counterclockwise order.
    """
    xy = np.array([[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0]])
    uv = np.array([[0, 1], [0, 2]], dtype=np.int64)
    g = PlanarGraph(xy, uv, (1, 1), np.array([False, True, True]), (0, 1), 1.0, None, (0, 1))
    return g


@dataclass(frozen=True)
class IsoradialSpec:
    mesh: float
    half_angles: dict[int, float]
    angle_bound: float

    def weight(self, edge: int) -> float:
        return math.tan(self.half_angles[edge])


@dataclass(frozen=True)
class Rhombus:
    """Rhombus around a primal edge ``(u, v)`` with dual corners ``a`` and ``b``."""

    u: int
    v: int
    dual_a: tuple[float, float]
    dual_b: tuple[float, float]


def build_isoradial(
    spec: IsoradialSpec,
    tiling: list[Rhombus],
    xy: np.ndarray,
    is_boundary: np.ndarray,
    boundary_edge_order: tuple[int, ...] | None = None,
    tol: float = 1e-9,
) -> PlanarGraph:
    """Primal graph of a rhombic tiling; rhombus ``k`` carries edge ``k``."""
    xy = np.asarray(xy, dtype=float)
    for k, r in enumerate(tiling):
        theta = spec.half_angles[k]
        if not (spec.angle_bound <= theta <= math.pi / 2 - spec.angle_bound):
            raise AngleBoundError(f"half-angle {theta} of edge {k} violates the bound {spec.angle_bound}")
        corners = [xy[r.u], np.asarray(r.dual_a), xy[r.v], np.asarray(r.dual_b)]
        sides = [np.hypot(*(corners[(i + 1) % 4] - corners[i])) for i in range(4)]
        if max(abs(s - spec.mesh) for s in sides) > tol * max(spec.mesh, 1.0):
            raise GraphError(f"rhombus {k} does not have side length {spec.mesh}")
        if abs(rhombus_half_angle(xy[r.u], xy[r.v], r.dual_a, r.dual_b) - theta) > 1e-9:
            raise GraphError(f"rhombus {k} geometry disagrees with its half-angle")
    uv = np.array([(r.u, r.v) for r in tiling], dtype=np.int64)
    weights = tuple(spec.weight(k) for k in range(len(tiling)))
    duals = np.array([[r.dual_a, r.dual_b] for r in tiling], dtype=float)
    g = PlanarGraph(
        xy,
        uv,
        weights,
        np.asarray(is_boundary, dtype=bool),
        (),
        float(spec.mesh),
        tuple(spec.half_angles[k] for k in range(len(tiling))),
        (),
        duals,
    )
    order = tuple(boundary_edge_order) if boundary_edge_order is not None else tuple(_angular_order(g))
    g = PlanarGraph(g.xy.copy(), g.edge_uv.copy(), g.weights, g.is_boundary.copy(), order, g.mesh, g.half_angles, (), duals)
    g.validate()
    return g


def rhombus_half_angle(u, v, dual_a, dual_b) -> float:
    """Half of the rhombus opening angle at the primal corner, from the diagonals."""
    primal = float(np.hypot(*(np.asarray(v) - np.asarray(u))))
    dual = float(np.hypot(*(np.asarray(dual_b) - np.asarray(dual_a))))
    return math.atan2(dual, primal)


def build_rhombic_strip(cols: int, rows: int, mesh: float, half_angle: float, angle_bound: float = 0.05) -> PlanarGraph:
    """Isoradial rectangular lattice whose horizontal and vertical edges alternate half-angles.

    Horizontal edges have half-angle ``half_angle`` and vertical ones
    ``pi/2 - half_angle``; with ``half_angle = pi/4`` this is a rotated copy of
    the square lattice with unit weights.
    """
    if cols < 1 or rows < 1:
        raise GraphError("grid dimensions must be positive")
    a = 2 * mesh * math.cos(half_angle)
    b = 2 * mesh * math.sin(half_angle)
    sq = build_square_domain(cols, rows, 1.0)
    xy = sq.xy * np.array([a, b])
    rhombi, angles = [], {}
    for k, (u, v) in enumerate(sq.edge_uv.tolist()):
        mid = (xy[u] + xy[v]) / 2
        horizontal = abs(xy[u][1] - xy[v][1]) < 1e-12
        if horizontal:
            off = np.array([0.0, b / 2])
            angles[k] = half_angle
        else:
            off = np.array([a / 2, 0.0])
            angles[k] = math.pi / 2 - half_angle
        rhombi.append(Rhombus(u, v, tuple(mid - off), tuple(mid + off)))
    spec = IsoradialSpec(mesh, angles, angle_bound)
    return build_isoradial(spec, rhombi, xy, sq.is_boundary, sq.boundary_edge_order)


@dataclass(frozen=True, eq=False)
class SlitGraph(_DomainView):
    """View of ``base`` after a branch from ``start_edge`` walked along ``path``.

    ``path`` lists the interior vertices ``gamma(1..t)``; ``gamma(1..t-1)``
    become boundary and the tip edge joins ``gamma(t-1)`` to ``gamma(t)``.
    """

    base: PlanarGraph
    start_edge: int
    path: tuple[int, ...]

    @property
    def edge_uv(self) -> np.ndarray:
        return self.base.edge_uv

    @property
    def weights(self) -> tuple:
        return self.base.weights

    @property
    def xy(self) -> np.ndarray:
        return self.base.xy

    @property
    def t(self) -> int:
        return max(len(self.path), 1)

    @cached_property
    def is_boundary(self) -> np.ndarray:
        mask = self.base.is_boundary.copy()
        mask[list(self.path[:-1])] = True
        mask.setflags(write=False)
        return mask

    @property
    def boundary(self) -> frozenset[int]:
        return frozenset(int(v) for v in np.flatnonzero(self.is_boundary))

    @property
    def tip_edge(self) -> int:
        if len(self.path) <= 1:
            return self.start_edge
        return self.base.edge_between(self.path[-2], self.path[-1])

    @property
    def path_prefix(self) -> tuple[int, ...]:
        """``gamma(0..t-1)`` including the boundary vertex of the start edge."""
        return (self.base.boundary_endpoint(self.start_edge),) + tuple(self.path[:-1])

    def neighbours(self, v: int) -> list[tuple[int, int]]:
        return self.base.neighbours(v)

    def boundary_edges_at(self, v: int) -> list[int]:
        return [e for e, u in self.neighbours(v) if self.is_boundary[u]]

    def replace_marked(self, marked) -> tuple[int, ...]:
        """Marked edges with the start edge swapped for the current tip edge."""
        return tuple(self.tip_edge if e == self.start_edge else e for e in marked)


@dataclass(frozen=True, eq=False)
class WiredView(_DomainView):
    """View of ``base`` with the vertices in ``extra`` wired to the boundary."""

    base: PlanarGraph
    extra: frozenset[int]

    @property
    def edge_uv(self) -> np.ndarray:
        return self.base.edge_uv

    @property
    def weights(self) -> tuple:
        return self.base.weights

    @cached_property
    def is_boundary(self) -> np.ndarray:
        mask = self.base.is_boundary.copy()
        mask[list(self.extra)] = True
        mask.setflags(write=False)
        return mask

    def neighbours(self, v: int) -> list[tuple[int, int]]:
        return self.base.neighbours(v)


def slit(graph: PlanarGraph | SlitGraph, path, start_edge: int | None = None) -> SlitGraph:
    """Promote the first ``t-1`` vertices of a branch to the boundary.

    For a :class:`PlanarGraph`, ``start_edge`` names the boundary edge the
    branch enters through and ``path`` lists ``gamma(1..t)``.  An empty path
    stands for ``t = 1``.  Slitting a :class:`SlitGraph` continues its path.
    """
    path = tuple(int(v) for v in path)
    if isinstance(graph, SlitGraph):
        if start_edge is not None and start_edge != graph.start_edge:
            raise GraphError("cannot change the start edge of an existing slit")
        prefix = graph.path if graph.path else (graph.base.interior_endpoint(graph.start_edge),)
        return slit(graph.base, prefix + path, graph.start_edge)
    if start_edge is None:
        raise GraphError("start_edge is required when slitting a base graph")
    first = graph.interior_endpoint(start_edge)
    if first is None or start_edge not in graph.boundary_edges:
        raise GraphError("start edge must be a boundary edge")
    if not path:
        path = (first,)
    if path[0] != first:
        raise GraphError("path must start at the interior endpoint of the start edge")
    if len(set(path)) != len(path):
        raise GraphError("path is not simple")
    for v in path:
        if graph.is_boundary[v]:
            raise GraphError("path leaves the interior prematurely")
    for a, b in zip(path, path[1:]):
        graph.edge_between(a, b)
    return SlitGraph(graph, int(start_edge), path)


def boundary_neighbouring_edges(graph: PlanarGraph) -> list[int]:
    """Interior-interior edges whose two endpoints both touch the boundary."""
    touches = np.zeros(graph.n_vertices, dtype=bool)
    for e in graph.boundary_edges:
        v = graph.interior_endpoint(e)
        if v is not None:
            touches[v] = True
    out = []
    for e, (u, v) in enumerate(graph.edge_uv.tolist()):
        if not graph.is_boundary[u] and not graph.is_boundary[v] and touches[u] and touches[v]:
            out.append(e)
    return out


def _weight_to_json(w):
    if isinstance(w, bool):
        raise GraphError("boolean weight")
    if isinstance(w, int):
        return w
    if isinstance(w, Rational):
        w = Fraction(w)
        return w.numerator if w.denominator == 1 else f"{w.numerator}/{w.denominator}"
    return float(w)


def _weight_from_json(w):
    if isinstance(w, str):
        return Fraction(w)
    return w


def graph_to_dict(graph: PlanarGraph) -> dict:
    verts = [
        {"id": i, "x": float(x), "y": float(y), "boundary": bool(b)}
        for i, ((x, y), b) in enumerate(zip(graph.xy.tolist(), graph.is_boundary.tolist()))
    ]
    edges = []
    for e, (u, v) in enumerate(graph.edge_uv.tolist()):
        rec = {"u": u, "v": v, "w": _weight_to_json(graph.weights[e])}
        if graph.half_angles is not None:
            rec["half_angle"] = float(graph.half_angles[e])
        edges.append(rec)
    return {
        "mesh": float(graph.mesh),
        "vertices": verts,
        "edges": edges,
        "marked_edges": list(graph.marked_edges),
        "boundary_edge_order": list(graph.boundary_edge_order),
    }


def graph_from_dict(data: dict, validate: bool = True) -> PlanarGraph:
    try:
        verts = sorted(data["vertices"], key=lambda r: r["id"])
        if [r["id"] for r in verts] != list(range(len(verts))):
            raise GraphError("vertex ids must be 0..n-1")
        xy = np.array([[r["x"], r["y"]] for r in verts], dtype=float).reshape(-1, 2)
        is_b = np.array([bool(r["boundary"]) for r in verts], dtype=bool)
        uv = np.array([[r["u"], r["v"]] for r in data["edges"]], dtype=np.int64).reshape(-1, 2)
        weights = tuple(_weight_from_json(r["w"]) for r in data["edges"])
        halves = None
        if data["edges"] and all("half_angle" in r for r in data["edges"]):
            halves = tuple(float(r["half_angle"]) for r in data["edges"])
        mesh = float(data.get("mesh", 1.0))
        marked = tuple(int(e) for e in data.get("marked_edges", ()))
    except (KeyError, TypeError) as exc:
        raise GraphError(f"malformed graph record: {exc}") from exc
    g = PlanarGraph(xy, uv, weights, is_b, (), mesh, halves)
    order = data.get("boundary_edge_order")
    order = tuple(int(e) for e in order) if order is not None else tuple(_angular_order(g))
    g = PlanarGraph(g.xy.copy(), uv.copy(), weights, is_b.copy(), order, mesh, halves, marked)
    if validate:
        g.validate()
        if marked:
            g.with_marked(marked)
    return g


def save_graph(graph: PlanarGraph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(graph_to_dict(graph), indent=1))


def load_graph(path: str | Path, validate: bool = True) -> PlanarGraph:
    return graph_from_dict(json.loads(Path(path).read_text()), validate=validate)
