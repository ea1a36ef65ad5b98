"""Discrete and continuum harmonic kernels.

The discrete Green function is the inverse of the interior block of the
weighted graph Laplacian ``D - A``, where ``D`` holds the full vertex weights
(edges to the boundary included).  It equals the walk partition function in
which every step along ``e`` from ``v`` contributes ``w(e)/w(v)``.  Two
backends exist: exact rationals for small graphs and a sparse direct solver
for large grids.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import splu

from . import exact
from .graph import GraphError, PlanarGraph, _DomainView, build_square_domain, slit


def laplacian_apply(graph: _DomainView, f) -> np.ndarray:
    """``(Δf)(v) = Σ w(e) (f(u) - f(v))`` over the edges ``e = <v, u>``, at every vertex."""
    f = np.asarray(f)
    u, v = graph.edge_uv[:, 0], graph.edge_uv[:, 1]
    w = graph.weight_array
    diff = w * (f[v] - f[u])
    out = np.zeros(graph.n_vertices, dtype=np.result_type(f, float))
    np.add.at(out, u, diff)
    np.add.at(out, v, -diff)
    return out


def laplacian_apply_exact(graph: _DomainView, f: Sequence) -> list[Fraction]:
    out = [Fraction(0)] * graph.n_vertices
    for e, (a, b) in enumerate(graph.edge_uv.tolist()):
        w = Fraction(graph.weights[e])
        d = w * (Fraction(f[b]) - Fraction(f[a]))
        out[a] += d
        out[b] -= d
    return out


def _check_solvable(graph: _DomainView) -> None:
    inner = graph.interior
    if inner.size == 0:
        return
    idx = graph.interior_index
    uv = graph.edge_uv
    both = (idx[uv[:, 0]] >= 0) & (idx[uv[:, 1]] >= 0)
    a, b = idx[uv[both, 0]], idx[uv[both, 1]]
    adj = sp.coo_matrix((np.ones(a.size), (a, b)), shape=(inner.size, inner.size))
    _, labels = connected_components(adj, directed=False)
    touches = np.zeros(inner.size, dtype=bool)
    one = (idx[uv[:, 0]] >= 0) ^ (idx[uv[:, 1]] >= 0)
    for x, y in uv[one]:
        touches[idx[x] if idx[x] >= 0 else idx[y]] = True
    reach = np.zeros(labels.max() + 1, dtype=bool)
    reach[labels[touches]] = True
    if not reach.all():
        raise GraphError("singular Dirichlet system: an interior component has no boundary access")


def interior_laplacian(graph: _DomainView) -> sp.csc_matrix:
    """Sparse interior block of ``D - A`` in interior-index order."""
    idx = graph.interior_index
    n = graph.interior.size
    uv = graph.edge_uv
    w = graph.weight_array
    iu, iv = idx[uv[:, 0]], idx[uv[:, 1]]
    diag = np.zeros(n)
    np.add.at(diag, iu[iu >= 0], w[iu >= 0])
    np.add.at(diag, iv[iv >= 0], w[iv >= 0])
    both = (iu >= 0) & (iv >= 0)
    rows = np.concatenate([np.arange(n), iu[both], iv[both]])
    cols = np.concatenate([np.arange(n), iv[both], iu[both]])
    vals = np.concatenate([diag, -w[both], -w[both]])
    return sp.csc_matrix((vals, (rows, cols)), shape=(n, n))


def exact_interior_laplacian(graph: _DomainView) -> list[list[Fraction]]:
    idx = graph.interior_index
    n = graph.interior.size
    m = [[Fraction(0)] * n for _ in range(n)]
    for e, (a, b) in enumerate(graph.edge_uv.tolist()):
        w = Fraction(graph.weights[e])
        ia, ib = idx[a], idx[b]
        if ia >= 0:
            m[ia][ia] += w
        if ib >= 0:
            m[ib][ib] += w
        if ia >= 0 and ib >= 0:
            m[ia][ib] -= w
            m[ib][ia] -= w
    return m


@dataclass(frozen=True, eq=False)
class KernelSet:
    """Green, Poisson and excursion kernels of one graph.

    ``green`` is indexed by interior rows (see ``graph.interior_index``).  The
    Poisson kernel of a boundary edge is the Green function at its interior
    endpoint; an edge whose endpoints are both boundary has zero kernels.
    At a boundary vertex the Poisson kernel of ``e`` is ``1/w(e)`` on the
    boundary endpoint of ``e`` and zero elsewhere, which keeps it harmonic.
    """

    graph: _DomainView
    green: object
    exact: bool

    def _zero(self):
        return Fraction(0) if self.exact else 0.0

    def G(self, v: int, w: int):
        i, j = self.graph.interior_index[v], self.graph.interior_index[w]
        if i < 0 or j < 0:
            return self._zero()
        return self.green[i][j] if self.exact else float(self.green[i, j])

    def P(self, v: int, e: int):
        w = self.graph.interior_endpoint(e)
        if w is None:
            return self._zero()
        if self.graph.is_boundary[v]:
            if v != self.graph.boundary_endpoint(e):
                return self._zero()
            return 1 / (Fraction(self.graph.weights[e]) if self.exact else float(self.graph.weights[e]))
        return self.G(v, w)

    def K(self, e1: int, e2: int):
        a, b = self.graph.interior_endpoint(e1), self.graph.interior_endpoint(e2)
        if a is None or b is None:
            return self._zero()
        return self.G(a, b)

    @property
    def poisson(self):
        edges = self.graph.boundary_edges
        rows = self.graph.interior
        if self.exact:
            return [[self.P(int(v), e) for e in edges] for v in rows]
        ends = self.graph.interior_index[[self.graph.interior_endpoint(e) for e in edges]]
        return np.asarray(self.green)[:, ends]

    @property
    def excursion(self):
        edges = self.graph.boundary_edges
        if self.exact:
            return [[self.K(a, b) for b in edges] for a in edges]
        ends = self.graph.interior_index[[self.graph.interior_endpoint(e) for e in edges]]
        return np.asarray(self.green)[np.ix_(ends, ends)]

    def green_full(self, w: int) -> np.ndarray | list:
        """``G(·, w)`` over all vertices, zero on the boundary."""
        if self.exact:
            return [self.G(v, w) for v in range(self.graph.n_vertices)]
        out = np.zeros(self.graph.n_vertices)
        j = self.graph.interior_index[w]
        if j >= 0:
            out[self.graph.interior] = self.green[:, j]
        return out


def kernels(graph: _DomainView, exact: bool = False) -> KernelSet:
    """Solve the Dirichlet systems for the Green function of ``graph``."""
    _check_solvable(graph)
    n = graph.interior.size
    if exact:
        green = exact_green(graph) if n else []
        return KernelSet(graph, green, True)
    if n == 0:
        return KernelSet(graph, np.zeros((0, 0)), False)
    lu = splu(interior_laplacian(graph))
    green = lu.solve(np.eye(n))
    green = 0.5 * (green + green.T)
    return KernelSet(graph, green, False)


def exact_green(graph: _DomainView) -> list[list[Fraction]]:
    return exact.inverse(exact_interior_laplacian(graph))


class GreenSolver:
    """Factorised interior Laplacian for repeated Green-function columns on a large graph."""

    def __init__(self, graph: _DomainView):
        _check_solvable(graph)
        self.graph = graph
        self._lu = splu(interior_laplacian(graph))

    def columns(self, targets: Sequence[int]) -> np.ndarray:
        """Array of shape ``(n_vertices, len(targets))`` with ``G(·, target)``."""
        g = self.graph
        rhs = np.zeros((g.interior.size, len(targets)))
        for k, t in enumerate(targets):
            j = g.interior_index[t]
            if j < 0:
                raise GraphError(f"target {t} is not an interior vertex")
            rhs[j, k] = 1.0
        sol = self._lu.solve(rhs)
        out = np.zeros((g.n_vertices, len(targets)))
        out[g.interior] = sol
        return out

    def poisson_column(self, edge: int) -> np.ndarray:
        """``P(·, edge)`` over all vertices."""
        w = self.graph.interior_endpoint(edge)
        if w is None:
            return np.zeros(self.graph.n_vertices)
        return self.columns([w])[:, 0]


def harmonic_measure(graph: _DomainView, v: int, edges, ks: KernelSet | None = None):
    """Probability that the walk from ``v`` leaves the interior through one of ``edges``."""
    ks = ks if ks is not None else kernels(graph)
    if graph.is_boundary[v]:
        raise GraphError("harmonic measure is defined from interior vertices")
    total = ks._zero()
    for e in edges:
        w = Fraction(graph.weights[e]) if ks.exact else float(graph.weights[e])
        total += w * ks.P(v, e)
    return total


def _check_upper(*zs) -> None:
    for z in zs:
        if np.any(np.imag(z) <= 0):
            raise ValueError("points must lie in the open upper half-plane")


def cont_green(z, w):
    """Green function of ``-Δ`` on the upper half-plane with Dirichlet boundary values."""
    z, w = np.asarray(z, dtype=complex), np.asarray(w, dtype=complex)
    _check_upper(z, w)
    if np.any(z == w):
        raise ValueError("coincident arguments")
    return -(np.log(np.abs(z - w)) - np.log(np.abs(z - np.conj(w)))) / (2 * math.pi)


def cont_poisson(z, x):
    z = np.asarray(z, dtype=complex)
    _check_upper(z)
    return np.imag(z) / (math.pi * np.abs(z - np.asarray(x, dtype=float)) ** 2)


def cont_excursion(x, y):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if np.any(x == y):
        raise ValueError("coincident arguments")
    return 1.0 / (math.pi * (x - y) ** 2)


def covariance_factor(g_prime_at_x: float) -> float:
    """Boundary covariance ``1/g'(x)`` of a Poisson kernel under a mapping-out function."""
    return 1.0 / g_prime_at_x


@dataclass(frozen=True)
class ConvergenceRow:
    mesh: float
    discrete_value: float
    continuum_value: float

    @property
    def abs_error(self) -> float:
        return abs(self.discrete_value - self.continuum_value)


def write_convergence_csv(rows: Sequence[ConvergenceRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["mesh", "discrete_value", "continuum_value", "abs_error"])
        for r in rows:
            out.writerow([repr(r.mesh), repr(r.discrete_value), repr(r.continuum_value), repr(r.abs_error)])


def unit_square(n: int) -> PlanarGraph:
    """Unit square at mesh ``1/n``: ``(n-1) x (n-1)`` interior vertices."""
    if n < 2:
        raise GraphError("need at least one interior vertex")
    return build_square_domain(n - 1, n - 1, 1.0 / n)


def square_boundary_edge(n: int, point: tuple[float, float]) -> int:
    """Boundary edge of :func:`unit_square` whose boundary vertex sits at ``point``."""
    g = unit_square(n)
    target = np.asarray(point, dtype=float)
    for e in g.boundary_edge_order:
        if np.allclose(g.xy[g.boundary_endpoint(e)], target, atol=1e-9):
            return e
    raise GraphError(f"no boundary vertex at {point} for n={n}")


def square_vertex_at(n: int, point: tuple[float, float]) -> int:
    g = unit_square(n)
    d = np.hypot(*(g.xy - np.asarray(point)).T)
    v = int(np.argmin(d))
    if d[v] > 1e-9 or g.is_boundary[v]:
        raise GraphError(f"no interior vertex at {point} for n={n}")
    return v


def kernel_ratio_experiment(
    sizes: Sequence[int],
    p1: tuple[float, float],
    p2: tuple[float, float],
    v: tuple[float, float],
    w: tuple[float, float],
) -> list[ConvergenceRow]:
    """Excursion-to-Poisson kernel ratio on unit squares of mesh ``1/n`` against its continuum limit.

    ``p1, p2`` are boundary points and ``v, w`` interior points of the unit
    square; all must be lattice points for every size.
    """
    from .loewner import square_to_halfplane

    sizes = list(sizes)
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("mesh sequence must be decreasing")
    x1, x2 = (float(np.real(square_to_halfplane(complex(*p)))) for p in (p1, p2))
    zv, zw = (square_to_halfplane(complex(*p)) for p in (v, w))
    target = float(cont_excursion(x1, x2) / (cont_poisson(zv, x1) * cont_poisson(zw, x2)))
    rows = []
    for n in sizes:
        g = unit_square(n)
        e1, e2 = square_boundary_edge(n, p1), square_boundary_edge(n, p2)
        iv, iw = square_vertex_at(n, v), square_vertex_at(n, w)
        solver = GreenSolver(g)
        a, b = g.interior_endpoint(e1), g.interior_endpoint(e2)
        cols = solver.columns([a, b])
        k12 = cols[b, 0]
        ratio = k12 / (cols[iv, 0] * cols[iw, 1])
        rows.append(ConvergenceRow(1.0 / n, float(ratio), target))
    return rows


def poisson_slit_ratio_experiment(
    sizes: Sequence[int],
    p1: tuple[float, float],
    v: tuple[float, float],
    w: tuple[float, float],
    slit_foot: float,
    slit_height: float,
) -> list[ConvergenceRow]:
    """Poisson kernels in the unit square versus the square minus a vertical slit.

    The slit rises from ``(slit_foot, 0)`` to height ``slit_height``.  The
    continuum target uses the mapping-out function of the slit's image in the
    half-plane, obtained by unzipping the image curve.
    """
    from .loewner import extract_driving, solve_loewner, square_to_halfplane

    x1 = float(np.real(square_to_halfplane(complex(*p1))))
    zv, zw = square_to_halfplane(complex(*v)), square_to_halfplane(complex(*w))
    ts = np.linspace(0.0, slit_height, 2001)
    curve = np.array([square_to_halfplane(complex(slit_foot, s)) for s in ts])
    curve[0] = complex(np.real(curve[0]), 0.0)
    drive = extract_driving(curve)
    t_end = float(drive.times[-1])
    gw = solve_loewner(drive, zw, t_end).g
    fx = solve_loewner(drive, complex(x1, 0.0), t_end)
    target = float(covariance_factor(fx.g_prime.real) * cont_poisson(zv, x1) / cont_poisson(gw, fx.g.real))
    rows = []
    for n in sizes:
        g = unit_square(n)
        e1 = square_boundary_edge(n, p1)
        iv, iw = square_vertex_at(n, v), square_vertex_at(n, w)
        k = int(round(slit_foot * n))
        cols = n - 1
        column = [(k - 1) * cols + r for r in range(int(round(slit_height * n)))]
        start = square_boundary_edge(n, (slit_foot, 0.0))
        cut = slit(g, column + [column[-1] + 1], start) if column else None
        p_full = GreenSolver(g).poisson_column(e1)[iv]
        p_cut = GreenSolver(cut).poisson_column(e1)[iw]
        rows.append(ConvergenceRow(1.0 / n, float(p_full / p_cut), target))
    return rows

