"""Link patterns, excursion-kernel determinants and connectivity partition functions.

The coefficient matrix relating determinants to pairing probabilities is
never typed in.  :func:`recover_coefficients` solves for it in exact rational
arithmetic from spanning-tree enumeration on small graphs and checks the
result on held-out instances.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import exact
from .graph import GraphError, _DomainView, graph_from_dict, graph_to_dict
from .harmonic import KernelSet, kernels


MAX_N = 6


@dataclass(frozen=True, order=True)
class LinkPattern:
    """Non-crossing pairing of ``1..2N``; ``pairs`` is sorted by left endpoint."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        norm = tuple(sorted(tuple(sorted(p)) for p in self.pairs))
        object.__setattr__(self, "pairs", norm)
        pts = sorted(x for p in norm for x in p)
        if pts != list(range(1, 2 * len(norm) + 1)):
            raise ValueError(f"{norm} is not a pairing of 1..{2 * len(norm)}")

    @property
    def N(self) -> int:
        return len(self.pairs)

    def is_planar(self) -> bool:
        for (a, b), (c, d) in itertools.combinations(self.pairs, 2):
            if a < c < b < d or c < a < d < b:
                return False
        return True

    def partner(self, i: int) -> int:
        for a, b in self.pairs:
            if i == a:
                return b
            if i == b:
                return a
        raise KeyError(i)

    def __str__(self) -> str:
        return "".join(f"({a},{b})" for a, b in self.pairs)

    @classmethod
    def parse(cls, text: str) -> LinkPattern:
        body = text.strip().strip("()")
        pairs = [tuple(int(x) for x in chunk.split(",")) for chunk in body.split(")(")] if body else []
        return cls(tuple(pairs))


@lru_cache(maxsize=None)
def enumerate_link_patterns(N: int) -> tuple[LinkPattern, ...]:
    """All non-crossing pairings of ``1..2N`` in canonical (lexicographic) order."""
    if not (1 <= N <= MAX_N):
        raise ValueError(f"N must lie in 1..{MAX_N}")

    def build(points: tuple[int, ...]):
        if not points:
            yield ()
            return
        first, rest = points[0], points[1:]
        for k in range(0, len(rest), 2):
            inside, outside = rest[:k], rest[k + 1 :]
            for a in build(inside):
                for b in build(outside):
                    yield ((first, rest[k]),) + a + b

    pats = sorted(LinkPattern(p) for p in build(tuple(range(1, 2 * N + 1))))
    return tuple(pats)


def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


def left_to_right_orientation(alpha: LinkPattern) -> tuple[tuple[int, int], ...]:
    """Pairs ``(a_i, b_i)`` with ``a_i < b_i`` listed by increasing ``a_i``."""
    return tuple(sorted((min(p), max(p)) for p in alpha.pairs))


def excursion_matrix(kernel: Callable, alpha: LinkPattern, args: Sequence) -> list[list]:
    orient = left_to_right_orientation(alpha)
    if len(args) != 2 * alpha.N:
        raise ValueError("need one argument per marked point")
    if len(set(args)) != len(args):
        raise ValueError("coincident arguments")
    return [[kernel(args[a - 1], args[b - 1]) for (_, b) in orient] for (a, _) in orient]


def excursion_determinant(kernel: Callable, alpha: LinkPattern, args: Sequence):
    """``det K(x_{a_k}, x_{b_l})`` over the left-to-right orientation of ``alpha``."""
    m = excursion_matrix(kernel, alpha, args)
    if all(isinstance(x, Fraction) or isinstance(x, int) for row in m for x in row):
        return exact.det([[Fraction(x) for x in row] for row in m])
    return float(np.linalg.det(np.array(m, dtype=float))) if len(m) > 1 else float(m[0][0])


class CoefficientError(ValueError):
    """Coefficients are missing, inconsistent or failed validation."""


@dataclass(frozen=True)
class CoefficientTable:
    """Exact coefficients ``c[alpha][beta]`` with ``Z_alpha = w_even * Σ_beta c Δ_beta``."""

    N: int
    patterns: tuple[LinkPattern, ...]
    coeffs: tuple[tuple[Fraction, ...], ...]
    validation: tuple = field(default=(), compare=False, repr=False)

    def row(self, alpha: LinkPattern) -> tuple[Fraction, ...]:
        return self.coeffs[self.patterns.index(alpha)]

    @property
    def is_integral(self) -> bool:
        return all(c.denominator == 1 for row in self.coeffs for c in row)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "patterns": [str(p) for p in self.patterns],
            "coeffs": [[f"{c.numerator}/{c.denominator}" for c in row] for row in self.coeffs],
            "validation": [
                {"graph": graph_to_dict(g), "marked": list(m)} for g, m in self.validation
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> CoefficientTable:
        pats = tuple(LinkPattern.parse(s) for s in data["patterns"])
        coeffs = tuple(tuple(Fraction(c) for c in row) for row in data["coeffs"])
        val = tuple(
            (graph_from_dict(rec["graph"]), tuple(rec["marked"])) for rec in data.get("validation", [])
        )
        table = cls(int(data["N"]), pats, coeffs, val)
        if pats != enumerate_link_patterns(table.N):
            raise CoefficientError("pattern list does not match the canonical enumeration")
        return table


def save_coefficients(table: CoefficientTable, path: str | Path) -> None:
    Path(path).write_text(json.dumps(table.to_dict(), indent=1))


def load_coefficients(path: str | Path, validate: bool = True) -> CoefficientTable:
    """Load a cached table; re-check it against the enumeration oracle on its held-out instances."""
    table = CoefficientTable.from_dict(json.loads(Path(path).read_text()))
    if validate:
        if len(table.validation) < 2:
            raise CoefficientError("cached table carries fewer than two validation instances")
        for g, marked in table.validation:
            _assert_matches_oracle(table, g, marked)
    return table


def even_weight_product(graph: _DomainView, marked: Sequence[int]):
    """Product of the weights of the even-indexed marked edges."""
    ws = [graph.weights[e] for i, e in enumerate(marked, start=1) if i % 2 == 0]
    if any(isinstance(w, float) for w in ws):
        return math.prod(float(w) for w in ws)
    return math.prod((Fraction(w) for w in ws), start=Fraction(1))


def determinant_features(ks: KernelSet, marked: Sequence[int], N: int) -> list:
    return [excursion_determinant(ks.K, beta, list(marked)) for beta in enumerate_link_patterns(N)]


def _check_marked(graph: _DomainView, marked: Sequence[int]) -> None:
    if len(set(marked)) != len(marked):
        raise GraphError("marked edges must be distinct")
    if len(marked) % 2 or not marked:
        raise GraphError("need an even, nonzero number of marked edges")


def discrete_Z(
    graph: _DomainView,
    marked: Sequence[int],
    alpha: LinkPattern | str,
    table: CoefficientTable,
    ks: KernelSet | None = None,
    normalized: bool = False,
    exact_arith: bool = True,
):
    """Pairing probability ``Z_alpha`` (or the total ``Z_N`` for ``alpha == "total"``).

    ``normalized=True`` drops the product of even-edge weights.
    """
    marked = list(marked)
    _check_marked(graph, marked)
    N = len(marked) // 2
    if table.N != N:
        raise CoefficientError(f"coefficient table is for N={table.N}, not {N}")
    ks = ks if ks is not None else kernels(graph, exact=exact_arith)
    feats = determinant_features(ks, marked, N)
    rows = table.coeffs if alpha == "total" else (table.row(alpha),)
    val = sum((c * f for row in rows for c, f in zip(row, feats)), start=Fraction(0) if ks.exact else 0.0)
    if not ks.exact:
        val = float(val)
    if normalized:
        return val
    return even_weight_product(graph, marked) * val


def discrete_Z_all(graph, marked, table, ks=None, normalized=False, exact_arith=True) -> dict:
    """``{alpha: Z_alpha}`` for every pattern, sharing one kernel solve."""
    ks = ks if ks is not None else kernels(graph, exact=exact_arith)
    return {
        a: discrete_Z(graph, marked, a, table, ks=ks, normalized=normalized) for a in table.patterns
    }


def recover_coefficients(
    N: int,
    instances: Sequence[tuple[_DomainView, Sequence[int]]],
    n_holdout: int = 2,
) -> CoefficientTable:
    """Solve exactly for the coefficient matrix from oracle pairing probabilities.

    The last ``n_holdout`` instances are not used in the solve; the table is
    returned only if it reproduces them exactly.
    """
    from .oracle import enumerate_trees, pairing_probabilities

    pats = enumerate_link_patterns(N)
    if n_holdout < 2:
        raise CoefficientError("at least two held-out instances are required")
    fit, held = list(instances[: len(instances) - n_holdout]), list(instances[len(instances) - n_holdout :])
    if len(held) < n_holdout:
        raise CoefficientError("not enough instances")
    feats, targets = [], []
    for g, marked in fit:
        ks = kernels(g, exact=True)
        w = even_weight_product(g, marked)
        feats.append([w * f for f in determinant_features(ks, marked, N)])
        probs = pairing_probabilities(enumerate_trees(g), marked)
        targets.append([probs[a] for a in pats])
    coeffs = []
    for k, _ in enumerate(pats):
        try:
            coeffs.append(tuple(exact.solve_overdetermined(feats, [t[k] for t in targets])))
        except exact.RankError as exc:
            raise CoefficientError(f"instance family is rank deficient: {exc}") from exc
        except exact.InconsistentSystemError as exc:
            raise CoefficientError("inconsistent system: check the instances") from exc
    table = CoefficientTable(N, pats, tuple(coeffs), tuple((g, tuple(m)) for g, m in held))
    for g, marked in held:
        _assert_matches_oracle(table, g, marked)
    return table


INSTANCE_SHAPES = ((2, 2), (2, 3), (3, 3))
DATA_DIR = Path(__file__).with_name("data")


def coefficient_instances(N: int, count: int, seed: int = 0) -> list[tuple[_DomainView, tuple[int, ...]]]:
    """Small grids with random rational weights and random counterclockwise marked edges."""
    from .graph import build_square_domain

    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        cols, rows = INSTANCE_SHAPES[len(out) % len(INSTANCE_SHAPES)]
        g = build_square_domain(cols, rows, 1.0)
        if len(g.boundary_edge_order) < 2 * N:
            continue
        num = rng.integers(1, 6, size=len(g.weights))
        den = rng.integers(1, 4, size=len(g.weights))
        g = g.with_weights(tuple(Fraction(int(a), int(b)) for a, b in zip(num, den)))
        picks = np.sort(rng.choice(len(g.boundary_edge_order), size=2 * N, replace=False))
        out.append((g, tuple(int(g.boundary_edge_order[i]) for i in picks)))
    return out


def default_table(N: int, cache_dir: str | Path | None = None, validate: bool = True, seed: int = 0) -> CoefficientTable:
    """Coefficient table for ``N`` pairs, loaded from the cache or recovered and cached."""
    path = Path(cache_dir or DATA_DIR) / f"coefficients_N{N}.json"
    if path.exists():
        try:
            return load_coefficients(path, validate=validate)
        except CoefficientError:
            path.unlink()
    n_fit = 2 * catalan(N) + 2
    table = recover_coefficients(N, coefficient_instances(N, n_fit + 2, seed=seed))
    path.parent.mkdir(parents=True, exist_ok=True)
    save_coefficients(table, path)
    return table


def _assert_matches_oracle(table: CoefficientTable, graph, marked) -> None:
    from .oracle import enumerate_trees, pairing_probabilities

    probs = pairing_probabilities(enumerate_trees(graph), marked)
    ks = kernels(graph, exact=True)
    for a in table.patterns:
        z = discrete_Z(graph, marked, a, table, ks=ks)
        if z != probs[a]:
            raise CoefficientError(f"held-out mismatch for {a}: formula {z} vs oracle {probs[a]}")


def continuum_determinant(alpha: LinkPattern, x: Sequence[float]) -> float:
    x = _check_increasing(x)
    orient = left_to_right_orientation(alpha)
    m = np.array([[1.0 / (math.pi * (x[a - 1] - x[b - 1]) ** 2) for (_, b) in orient] for (a, _) in orient])
    return float(np.linalg.det(m))


def _check_increasing(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(np.diff(x) <= 0):
        raise ValueError("coordinates must be strictly increasing")
    return x


def _rows(alpha, table: CoefficientTable):
    return table.coeffs if alpha == "total" else (table.row(alpha),)


def continuum_Z(alpha: LinkPattern | str, x: Sequence[float], table: CoefficientTable) -> float:
    """Continuum partition function: the same coefficient combination of continuum determinants."""
    x = _check_increasing(x)
    dets = [continuum_determinant(b, x) for b in table.patterns]
    return float(sum(float(c) * d for row in _rows(alpha, table) for c, d in zip(row, dets)))


def _determinant_gradient(alpha: LinkPattern, x: np.ndarray) -> tuple[float, np.ndarray]:
    orient = left_to_right_orientation(alpha)
    n = len(orient)
    m = np.empty((n, n))
    dm = np.empty((n, n))
    for k, (a, _) in enumerate(orient):
        for l, (_, b) in enumerate(orient):
            d = x[a - 1] - x[b - 1]
            m[k, l] = 1.0 / (math.pi * d * d)
            dm[k, l] = -2.0 / (math.pi * d**3)
    cof = np.empty((n, n))
    for k in range(n):
        for l in range(n):
            minor = np.delete(np.delete(m, k, axis=0), l, axis=1)
            cof[k, l] = (-1) ** (k + l) * (np.linalg.det(minor) if minor.size else 1.0)
    value = float(np.sum(m[0] * cof[0]))
    grad = np.zeros(x.size)
    for k, (a, _) in enumerate(orient):
        for l, (_, b) in enumerate(orient):
            grad[a - 1] += cof[k, l] * dm[k, l]
            grad[b - 1] -= cof[k, l] * dm[k, l]
    return value, grad


def grad_continuum_Z(alpha: LinkPattern | str, x: Sequence[float], table: CoefficientTable) -> np.ndarray:
    """Analytic gradient via cofactor expansion of each determinant."""
    return value_and_grad_continuum_Z(alpha, x, table)[1]


def value_and_grad_continuum_Z(alpha, x, table: CoefficientTable) -> tuple[float, np.ndarray]:
    x = _check_increasing(x)
    parts = [_determinant_gradient(b, x) for b in table.patterns]
    val, grad = 0.0, np.zeros(x.size)
    for row in _rows(alpha, table):
        for c, (d, g) in zip(row, parts):
            val += float(c) * d
            grad += float(c) * g
    return val, grad


@dataclass(frozen=True)
class PartitionEvaluator:
    """Continuum ``Z_alpha`` or ``Z_N`` bound to a coefficient table."""

    table: CoefficientTable
    alpha: LinkPattern | str = "total"

    @property
    def N(self) -> int:
        return self.table.N

    def __call__(self, x) -> float:
        return continuum_Z(self.alpha, x, self.table)

    def value_and_grad(self, x) -> tuple[float, np.ndarray]:
        return value_and_grad_continuum_Z(self.alpha, x, self.table)

    def log_grad(self, x) -> np.ndarray:
        v, g = self.value_and_grad(x)
        return g / v

    @property
    def ident(self) -> str:
        return f"N{self.N}:{self.alpha}"


@dataclass(frozen=True)
class RationalPartition:
    """``pi**N`` times the continuum partition function, exact for rational coordinates.

    The constant factor drops out of the (linear, homogeneous) second-order
    equations, so finite differences of this evaluator carry no rounding error.
    """

    table: CoefficientTable
    alpha: LinkPattern | str = "total"

    def __call__(self, x) -> Fraction:
        x = tuple(Fraction(v) for v in x)
        if any(b <= a for a, b in zip(x, x[1:])):
            raise ValueError("coordinates must be strictly increasing")
        dets = _rational_determinants(self.table.patterns, x)
        return sum((c * d for row in _rows(self.alpha, self.table) for c, d in zip(row, dets)), start=Fraction(0))


@lru_cache(maxsize=8192)
def _rational_determinants(patterns: tuple[LinkPattern, ...], x: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
    out = []
    for b in patterns:
        orient = left_to_right_orientation(b)
        out.append(exact.det([[1 / (x[p - 1] - x[q - 1]) ** 2 for (_, q) in orient] for (p, _) in orient]))
    return tuple(out)


def _shifted(x, i: int, d):
    y = list(x)
    y[i] = y[i] + d
    return y


def _partials(f: Callable, x, h, idx: Sequence[int], second: int | None):
    f0 = f(x)
    first = {i: (f(_shifted(x, i, h)) - f(_shifted(x, i, -h))) / (2 * h) for i in idx}
    sec = None
    if second is not None:
        sec = (f(_shifted(x, second, h)) - 2 * f0 + f(_shifted(x, second, -h))) / (h * h)
    return f0, first, sec


def pde_terms(evaluator: Callable, x, j: int, h) -> np.ndarray:
    """The individual terms of the second-order operator, central differences of step ``h``.

    ``j`` is 1-based.  The residual is the sum of the returned terms.  With a
    :class:`RationalPartition`, rational ``x`` and a :class:`~fractions.Fraction`
    step, the terms are exact rationals (object array).
    """
    rational = isinstance(h, Fraction)
    x = [Fraction(v) for v in x] if rational else [float(v) for v in x]
    jj = j - 1
    others = [i for i in range(len(x)) if i != jj]
    f0, first, sec = _partials(evaluator, x, h, others, jj)
    terms = [sec]
    for i in others:
        d = x[i] - x[jj]
        terms.append(2 / d * first[i])
        terms.append(-2 / d**2 * f0)
    return np.array(terms, dtype=object if rational else float)


def pde_residual(evaluator: Callable, x, j: int, h) -> float:
    return float(sum(pde_terms(evaluator, x, j, h)))


def relative_pde_residual(evaluator: Callable, x, j: int, h) -> float:
    t = pde_terms(evaluator, x, j, h)
    return float(abs(sum(t)) / sum(abs(v) for v in t))


def boundary_visit_pde_terms(zeta: Callable, x_in: float, x_out: float, xhat: Sequence[float], h: float) -> np.ndarray:
    """Terms of the operator for a branch from ``x_in`` to ``x_out`` visiting the boundary at ``xhat``."""
    x = np.array([x_in, x_out, *xhat], dtype=float)

    def f(y):
        return zeta(y[0], y[1], y[2:])

    f0, first, sec = _partials(f, x, h, range(1, x.size), 0)
    terms = [-sec, -2.0 / (x_out - x_in) * first[1], 2.0 / (x_out - x_in) ** 2 * f0]
    for i, xh in enumerate(xhat, start=2):
        terms.append(-2.0 / (xh - x_in) * first[i])
        terms.append(6.0 / (xh - x_in) ** 2 * f0)
    return np.array(terms)


def boundary_visit_pde_residual(zeta: Callable, x_in: float, x_out: float, xhat: Sequence[float], h: float) -> float:
    return float(np.sum(boundary_visit_pde_terms(zeta, x_in, x_out, xhat, h)))
