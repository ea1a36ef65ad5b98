"""Small dense linear algebra over the rationals."""

from __future__ import annotations

from fractions import Fraction


class RankError(ValueError):
    """The system does not determine a unique solution."""


class InconsistentSystemError(ValueError):
    """The system has no exact solution."""


def row_reduce(rows: list[list[Fraction]], n_cols: int) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form of ``rows`` restricted to the first ``n_cols`` pivot columns."""
    m = [list(r) for r in rows]
    pivots: list[int] = []
    r = 0
    for c in range(n_cols):
        piv = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m, pivots


def solve(a: list[list[Fraction]], b: list[list[Fraction]]) -> list[list[Fraction]]:
    """Exact solution of ``a x = b`` for square nonsingular ``a`` and matrix ``b``."""
    n = len(a)
    if n == 0:
        return []
    aug = [list(map(Fraction, a[i])) + list(map(Fraction, b[i])) for i in range(n)]
    red, piv = row_reduce(aug, n)
    if len(piv) < n:
        raise RankError("singular matrix")
    return [row[n:] for row in red[:n]]


def inverse(a: list[list[Fraction]]) -> list[list[Fraction]]:
    n = len(a)
    eye = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    return solve(a, eye)


def solve_overdetermined(a: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    """Unique exact solution of a consistent, full-column-rank system."""
    n = len(a[0]) if a else 0
    aug = [list(map(Fraction, row)) + [Fraction(rhs)] for row, rhs in zip(a, b)]
    red, piv = row_reduce(aug, n)
    if len(piv) < n:
        raise RankError(f"rank {len(piv)} < {n} unknowns")
    for row in red[n:]:
        if row[n] != 0:
            raise InconsistentSystemError("no exact solution")
    return [red[i][n] for i in range(n)]


def det(a: list[list[Fraction]]):
    """Determinant by fraction-free-style elimination; works for Fractions and floats."""
    n = len(a)
    if n == 0:
        return Fraction(1)
    m = [list(r) for r in a]
    sign = 1
    out = None
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c] != 0), None)
        if piv is None:
            return m[0][0] * 0
        if piv != c:
            m[c], m[piv] = m[piv], m[c]
            sign = -sign
        for i in range(c + 1, n):
            if m[i][c] != 0:
                f = m[i][c] / m[c][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[c])]
        out = m[c][c] if out is None else out * m[c][c]
    return sign * out
