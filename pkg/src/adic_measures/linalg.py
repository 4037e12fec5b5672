"""Small exact matrix helpers on tuples of ints or Fractions."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Matrix = tuple[tuple[int, ...], ...]


def shape(m: Sequence[Sequence]) -> tuple[int, int]:
    return len(m), (len(m[0]) if m else 0)


def matvec(m: Sequence[Sequence], x: Sequence) -> tuple:
    return tuple(sum(a * b for a, b in zip(row, x) if a) for row in m)


def vecmat(y: Sequence, m: Sequence[Sequence]) -> tuple:
    """``m^T y``: the column-wise combination used for measures."""
    cols = len(m[0]) if m else 0
    out = [0] * cols
    for yv, row in zip(y, m):
        if not yv:
            continue
        for j, a in enumerate(row):
            if a:
                out[j] += a * yv
    return tuple(out)


def matmul(a: Sequence[Sequence], b: Sequence[Sequence]) -> Matrix:
    bt = list(zip(*b))
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in bt) for row in a)


def dot(x: Sequence, y: Sequence):
    return sum(a * b for a, b in zip(x, y))


def l1(x: Sequence, y: Sequence):
    return sum(abs(a - b) for a, b in zip(x, y))


def _eliminate(m: Sequence[Sequence]) -> tuple[list[list[Fraction]], int, int]:
    """Row echelon form; returns (rows, rank, sign of the permutation)."""
    rows = [[Fraction(x) for x in r] for r in m]
    n_rows, n_cols = shape(rows)
    rank, sign = 0, 1
    for col in range(n_cols):
        pivot = next((r for r in range(rank, n_rows) if rows[r][col] != 0), None)
        if pivot is None:
            continue
        if pivot != rank:
            rows[rank], rows[pivot] = rows[pivot], rows[rank]
            sign = -sign
        p = rows[rank][col]
        for r in range(rank + 1, n_rows):
            if rows[r][col]:
                f = rows[r][col] / p
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[rank])]
        rank += 1
        if rank == n_rows:
            break
    return rows, rank, sign


def rank(m: Sequence[Sequence]) -> int:
    return _eliminate(m)[1]


def det(m: Sequence[Sequence]) -> Fraction:
    n_rows, n_cols = shape(m)
    if n_rows != n_cols:
        raise ValueError("determinant of a non-square matrix")
    rows, r, sign = _eliminate(m)
    if r < n_rows:
        return Fraction(0)
    out = Fraction(sign)
    for i in range(n_rows):
        out *= rows[i][i]
    return out


def solve(m: Sequence[Sequence], b: Sequence) -> tuple[Fraction, ...] | None:
    """Least-effort exact solve of ``m x = b``; ``None`` if inconsistent."""
    aug = [list(map(Fraction, row)) + [Fraction(v)] for row, v in zip(m, b)]
    n_rows, n_cols = len(aug), len(aug[0]) - 1
    where = [-1] * n_cols
    r = 0
    for col in range(n_cols):
        pivot = next((i for i in range(r, n_rows) if aug[i][col] != 0), None)
        if pivot is None:
            continue
        aug[r], aug[pivot] = aug[pivot], aug[r]
        p = aug[r][col]
        aug[r] = [x / p for x in aug[r]]
        for i in range(n_rows):
            if i != r and aug[i][col]:
                f = aug[i][col]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[r])]
        where[col] = r
        r += 1
    for i in range(r, n_rows):
        if aug[i][-1] != 0:
            return None
    return tuple(aug[where[c]][-1] if where[c] >= 0 else Fraction(0) for c in range(n_cols))
