"""Small exact integer matrices as tuples of row tuples (Python big ints)."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Matrix = tuple[tuple[int, ...], ...]


def identity(m: int) -> Matrix:
    return tuple(tuple(int(i == j) for j in range(m)) for i in range(m))


def as_matrix(rows: Sequence[Sequence[int]]) -> Matrix:
    return tuple(tuple(int(x) for x in row) for row in rows)


def matmul(a: Matrix, b: Matrix) -> Matrix:
    cols = list(zip(*b))
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in cols) for row in a)


def matvec(a: Matrix, v: Sequence):
    return tuple(sum((x * y for x, y in zip(row, v)), v[0] - v[0]) for row in a)


def column_sums(a: Matrix) -> tuple[int, ...]:
    return tuple(sum(col) for col in zip(*a))


def determinant(a: Matrix) -> int:
    """Exact determinant by fraction-valued Gaussian elimination."""
    n = len(a)
    rows = [[Fraction(x) for x in row] for row in a]
    det = Fraction(1)
    for c in range(n):
        pivot = next((r for r in range(c, n) if rows[r][c] != 0), None)
        if pivot is None:
            return 0
        if pivot != c:
            rows[c], rows[pivot] = rows[pivot], rows[c]
            det = -det
        det *= rows[c][c]
        for r in range(c + 1, n):
            f = rows[r][c] / rows[c][c]
            if f:
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[c])]
    return int(det)


def is_positive(a: Matrix) -> bool:
    return all(x > 0 for row in a for x in row)


def format_matrix(a: Matrix) -> list[list[str]]:
    return [[str(x) for x in row] for row in a]


def parse_matrix(rows) -> Matrix:
    return tuple(tuple(int(x) for x in row) for row in rows)
