"""
Dense Gaussian elimination with partial pivoting.

Exact mode runs fraction-free (Bareiss) elimination on the integer-scaled
augmented matrix and back-substitutes in rationals. Float mode delegates to
LAPACK through numpy.
"""
import logging
from fractions import Fraction
from math import lcm
from typing import Dict, List, Sequence

import numpy as np

from app.markov.errors import SingularSystem
from app.markov.scalar import Arithmetic, Scalar

logger = logging.getLogger(__name__)

SparseRow = Dict[int, Scalar]


def solve(matrix: Sequence[SparseRow], rhs: Sequence[Sequence[Scalar]], mode: Arithmetic) -> List[List[Scalar]]:
    """Solves A·X = B for X; `matrix` holds the sparse rows of A, `rhs` the n×k matrix B."""
    n = len(matrix)
    if n == 0:
        return []
    k = len(rhs[0]) if rhs else 0
    logger.debug("solving %dx%d system with %d right-hand sides (%s)", n, n, k, mode.value)
    if mode == Arithmetic.EXACT:
        return _solve_exact(matrix, rhs, n, k)
    return _solve_float(matrix, rhs, n, k)


def _solve_exact(matrix, rhs, n: int, k: int) -> List[List[Fraction]]:
    width = n + k
    m: List[List[int]] = []
    for i in range(n):
        row = [Fraction(0)] * width
        for j, value in matrix[i].items():
            row[j] = Fraction(value)
        for j in range(k):
            row[n + j] = Fraction(rhs[i][j])
        scale = 1
        for value in row:
            scale = lcm(scale, value.denominator)
        m.append([int(value * scale) for value in row])

    previous = 1
    for c in range(n):
        pivot_row = max(range(c, n), key=lambda r: abs(m[r][c]))
        if m[pivot_row][c] == 0:
            raise SingularSystem(n, (c, c))
        if pivot_row != c:
            m[c], m[pivot_row] = m[pivot_row], m[c]
        pivot = m[c][c]
        row_c = m[c]
        for r in range(c + 1, n):
            row_r = m[r]
            factor = row_r[c]
            if factor == 0:
                # Bareiss still has to rescale the row by pivot/previous
                for j in range(c + 1, width):
                    row_r[j] = row_r[j] * pivot // previous
                continue
            for j in range(c + 1, width):
                row_r[j] = (row_r[j] * pivot - factor * row_c[j]) // previous
            row_r[c] = 0
        previous = pivot

    solution: List[List[Fraction]] = [[Fraction(0)] * k for _ in range(n)]
    for i in range(n - 1, -1, -1):
        row = m[i]
        for col in range(k):
            acc = Fraction(row[n + col])
            for j in range(i + 1, n):
                if row[j]:
                    acc -= row[j] * solution[j][col]
            solution[i][col] = acc / row[i]
    return solution


def _solve_float(matrix, rhs, n: int, k: int) -> List[List[float]]:
    a = np.zeros((n, n), dtype=float)
    for i, row in enumerate(matrix):
        for j, value in row.items():
            a[i, j] = float(value)
    b = np.array([[float(v) for v in r] for r in rhs], dtype=float).reshape(n, k)
    try:
        x = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        raise SingularSystem(n) from None
    if not np.all(np.isfinite(x)):
        raise SingularSystem(n)
    return x.tolist()
