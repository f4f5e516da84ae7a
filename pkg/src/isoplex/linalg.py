"""Small exact linear algebra over Q (Python ints and Fractions)."""
from __future__ import annotations

from fractions import Fraction


def det(rows) -> Fraction:
    """Determinant by fraction-free Bareiss elimination (exact on ints)."""
    a = [list(r) for r in rows]
    n = len(a)
    if any(len(r) != n for r in a):
        raise ValueError("det needs a square matrix")
    if n == 0:
        return Fraction(1)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return Fraction(0)
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                v = a[i][j] * a[k][k] - a[i][k] * a[k][j]
                a[i][j] = v / prev if isinstance(v, Fraction) else _exact_div(v, prev)
        prev = a[k][k]
    return Fraction(sign * a[n - 1][n - 1])


def _exact_div(v, d):
    if isinstance(v, int) and isinstance(d, int):
        q, r = divmod(v, d)
        if r == 0:
            return q
    return Fraction(v) / d


def rref(rows):
    """Reduced row echelon form; returns ``(matrix, pivot_columns)``."""
    a = [[Fraction(v) for v in r] for r in rows]
    if not a:
        return a, []
    ncols = len(a[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(a)) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        pv = a[r][c]
        a[r] = [v / pv for v in a[r]]
        for i in range(len(a)):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == len(a):
            break
    return a, pivots


def matrix_rank(rows) -> int:
    return len(rref(rows)[1])


def solve(A, b):
    """Unique solution of ``A x = b`` or ``None`` when singular/inconsistent."""
    n = len(A[0]) if A else 0
    aug = [list(r) + [v] for r, v in zip(A, b)]
    red, piv = rref(aug)
    if n in piv or len(piv) != n:
        return None
    x = [Fraction(0)] * n
    for row, c in zip(red, piv):
        x[c] = row[-1]
    return x


def inverse(A):
    n = len(A)
    aug = [list(r) + [int(i == j) for j in range(n)] for i, r in enumerate(A)]
    red, piv = rref(aug)
    if piv[:n] != list(range(n)):
        raise ZeroDivisionError("singular matrix")
    return [row[n:] for row in red[:n]]


def transpose(A):
    return [list(c) for c in zip(*A)]


def matmul(A, B):
    Bt = transpose(B)
    return [[sum(x * y for x, y in zip(r, c)) for c in Bt] for r in A]
