"""Exact rational matrices: fraction-free (Bareiss) elimination and inverse."""
from __future__ import annotations

from typing import Sequence

from gmpy2 import mpq

from .polynomial import Rational, rational


class Singular(ArithmeticError):
    pass


class RationalMatrix:
    """Square matrix of exact rationals (row-major tuple of tuples)."""

    __slots__ = ("rows",)

    def __init__(self, rows: Sequence[Sequence]):
        rows = tuple(tuple(rational(x) for x in r) for r in rows)
        if any(len(r) != len(rows) for r in rows):
            raise ValueError("matrix must be square")
        self.rows = rows

    @classmethod
    def identity(cls, n: int) -> RationalMatrix:
        return cls([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @property
    def n(self) -> int:
        return len(self.rows)

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __eq__(self, other):
        return isinstance(other, RationalMatrix) and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __matmul__(self, other: RationalMatrix) -> RationalMatrix:
        n = self.n
        return RationalMatrix(
            [[sum((self.rows[i][k] * other.rows[k][j] for k in range(n)), mpq(0)) for j in range(n)] for i in range(n)]
        )

    def transpose(self) -> RationalMatrix:
        return RationalMatrix(list(zip(*self.rows)))

    def is_symmetric(self) -> bool:
        return self == self.transpose()

    def __repr__(self):
        body = "; ".join(" ".join(str(x) for x in r) for r in self.rows)
        return f"RationalMatrix([{body}])"


def _bareiss(aug: list[list[Rational]], ncols: int) -> tuple[list[list[Rational]], Rational]:
    """Fraction-free forward elimination on integer rows; returns rows and determinant sign/scale."""
    n = len(aug)
    sign = 1
    prev = mpq(1)
    for k in range(n):
        pivot = next((r for r in range(k, n) if aug[r][k] != 0), None)
        if pivot is None:
            raise Singular(f"matrix is singular (no pivot in column {k + 1})")
        if pivot != k:
            aug[k], aug[pivot] = aug[pivot], aug[k]
            sign = -sign
        pk = aug[k][k]
        for i in range(k + 1, n):
            aik = aug[i][k]
            row_i, row_k = aug[i], aug[k]
            for j in range(k, ncols):
                row_i[j] = (row_i[j] * pk - aik * row_k[j]) / prev
        prev = pk
    return aug, sign * aug[n - 1][n - 1]


def _integer_rows(m: RationalMatrix) -> tuple[list[list[Rational]], Rational]:
    """Scale every entry by the common denominator so elimination stays in Z."""
    from math import lcm

    den = 1
    for r in m.rows:
        for x in r:
            den = lcm(den, int(x.denominator))
    return [[x * den for x in r] for r in m.rows], mpq(den)


def determinant(m: RationalMatrix) -> Rational:
    rows, den = _integer_rows(m)
    try:
        _, det = _bareiss(rows, m.n)
    except Singular:
        return mpq(0)
    return det / den ** m.n


def invert_matrix(m: RationalMatrix) -> RationalMatrix:
    """Exact inverse; raises :class:`Singular` on an exactly zero determinant."""
    n = m.n
    rows, den = _integer_rows(m)
    aug = [rows[i] + [mpq(den if i == j else 0) for j in range(n)] for i in range(n)]
    aug, _ = _bareiss(aug, 2 * n)
    # back substitution on the (integer) upper-triangular system
    inv = [[mpq(0)] * n for _ in range(n)]
    for col in range(n):
        for i in range(n - 1, -1, -1):
            s = aug[i][n + col]
            for j in range(i + 1, n):
                s -= aug[i][j] * inv[j][col]
            inv[i][col] = s / aug[i][i]
    return RationalMatrix(inv)


def matrix_rank(rows: Sequence[Sequence]) -> int:
    """Exact rank of a (possibly rectangular) list of rational rows."""
    work = [[rational(x) for x in r] for r in rows if any(r)]
    if not work:
        return 0
    ncols = len(work[0])
    rank = 0
    for col in range(ncols):
        pivot = next((r for r in range(rank, len(work)) if work[r][col] != 0), None)
        if pivot is None:
            continue
        work[rank], work[pivot] = work[pivot], work[rank]
        p = work[rank]
        for r in range(rank + 1, len(work)):
            f = work[r][col] / p[col]
            if f:
                work[r] = [x - f * y for x, y in zip(work[r], p)]
        rank += 1
        if rank == len(work):
            break
    return rank
