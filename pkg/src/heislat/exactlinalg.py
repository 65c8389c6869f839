"""Exact linear algebra over the rationals: fraction-free determinants and
rank via Bareiss elimination, plus small helpers for matrix products."""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import List, Sequence

import numpy as np

__all__ = [
    "det_exact",
    "rank_exact",
    "rank_tolerant",
    "mat_mul",
    "mat_vec",
    "identity",
]


def _row_scaled_int_matrix(rows: Sequence[Sequence]) -> tuple[List[List[int]], Fraction]:
    """Scale each row to integers; return (int matrix, product of scales)."""
    out = []
    scale = Fraction(1)
    for row in rows:
        fr = [Fraction(v) for v in row]
        lcm = 1
        for v in fr:
            lcm = lcm * v.denominator // gcd(lcm, v.denominator)
        out.append([int(v * lcm) for v in fr])
        scale *= lcm
    return out, scale


def det_exact(rows: Sequence[Sequence]) -> Fraction:
    """Determinant of a square rational matrix by Bareiss elimination.

    Rows are first scaled to integers so all intermediate divisions are
    exact integer divisions, which keeps entry growth polynomial.
    """
    m, scale = _row_scaled_int_matrix(rows)
    n = len(m)
    if any(len(r) != n for r in m):
        raise ValueError("matrix must be square")
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for i in range(k + 1, n):
                if m[i][k] != 0:
                    m[k], m[i] = m[i], m[k]
                    sign = -sign
                    break
            else:
                return Fraction(0)
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = m[k][k]
    return Fraction(sign * m[n - 1][n - 1]) / scale


def rank_exact(rows: Sequence[Sequence]) -> int:
    """Rank of a rational matrix by fraction-free elimination."""
    m, _ = _row_scaled_int_matrix(rows)
    nrow = len(m)
    ncol = len(m[0]) if nrow else 0
    rank = 0
    prev = 1
    for col in range(ncol):
        piv = None
        for i in range(rank, nrow):
            if m[i][col] != 0:
                piv = i
                break
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for i in range(rank + 1, nrow):
            for j in range(col + 1, ncol):
                m[i][j] = (m[i][j] * m[rank][col] - m[i][col] * m[rank][j]) // prev
            m[i][col] = 0
        prev = m[rank][col]
        rank += 1
        if rank == nrow:
            break
    return rank


def rank_tolerant(rows: Sequence[Sequence], eps_rel: float = 1e-9) -> int:
    """Floating rank: singular values above eps_rel * max |entry|."""
    a = np.array([[float(v) for v in r] for r in rows], dtype=float)
    top = np.max(np.abs(a)) if a.size else 0.0
    if top == 0.0:
        return 0
    sv = np.linalg.svd(a, compute_uv=False)
    return int(np.sum(sv > eps_rel * top))


def identity(n: int) -> List[List[Fraction]]:
    return [[Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]


def mat_mul(a: Sequence[Sequence], b: Sequence[Sequence]) -> List[List[Fraction]]:
    rows, inner, cols = len(a), len(b), len(b[0])
    if len(a[0]) != inner:
        raise ValueError("incompatible shapes")
    return [
        [sum((Fraction(a[i][k]) * Fraction(b[k][j]) for k in range(inner)), Fraction(0)) for j in range(cols)]
        for i in range(rows)
    ]


def mat_vec(a: Sequence[Sequence], v: Sequence) -> List[Fraction]:
    if len(a[0]) != len(v):
        raise ValueError("incompatible shapes")
    return [sum((Fraction(a[i][k]) * Fraction(v[k]) for k in range(len(v))), Fraction(0)) for i in range(len(a))]
