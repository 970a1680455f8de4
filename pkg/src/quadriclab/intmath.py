"""Exact integer and rational linear algebra helpers.

Everything here works on plain Python ints / Fractions so that rank,
kernel, and primality decisions are never made in floating point.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Vec = tuple
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def rational_rank(rows: Sequence[Sequence]) -> int:
    """Rank over Q of a matrix given as rows of ints/Fractions."""
    m = [[Fraction(x) for x in row] for row in rows]
    if not m:
        return 0
    n_rows, n_cols = len(m), len(m[0])
    rank = 0
    row = 0
    for col in range(n_cols):
        piv = next((r for r in range(row, n_rows) if m[r][col] != 0), None)
        if piv is None:
            continue
        m[row], m[piv] = m[piv], m[row]
        pv = m[row][col]
        for r in range(row + 1, n_rows):
            if m[r][col] != 0:
                f = m[r][col] / pv
                for c in range(col, n_cols):
                    m[r][c] -= f * m[row][c]
        rank += 1
        row += 1
        if row == n_rows:
            break
    return rank


def symmetric_rank(mat: Sequence[Sequence]) -> int:
    """Rank of a (not necessarily symmetric) square exact matrix."""
    return rational_rank(mat)


def integer_kernel_basis(vec: Sequence[int]) -> list[tuple[int, ...]]:
    """Basis of the rank-(d-1) sublattice {k in Z^d : k . vec = 0}.

    Uses column-style Hermite reduction of the 1 x d matrix ``vec``:
    unimodular column operations turn it into (g, 0, ..., 0), and the
    columns mapped onto the zero entries form a kernel basis.  Requires
    vec != 0.
    """
    d = len(vec)
    a = list(int(x) for x in vec)
    if all(x == 0 for x in a):
        raise ValueError("kernel basis of the zero vector is all of Z^d")
    # U starts as identity; column ops applied to both a (as a row) and U.
    u = [[int(i == j) for j in range(d)] for i in range(d)]

    def col_swap(i, j):
        a[i], a[j] = a[j], a[i]
        for r in u:
            r[i], r[j] = r[j], r[i]

    def col_addmul(i, j, f):
        # col_i += f * col_j
        a[i] += f * a[j]
        for r in u:
            r[i] += f * r[j]

    # gcd sweep into column 0
    while True:
        nz = [i for i in range(d) if a[i] != 0]
        if len(nz) == 1:
            if nz[0] != 0:
                col_swap(0, nz[0])
            break
        piv = min(nz, key=lambda i: abs(a[i]))
        if piv != 0:
            col_swap(0, piv)
        done = True
        for i in range(1, d):
            if a[i] != 0:
                col_addmul(i, 0, -(a[i] // a[0]))
                if a[i] != 0:
                    done = False
        if done and all(a[i] == 0 for i in range(1, d)):
            break
    basis = [tuple(u[r][c] for r in range(d)) for c in range(1, d)]
    for b in basis:
        assert sum(x * y for x, y in zip(b, vec)) == 0
    return basis


def dot(u: Sequence, v: Sequence):
    return sum(x * y for x, y in zip(u, v))


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for n < 3.3e24 (covers 64 bit)."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def legendre_symbol(a: int, p: int) -> int:
    """(a|p) in {-1, 0, 1} for odd prime p."""
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1
