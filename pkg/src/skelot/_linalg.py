"""Small exact linear-algebra helpers over Fraction and the integers.

Used for lattice bases, wall detection, barycentric coordinates and
independence testing.  Everything here is dense and meant for the tiny
matrices that show up in polyhedral/tropical bookkeeping.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Optional, Sequence

Row = list[Fraction]


def _frac_rows(mat: Sequence[Sequence]) -> list[Row]:
    return [[Fraction(x) for x in row] for row in mat]


def rref(mat: Sequence[Sequence]) -> tuple[list[Row], list[int]]:
    """Reduced row echelon form; returns (rows, pivot column indices)."""
    rows = _frac_rows(mat)
    if not rows:
        return [], []
    ncols = len(rows[0])
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        pivot = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        inv = rows[r][c]
        rows[r] = [v / inv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return rows, pivots


def rank(mat: Sequence[Sequence]) -> int:
    return len(rref(mat)[1])


def solve(mat: Sequence[Sequence], rhs: Sequence) -> Optional[Row]:
    """One exact solution of mat @ x = rhs, or None if inconsistent."""
    rows = _frac_rows(mat)
    b = [Fraction(v) for v in rhs]
    if not rows:
        return [] if all(v == 0 for v in b) else None
    ncols = len(rows[0])
    aug = [row + [bv] for row, bv in zip(rows, b)]
    red, pivots = rref(aug)
    x = [Fraction(0)] * ncols
    for i, c in enumerate(pivots):
        if c == ncols:  # pivot in the rhs column: inconsistent
            return None
        x[c] = red[i][ncols]
    # verify (free variables set to zero)
    for row, bv in zip(rows, b):
        if sum(a * v for a, v in zip(row, x)) != bv:
            return None
    return x


def nullspace(mat: Sequence[Sequence]) -> list[Row]:
    """Rational basis of the right kernel of mat."""
    rows = _frac_rows(mat)
    if not rows:
        return []
    ncols = len(rows[0])
    red, pivots = rref(rows)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * ncols
        vec[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            vec[pc] = -red[i][fc]
        basis.append(vec)
    return basis


def det(mat: Sequence[Sequence]) -> Fraction:
    rows = _frac_rows(mat)
    n = len(rows)
    sign = 1
    out = Fraction(1)
    for c in range(n):
        pivot = next((i for i in range(c, n) if rows[i][c] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != c:
            rows[c], rows[pivot] = rows[pivot], rows[c]
            sign = -sign
        out *= rows[c][c]
        for i in range(c + 1, n):
            if rows[i][c] != 0:
                f = rows[i][c] / rows[c][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[c])]
    return sign * out


# -- integer lattice routines ------------------------------------------------

def _col_hnf(mat: Sequence[Sequence[int]]) -> tuple[list[list[int]], list[list[int]], list[tuple[int, int]]]:
    """Column echelon form over Z with unimodular transform.

    Returns (H, U, pivots) with mat @ U = H, U unimodular, and pivots a list
    of (row, col) positions of the nonzero staircase of H.
    """
    H = [list(map(int, row)) for row in mat]
    nrows = len(H)
    ncols = len(H[0]) if nrows else 0
    U = [[1 if i == j else 0 for j in range(ncols)] for i in range(ncols)]

    def colop_swap(a: int, b: int) -> None:
        for row in H:
            row[a], row[b] = row[b], row[a]
        for row in U:
            row[a], row[b] = row[b], row[a]

    def colop_addmul(dst: int, src: int, f: int) -> None:
        for row in H:
            row[dst] += f * row[src]
        for row in U:
            row[dst] += f * row[src]

    pivots: list[tuple[int, int]] = []
    col = 0
    for r in range(nrows):
        if col >= ncols:
            break
        # euclidean reduction across columns col..ncols-1 on row r
        while True:
            nz = [j for j in range(col, ncols) if H[r][j] != 0]
            if not nz:
                break
            j0 = min(nz, key=lambda j: abs(H[r][j]))
            if j0 != col:
                colop_swap(col, j0)
            done = True
            for j in range(col + 1, ncols):
                if H[r][j] != 0:
                    colop_addmul(j, col, -(H[r][j] // H[r][col]))
                    if H[r][j] != 0:
                        done = False
            if done:
                break
        if H[r][col] != 0:
            if H[r][col] < 0:
                colop_addmul(col, col, -2)
            pivots.append((r, col))
            col += 1
    return H, U, pivots


def integer_kernel(mat: Sequence[Sequence[int]]) -> list[list[int]]:
    """Z-basis of {x in Z^n : mat @ x = 0}."""
    if not mat:
        return []
    H, U, pivots = _col_hnf(mat)
    ncols = len(mat[0])
    used = len(pivots)
    return [[U[i][j] for i in range(ncols)] for j in range(used, ncols)]


def solve_integer(mat: Sequence[Sequence[int]], rhs: Sequence) -> Optional[list[int]]:
    """One x in Z^n with mat @ x = rhs (rhs may be rational), else None."""
    H, U, pivots = _col_hnf(mat)
    ncols = len(mat[0]) if mat else 0
    b = [Fraction(v) for v in rhs]
    y = [Fraction(0)] * ncols
    for r, c in pivots:
        resid = b[r] - sum(Fraction(H[r][j]) * y[j] for j in range(c))
        q = resid / H[r][c]
        if q.denominator != 1:
            return None
        y[c] = q
    # full consistency check
    for r in range(len(H)):
        if sum(Fraction(H[r][j]) * y[j] for j in range(ncols)) != b[r]:
            return None
    x = [sum(U[i][j] * int(y[j]) for j in range(ncols)) for i in range(ncols)]
    return x


def primitive(vec: Sequence[int]) -> list[int]:
    g = 0
    for v in vec:
        g = gcd(g, abs(int(v)))
    if g == 0:
        return [0 for _ in vec]
    return [int(v) // g for v in vec]


def clear_denominators(vec: Sequence[Fraction]) -> list[int]:
    """Scale a rational vector to a primitive integer vector."""
    fracs = [Fraction(v) for v in vec]
    lcm = 1
    for v in fracs:
        lcm = lcm * v.denominator // gcd(lcm, v.denominator)
    return primitive([int(v * lcm) for v in fracs])


def saturated_lattice_basis(directions: Sequence[Sequence[Fraction]]) -> list[list[int]]:
    """Z-basis of span_Q(directions) ∩ Z^d.

    Computed as the integer kernel of an integer basis of the orthogonal
    complement, which is saturated by construction.
    """
    dirs = [[Fraction(x) for x in d] for d in directions]
    if not dirs:
        return []
    # vectors orthogonal to every direction
    comp = nullspace(dirs)
    if not comp:
        d = len(dirs[0])
        return [[1 if i == j else 0 for j in range(d)] for i in range(d)]
    comp_int = [clear_denominators(w) for w in comp]
    return integer_kernel(comp_int)
