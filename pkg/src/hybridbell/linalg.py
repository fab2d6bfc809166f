"""Exact integer/rational linear algebra helpers.

Everything here is either exact (Python ints / Fractions) or a modular
computation whose result is only ever used after an exact verification
step, so no conclusion depends on floating point or on a lucky prime.
"""

from fractions import Fraction
from math import gcd

import numpy as np

MOD_PRIME = (1 << 31) - 1  # Mersenne prime; products of two residues fit in int64


def gcd_reduce(vec):
    """Divide an integer vector by the gcd of its entries (gcd of empty/zero -> unchanged)."""
    g = 0
    for x in vec:
        g = gcd(g, abs(int(x)))
    if g > 1:
        return [int(x) // g for x in vec]
    return [int(x) for x in vec]


def rank_exact(rows, limit=None):
    """Exact rank of a list of integer/Fraction rows via Gaussian elimination.

    Stops early once `limit` is reached (rank is monotone in added rows).
    """
    basis = []  # reduced echelon rows as Fraction lists, each led by a pivot
    pivots = []
    for row in rows:
        r = [Fraction(x) for x in row]
        for b, p in zip(basis, pivots):
            if r[p] != 0:
                f = r[p]
                r = [a - f * c for a, c in zip(r, b)]
        lead = next((i for i, x in enumerate(r) if x != 0), None)
        if lead is None:
            continue
        inv = r[lead]
        basis.append([x / inv for x in r])
        pivots.append(lead)
        if limit is not None and len(basis) >= limit:
            break
    return len(basis)


def rank_mod_p(matrix, p=MOD_PRIME, return_pivot_rows=False):
    """Rank of an integer matrix mod p (vectorized elimination).

    rank_mod_p <= exact rank always; equality certificates must be obtained
    separately (see independent_row_subset / rank certificates in cpt).
    """
    A = np.asarray(matrix, dtype=np.int64) % p
    nrows, ncols = A.shape
    perm = np.arange(nrows)
    r = 0
    for c in range(ncols):
        nz = np.nonzero(A[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            A[[r, piv]] = A[[piv, r]]
            perm[[r, piv]] = perm[[piv, r]]
        inv = pow(int(A[r, c]), p - 2, p)
        A[r] = (A[r] * inv) % p
        col = A[r + 1:, c]
        mask = col != 0
        if mask.any():
            A[r + 1:] = (A[r + 1:] - np.outer(col, A[r])) % p
        r += 1
        if r == nrows:
            break
    if return_pivot_rows:
        return r, perm[:r].tolist()
    return r


def rank_int(matrix, limit=None):
    """Exact rank of an integer matrix; uses the fast modular rank as a lower
    bound and verifies with exact elimination on the pivot rows only.

    A modular rank r comes with r pivot rows; their exact rank equals r iff
    they are independent over Q, which exact elimination on r rows confirms
    cheaply.  If the full matrix had larger exact rank than the modular one,
    the remaining rows are checked exactly against the span (rare path).
    """
    A = np.asarray(matrix, dtype=object)
    if A.size == 0:
        return 0
    nrows = A.shape[0]
    r_mod, piv = rank_mod_p(np.asarray(matrix, dtype=np.int64), return_pivot_rows=True)
    r_exact = rank_exact([A[i] for i in piv])
    if r_exact == min(nrows, A.shape[1]):
        return r_exact
    if limit is not None and r_exact >= limit:
        return r_exact
    # exact elimination over everything; modular rank may undercount mod p
    return rank_exact(list(A), limit=limit)


def nullspace_exact(rows, ncols):
    """Exact rational nullspace basis (as integer vectors) of integer rows."""
    M = [[Fraction(int(x)) for x in row] for row in rows]
    pivots = []
    rowi = 0
    for c in range(ncols):
        piv = next((i for i in range(rowi, len(M)) if M[i][c] != 0), None)
        if piv is None:
            continue
        M[rowi], M[piv] = M[piv], M[rowi]
        lead = M[rowi][c]
        M[rowi] = [v / lead for v in M[rowi]]
        for i in range(len(M)):
            if i != rowi and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[rowi])]
        pivots.append(c)
        rowi += 1
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for r, c in enumerate(pivots):
            v[c] = -M[r][fc]
        den = 1
        for x in v:
            den = den * x.denominator // gcd(den, x.denominator)
        basis.append(gcd_reduce([int(x * den) for x in v]))
    return basis


def solve_upper_int(rows, rhs):
    """Solve a small exact linear system rows @ x = rhs over Q (rows square, invertible)."""
    n = len(rows)
    M = [[Fraction(int(x)) for x in row] + [Fraction(int(rhs[i]))] for i, row in enumerate(rows)]
    for c in range(n):
        piv = next(i for i in range(c, n) if M[i][c] != 0)
        M[c], M[piv] = M[piv], M[c]
        lead = M[c][c]
        M[c] = [v / lead for v in M[c]]
        for i in range(n):
            if i != c and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[c])]
    return [M[i][n] for i in range(n)]
