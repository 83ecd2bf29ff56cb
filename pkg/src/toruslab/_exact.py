"""Exact integer and rational linear algebra on small dense matrices.

Matrices are lists of row lists holding Python ints or Fractions.  All
lattices are row lattices: the rows of a basis matrix are the generators.
"""

from __future__ import annotations

from fractions import Fraction
from functools import reduce
from math import gcd, lcm

__all__ = [
    "hnf",
    "hnf_mod",
    "rational_hnf",
    "common_den",
    "mat_inv",
    "mat_mul",
    "mat_det",
    "transpose",
    "dual_basis",
    "lattice_sum",
    "lattice_intersection",
    "lattice_index",
    "in_lattice",
    "coords",
    "smith_form",
    "elementary_divisors",
    "vp",
    "vp_rat",
]


def vp(n: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    if n == 0:
        raise ValueError("valuation of zero")
    n = abs(n)
    k = 0
    while n % p == 0:
        n //= p
        k += 1
    return k


def vp_rat(x, p: int) -> int:
    x = Fraction(x)
    return vp(x.numerator, p) - vp(x.denominator, p)


def transpose(a):
    return [list(r) for r in zip(*a)]


def mat_mul(a, b):
    bt = list(zip(*b))
    return [[sum(x * y for x, y in zip(row, col)) for col in bt] for row in a]


def mat_det(a) -> Fraction | int:
    """Determinant by fraction-free Bareiss elimination (exact)."""
    n = len(a)
    if n == 0:
        return 1
    if all(isinstance(x, int) for r in a for x in r):
        m = [list(r) for r in a]
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
                    return 0
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            prev = m[k][k]
        return sign * m[n - 1][n - 1]
    d = common_den(a)
    num = mat_det([[int(x * d) for x in r] for r in a])
    return Fraction(num, d ** n)


def common_den(a) -> int:
    """Least common denominator of all entries of a matrix or vector."""
    dens = []
    for r in a:
        if isinstance(r, (list, tuple)):
            dens.extend(Fraction(x).denominator for x in r)
        else:
            dens.append(Fraction(r).denominator)
    return reduce(lcm, dens, 1)


def mat_inv(a):
    """Inverse of a square rational matrix (Gauss-Jordan over Fractions)."""
    n = len(a)
    m = [[Fraction(x) for x in r] + [Fraction(int(i == j)) for j in range(n)]
         for i, r in enumerate(a)]
    for c in range(n):
        piv = next((i for i in range(c, n) if m[i][c] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        m[c], m[piv] = m[piv], m[c]
        inv = 1 / m[c][c]
        m[c] = [x * inv for x in m[c]]
        for i in range(n):
            if i != c and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[c])]
    return [r[n:] for r in m]


def _xgcd(a: int, b: int):
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def hnf(rows, n: int | None = None):
    """Lower-triangular row Hermite normal form of a full-rank integer lattice.

    Returns an n x n matrix H with H[i][j] = 0 for j > i, H[i][i] > 0 and
    0 <= H[i][j] < H[j][j] for j < i.  Raises ValueError when the rows do
    not span a rank-n lattice.
    """
    rows = [list(r) for r in rows if any(r)]
    if n is None:
        n = len(rows[0])
    out = [None] * n
    for col in range(n - 1, -1, -1):
        nz = [r for r in rows if r[col] != 0]
        rest = [r for r in rows if r[col] == 0]
        if not nz:
            raise ValueError("rank deficient lattice")
        piv = nz[0]
        for r in nz[1:]:
            g, x, y = _xgcd(piv[col], r[col])
            a, b = piv[col] // g, r[col] // g
            newp = [x * u + y * v for u, v in zip(piv, r)]
            newr = [a * v - b * u for u, v in zip(piv, r)]
            piv = newp
            if any(newr):
                rest.append(newr)
        if piv[col] < 0:
            piv = [-u for u in piv]
        out[col] = piv
        rows = rest
    if any(any(r) for r in rows):
        raise ValueError("generators span more than rank n")
    for i in range(n):
        for j in range(i - 1, -1, -1):
            q = out[i][j] // out[j][j]
            if q:
                out[i] = [u - q * v for u, v in zip(out[i], out[j])]
    return out


def hnf_mod(rows, n: int, modulus: int):
    """HNF of the lattice spanned by rows together with modulus * Z^n."""
    gens = [[x % modulus for x in r] for r in rows]
    gens += [[modulus * int(i == j) for j in range(n)] for i in range(n)]
    return hnf(gens, n)


def rational_hnf(rows):
    """Normalize rational generators to (den, H) with H the integer HNF.

    den is the least positive integer with den * lattice integral; the
    returned H satisfies gcd(den, entries of H) == 1.
    """
    rows = [list(r) for r in rows]
    n = len(rows[0])
    d = common_den(rows)
    h = hnf([[int(Fraction(x) * d) for x in r] for r in rows], n)
    g = reduce(gcd, (x for r in h for x in r), d)
    if g > 1:
        h = [[x // g for x in r] for r in h]
        d //= g
    return d, h


def dual_basis(basis):
    """Rows of the dual lattice basis: (B^{-1})^T for the standard pairing."""
    return transpose(mat_inv(basis))


def lattice_sum(*bases):
    rows = [r for b in bases for r in b]
    d, h = rational_hnf(rows)
    return [[Fraction(x, d) for x in r] for r in h]


def lattice_intersection(*bases):
    duals = [dual_basis(b) for b in bases]
    return dual_basis(lattice_sum(*duals))


def lattice_index(sub, sup) -> Fraction:
    """[sup : sub] as |det sub| / |det sup| (sub need not be contained)."""
    return abs(Fraction(mat_det(sub)) / Fraction(mat_det(sup)))


def coords(v, basis):
    """Coordinates of vector v in the given row basis."""
    inv = mat_inv(basis)
    return [sum(Fraction(v[i]) * inv[i][j] for i in range(len(v))) for j in range(len(v))]


def in_lattice(v, basis) -> bool:
    return all(c.denominator == 1 for c in coords(v, basis))


def smith_form(a):
    """Smith normal form with transforms: returns (U, D, V) with U*a*V = D.

    a is an integer m x n matrix; U, V are unimodular; D is diagonal with
    d_1 | d_2 | ... (non-negative).
    """
    m, n = len(a), len(a[0])
    d = [list(r) for r in a]
    u = [[int(i == j) for j in range(m)] for i in range(m)]
    v = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap_rows(i, j):
        d[i], d[j] = d[j], d[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        for r in d:
            r[i], r[j] = r[j], r[i]
        for r in v:
            r[i], r[j] = r[j], r[i]

    for k in range(min(m, n)):
        while True:
            piv = None
            best = None
            for i in range(k, m):
                for j in range(k, n):
                    if d[i][j] and (best is None or abs(d[i][j]) < best):
                        best, piv = abs(d[i][j]), (i, j)
            if piv is None:
                return u, d, v
            swap_rows(k, piv[0])
            swap_cols(k, piv[1])
            done = True
            for i in range(k + 1, m):
                q = d[i][k] // d[k][k]
                if q:
                    d[i] = [x - q * y for x, y in zip(d[i], d[k])]
                    u[i] = [x - q * y for x, y in zip(u[i], u[k])]
                if d[i][k]:
                    done = False
            for j in range(k + 1, n):
                q = d[k][j] // d[k][k]
                if q:
                    for r in d:
                        r[j] -= q * r[k]
                    for r in v:
                        r[j] -= q * r[k]
                if d[k][j]:
                    done = False
            if not done:
                continue
            bad = next(((i, j) for i in range(k + 1, m) for j in range(k + 1, n)
                        if d[i][j] % d[k][k]), None)
            if bad is None:
                break
            d[k] = [x + y for x, y in zip(d[k], d[bad[0]])]
            u[k] = [x + y for x, y in zip(u[k], u[bad[0]])]
        if d[k][k] < 0:
            d[k] = [-x for x in d[k]]
            u[k] = [-x for x in u[k]]
    return u, d, v


def elementary_divisors(a):
    """Invariant factors of an integer matrix (nonzero ones only)."""
    _, d, _ = smith_form(a)
    return [d[i][i] for i in range(min(len(d), len(d[0]))) if d[i][i]]
