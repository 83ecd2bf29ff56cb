"""Norms, lattices and distances for PGL_n over Q_p (and R).

A commutative algebra A = Q_p[M] inside M_n(Q_p) with squarefree
characteristic polynomial is handled through exact rational arithmetic in
the power basis 1, M, ..., M^{n-1}.  Every order we need (the integral
matrices Lambda in A, the maximal order O_A) is a Z-lattice whose
p-localization is the object of interest, so p-adic quantities are read off
as p-parts of exact indices.  Split algebras additionally get eigenvector
coordinates, known modulo p^K.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from . import _exact as ex
from .errors import ConvergenceError, InputError

INF = float("inf")


def vp(x, p: int) -> float:
    x = Fraction(x)
    if x == 0:
        return INF
    return ex.vp_rat(x, p)


def _ppart(x, p: int) -> Fraction:
    """p^{v_p(x)} as a Fraction."""
    v = vp(x, p)
    return Fraction(p) ** int(v)


# ----------------------------------------------------------------------------
# p-adic elementary divisors


def padic_divisors(rows, p: int) -> list[int]:
    """Valuations of the elementary divisors of the Z_p-span of rational rows.

    Minimum-valuation pivoting; exact on rationals.  The rows must span a
    full-rank lattice in Q_p^ncols.
    """
    a = [[Fraction(x) for x in r] for r in rows]
    if not a:
        raise InputError("no rows")
    ncols = len(a[0])
    live_r = list(range(len(a)))
    live_c = list(range(ncols))
    out = []
    for _ in range(ncols):
        best = None
        for i in live_r:
            for j in live_c:
                if a[i][j]:
                    v = ex.vp_rat(a[i][j], p)
                    if best is None or v < best[0]:
                        best = (v, i, j)
        if best is None:
            raise InputError("rows do not span a full-rank lattice")
        v, i, j = best
        piv = a[i][j]
        for r in live_r:
            if r != i and a[r][j]:
                f = a[r][j] / piv
                a[r] = [x - f * y for x, y in zip(a[r], a[i])]
        out.append(v)
        live_r.remove(i)
        live_c.remove(j)
    return sorted(out)


def _padic_sum_exponent(rows, n: int, p: int, K: int) -> int:
    """Sum of elementary-divisor valuations of integer rows, computed mod p^K.

    Valid when the span contains p^(K-1) Z_p^n.
    """
    mod = p ** K
    a = [[x % mod for x in r] for r in rows]
    live_r = list(range(len(a)))
    live_c = list(range(n))
    total = 0
    for _ in range(n):
        best = None
        for i in live_r:
            row = a[i]
            for j in live_c:
                x = row[j]
                if x:
                    v = 0
                    while x % p == 0:
                        x //= p
                        v += 1
                    if best is None or v < best[0]:
                        best = (v, i, j)
                        if v == 0:
                            break
            if best is not None and best[0] == 0:
                break
        if best is None:
            raise ConvergenceError("p-adic precision exhausted")
        v, i, j = best
        pv = p ** v
        uinv = pow(a[i][j] // pv, -1, mod)
        for r in live_r:
            if r != i and a[r][j]:
                f = (a[r][j] // pv) * uinv % mod
                a[r] = [(x - f * y) % mod for x, y in zip(a[r], a[i])]
        total += v
        live_r.remove(i)
        live_c.remove(j)
    return total


# ----------------------------------------------------------------------------
# apartments and vertex distances


@dataclass(frozen=True)
class ApartmentPoint:
    """The norm max_i q^{t_i} |x_i| on k^n, for q = p or q = e (place None)."""

    t: tuple
    place: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "t", tuple(Fraction(x) for x in self.t))

    @property
    def is_vertex(self) -> bool:
        return all(x.denominator == 1 for x in self.t)

    @property
    def log_q(self) -> float:
        return 1.0 if self.place is None else math.log(self.place)


def apartment_class_distance(u: ApartmentPoint, v: ApartmentPoint) -> float:
    if u.place != v.place or len(u.t) != len(v.t):
        raise InputError("points lie in different apartments")
    d = [a - b for a, b in zip(u.t, v.t)]
    return u.log_q * float(max(d) - min(d)) / 2


def vertex_exponents(g, p: int) -> list[int]:
    return padic_divisors(g, p)


def vertex_distance(g, p: int) -> float:
    """Distance between the classes of Z_p^n and g Z_p^n."""
    e = padic_divisors(g, p)
    return 0.5 * math.log(p) * (e[-1] - e[0])


def vertex_distance_units(g, p: int) -> Fraction:
    """The same distance in units of log p."""
    e = padic_divisors(g, p)
    return Fraction(e[-1] - e[0], 2)


# ----------------------------------------------------------------------------
# the algebra A = Q[M]


def _charpoly(M) -> list:
    """Coefficients c_0..c_{n-1} of det(XI - M) (Faddeev-LeVerrier)."""
    n = len(M)
    I = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    Mk = [row[:] for row in I]
    coeffs = [Fraction(0)] * (n + 1)
    coeffs[n] = Fraction(1)
    for k in range(1, n + 1):
        AM = ex.mat_mul(M, Mk)
        c = -sum(AM[i][i] for i in range(n)) / k
        coeffs[n - k] = c
        Mk = [[AM[i][j] + (c if i == j else 0) for j in range(n)] for i in range(n)]
    return coeffs[:n]


class LocalAlgebra:
    """A = Q[M] with exact power-basis coordinates."""

    def __init__(self, M):
        self.M = [[Fraction(x) for x in r] for r in M]
        self.n = len(self.M)
        if any(len(r) != self.n for r in self.M):
            raise InputError("matrix must be square")
        self.charpoly = _charpoly(self.M)
        self.disc = _disc_from_traces(self)
        if self.disc == 0:
            raise InputError("characteristic polynomial is not squarefree")
        n = self.n
        pw = [[[Fraction(int(i == j)) for j in range(n)] for i in range(n)]]
        for _ in range(1, n):
            pw.append(ex.mat_mul(pw[-1], self.M))
        self.powers = pw
        flat = [[x for r in P for x in r] for P in pw]  # n x n^2
        # n entry positions where the power matrices are independent
        self._pos, self._posinv = _independent_columns(flat)

    def matrix(self, c):
        n = self.n
        return [[sum(Fraction(c[k]) * self.powers[k][i][j] for k in range(n)) for j in range(n)]
                for i in range(n)]

    def coords(self, X):
        n = self.n
        vals = [Fraction(X[q // n][q % n]) for q in self._pos]
        return [sum(vals[i] * self._posinv[i][k] for i in range(n)) for k in range(n)]

    def mul(self, a, b):
        return self.coords(ex.mat_mul(self.matrix(a), self.matrix(b)))

    def trace(self, a) -> Fraction:
        X = self.matrix(a)
        return sum(X[i][i] for i in range(self.n))

    def det(self, a) -> Fraction:
        return Fraction(ex.mat_det(self.matrix(a)))

    def trace_gram(self, basis):
        return [[self.trace(self.mul(a, b)) for b in basis] for a in basis]


def _disc_from_traces(alg) -> Fraction:
    n = alg.n
    pw = [[[Fraction(int(i == j)) for j in range(n)] for i in range(n)]]
    for _ in range(1, 2 * n - 1):
        pw.append(ex.mat_mul(pw[-1], alg.M))
    tr = [sum(P[i][i] for i in range(n)) for P in pw]
    return Fraction(ex.mat_det([[tr[i + j] for j in range(n)] for i in range(n)]))


def _independent_columns(flat):
    """Column positions q_0.. of an n x m rank-n matrix with an invertible minor."""
    n = len(flat)
    m = len(flat[0])
    chosen = []
    for q in range(m):
        trial = chosen + [q]
        sub = [[flat[k][c] for c in trial] for k in range(n)]
        # rank test by Gaussian elimination
        if _rank(sub) == len(trial):
            chosen = trial
        if len(chosen) == n:
            break
    sub = [[flat[k][c] for c in chosen] for k in range(n)]  # rows k, cols i
    # coefficients c with sum_k c_k flat[k][q_i] = X[q_i]: c = vals @ inv(sub)
    return chosen, ex.mat_inv(sub)


def _rank(a) -> int:
    a = [[Fraction(x) for x in r] for r in a]
    rows, cols = len(a), len(a[0])
    r = 0
    for c in range(cols):
        piv = next((i for i in range(r, rows) if a[i][c]), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        for i in range(rows):
            if i != r and a[i][c]:
                f = a[i][c] / a[r][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        r += 1
    return r


def integral_solutions(R):
    """Basis of {c in Q^k : c R in Z^m} for a rank-k rational k x m matrix R.

    That set is the dual of the lattice spanned by the columns of R.
    """
    cols = ex.transpose(R)
    d, h = ex.rational_hnf(cols)
    G = [[Fraction(x, d) for x in r] for r in h]
    return ex.dual_basis(G)


# ----------------------------------------------------------------------------
# local torus data


@dataclass(frozen=True)
class LocalTorusData:
    p: int
    M: tuple
    prec: int = 0

    def __post_init__(self):
        M = tuple(tuple(Fraction(x) for x in r) for r in self.M)
        object.__setattr__(self, "M", M)
        if self.p < 2 or any(self.p % q == 0 for q in range(2, int(self.p ** 0.5) + 1)):
            raise InputError(f"{self.p} is not prime")
        if self.prec <= 0:
            v = vp(self.algebra.disc, self.p)
            object.__setattr__(self, "prec", int(v) + 10)

    @cached_property
    def algebra(self) -> LocalAlgebra:
        return LocalAlgebra(self.M)

    @property
    def n(self) -> int:
        return len(self.M)

    @classmethod
    def conjugated(cls, p: int, M, g, prec: int = 0) -> "LocalTorusData":
        """Data for g M g^-1."""
        g = [[Fraction(x) for x in r] for r in g]
        gi = ex.mat_inv(g)
        M2 = ex.mat_mul(ex.mat_mul(g, [[Fraction(x) for x in r] for r in M]), gi)
        return cls(p, tuple(tuple(r) for r in M2), prec)


def companion_matrix(coeffs):
    """Companion matrix of X^n + c_{n-1} X^{n-1} + ... + c_0 (ones below the diagonal)."""
    n = len(coeffs)
    M = [[0] * n for _ in range(n)]
    for i in range(1, n):
        M[i][i - 1] = 1
    for i in range(n):
        M[i][n - 1] = -int(coeffs[i])
    return M


def parse_matrix(text: str):
    try:
        rows = [[Fraction(x) for x in r.split(",")] for r in text.split(";")]
    except ValueError as exc:
        raise InputError(f"cannot parse matrix {text!r}") from exc
    if any(len(r) != len(rows) for r in rows):
        raise InputError(f"matrix {text!r} is not square")
    return rows


# -- the order Lambda ---------------------------------------------------------


@lru_cache(maxsize=512)
def lambda_basis(data: LocalTorusData):
    """Power-basis coordinates of a Z-basis of Q[M] meet M_n(Z)."""
    alg = data.algebra
    flat = [[x for r in P for x in r] for P in alg.powers]
    return integral_solutions(flat)


def trace_det(alg: LocalAlgebra, basis) -> Fraction:
    return Fraction(ex.mat_det(alg.trace_gram(basis)))


def lambda_order(data: LocalTorusData):
    """(basis of Lambda, disc_D) with disc_D = p^(v_p det(tr f_i f_j)) over a Lambda-basis.

    The constant (2n)^(1-n) is left out, so disc_D is 1 exactly when Lambda
    is self-dual under the trace form, at every p.
    """
    basis = lambda_basis(data)
    return basis, int(_ppart(trace_det(data.algebra, basis), data.p))


def disc_D(data: LocalTorusData) -> int:
    return lambda_order(data)[1]


def dual_lattice(alg: LocalAlgebra, basis):
    """{y : tr(y b) in Z for all b in basis}, by integral solutions."""
    n = alg.n
    unit = [[Fraction(int(i == k)) for i in range(n)] for k in range(n)]
    R = [[alg.trace(alg.mul(e, b)) for b in basis] for e in unit]
    return integral_solutions(R)


def dual_volume_ratio(data: LocalTorusData) -> int:
    """vol(Lambda*) / vol(Lambda), p-part, via an explicit dual basis."""
    lam = lambda_basis(data)
    dual = dual_lattice(data.algebra, lam)
    ratio = abs(Fraction(ex.mat_det(lam)) / Fraction(ex.mat_det(dual)))
    return int(_ppart(ratio, data.p))


# -- the maximal order O_A -------------------------------------------------------


def _coords_in(basis, x):
    return ex.coords(x, basis)


def _pow_mod(alg, basis, x, e, p):
    res = [Fraction(int(i == 0)) for i in range(alg.n)]
    base = x
    while e:
        if e & 1:
            res = _reduce(alg, basis, alg.mul(res, base), p)
        base = _reduce(alg, basis, alg.mul(base, base), p)
        e >>= 1
    return res


def _reduce(alg, basis, x, p):
    c = _coords_in(basis, x)
    c = [Fraction(int(v) % p) for v in c]
    n = alg.n
    return [sum(c[i] * basis[i][k] for i in range(n)) for k in range(n)]


def _left_kernel_mod_p(rows, p):
    n = len(rows)
    m = len(rows[0])
    a = [list(r) + [int(i == j) for j in range(n)] for i, r in enumerate(rows)]
    r = 0
    for c in range(m):
        piv = next((i for i in range(r, n) if a[i][c] % p), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = pow(a[r][c], -1, p)
        a[r] = [(v * inv) % p for v in a[r]]
        for i in range(n):
            if i != r and a[i][c] % p:
                f = a[i][c]
                a[i] = [(u - f * v) % p for u, v in zip(a[i], a[r])]
        r += 1
    return [row[m:] for row in a[r:]]


def _frobenius_rows(alg, basis, p, power):
    rows = []
    for b in basis:
        x = b
        for _ in range(power):
            x = _pow_mod(alg, basis, x, p, p)
        rows.append([int(c) % p for c in _coords_in(basis, x)])
    return rows


def _radical(alg, basis, p):
    """Basis of the p-radical {x : x^(p^j) in pO} of the order with this basis."""
    n = alg.n
    j = 1
    while p ** j < n:
        j += 1
    ker = _left_kernel_mod_p(_frobenius_rows(alg, basis, p, j), p)
    gens = [[p * x for x in b] for b in basis]
    for v in ker:
        gens.append([sum(v[i] * basis[i][k] for i in range(n)) for k in range(n)])
    d, h = ex.rational_hnf(gens)
    return [[Fraction(x, d) for x in r] for r in h]


def multiplier_basis(alg, lat):
    """Basis of {x in A : x lat in lat}."""
    n = alg.n
    inv = ex.mat_inv(lat)
    unit = [[Fraction(int(i == k)) for i in range(n)] for k in range(n)]
    R = []
    for e in unit:
        row = []
        for b in lat:
            prod = alg.mul(e, b)
            row.extend(sum(prod[i] * inv[i][j] for i in range(n)) for j in range(n))
        R.append(row)
    return integral_solutions(R)


@lru_cache(maxsize=512)
def maximal_order_basis(data: LocalTorusData):
    """Basis of a Z-order whose p-localization is O_A (radical idealizers)."""
    alg = data.algebra
    n = alg.n
    cp = alg.charpoly
    den = ex.common_den([cp])
    if den != 1:
        raise InputError("characteristic polynomial is not integral")
    basis = [[Fraction(int(i == k)) for i in range(n)] for k in range(n)]
    for _ in range(64):
        rad = _radical(alg, basis, data.p)
        nxt = multiplier_basis(alg, rad)
        d, h = ex.rational_hnf(nxt)
        nxt = [[Fraction(x, d) for x in r] for r in h]
        if abs(Fraction(ex.mat_det(nxt))) == abs(Fraction(ex.mat_det(basis))):
            return tuple(tuple(r) for r in nxt)
        basis = nxt
    raise ConvergenceError("maximal order iteration did not stabilize")


def algebra_disc(data: LocalTorusData) -> int:
    """p-part of disc(O_A) from the trace form on a basis of O_A."""
    basis = [list(r) for r in maximal_order_basis(data)]
    return int(_ppart(trace_det(data.algebra, basis), data.p))


# -- canonical norm ---------------------------------------------------------------


@dataclass
class CanonicalNorm:
    p: int
    factors: list  # (e_i, f_i) per field factor
    data: LocalTorusData = field(repr=False)

    @property
    def split(self) -> bool:
        return all(e == 1 and f == 1 for e, f in self.factors)

    @property
    def unramified(self) -> bool:
        return all(e == 1 for e, _ in self.factors)

    @property
    def exponent(self) -> int:
        return math.lcm(*(e for e, _ in self.factors))

    def __call__(self, x) -> Fraction:
        """N_A(x) = max_i ||x_i||, as an exact power of p with exponent in (1/E)Z."""
        v = self.valuation(x)
        if v == INF:
            return Fraction(0)
        return Fraction(self.p) ** (-v) if v.denominator == 1 else _fracpow(self.p, -v)

    def valuation(self, x):
        """min_i v(x_i) = max{a : x^E in p^a O_A} / E."""
        alg = self.data.algebra
        if not any(x):
            return INF
        E = self.exponent
        y = [Fraction(int(i == 0)) for i in range(alg.n)]
        for _ in range(E):
            y = alg.mul(y, x)
        basis = [list(r) for r in maximal_order_basis(self.data)]
        c = ex.coords(y, basis)
        a = min(vp(ci, self.p) for ci in c if ci)
        return Fraction(int(a), E)


def _fracpow(p, e: Fraction) -> float:
    return float(p) ** float(e)


def canonical_norm(data: LocalTorusData) -> CanonicalNorm:
    """Factor shapes (e_i, f_i) of A over Q_p and the norm with unit ball O_A."""
    alg = data.algebra
    p = data.p
    n = alg.n
    basis = [list(r) for r in maximal_order_basis(data)]
    j = 1
    while p ** j < n:
        j += 1
    # radical J of O_A / p and the Berlekamp space {x : x^p - x in J}
    nil = _left_kernel_mod_p(_frobenius_rows(alg, basis, p, j), p)
    dim_j = len(nil)
    frob = _frobenius_rows(alg, basis, p, 1)
    # x^p - x in J  <=>  (Frob - I) x lies in span(nil); count dimension mod p
    shifted = [[(frob[i][k] - int(i == k)) % p for k in range(n)] for i in range(n)]
    # kernel of x -> (Frob - I) x modulo span(nil): append nil as extra relations
    aug = [row + [0] * len(nil) for row in shifted]
    rows = aug + [list(v) + [int(i == t) for t in range(len(nil))] for i, v in enumerate(nil)]
    # solutions of sum_i c_i shifted_i + sum_t d_t nil_t = 0, projected to c
    sol = _left_kernel_mod_p([r[:n] for r in rows], p)
    proj = [s[:n] for s in sol]
    dim_b = _rank_mod_p(proj, p)
    r = dim_b - dim_j
    F = n - dim_j
    factors = _factor_shapes(n, r, F)
    return CanonicalNorm(p, factors, data)


def _rank_mod_p(rows, p) -> int:
    if not rows:
        return 0
    a = [[x % p for x in r] for r in rows]
    rank = 0
    cols = len(a[0])
    for c in range(cols):
        piv = next((i for i in range(rank, len(a)) if a[i][c]), None)
        if piv is None:
            continue
        a[rank], a[piv] = a[piv], a[rank]
        inv = pow(a[rank][c], -1, p)
        for i in range(len(a)):
            if i != rank and a[i][c]:
                f = a[i][c] * inv % p
                a[i] = [(x - f * y) % p for x, y in zip(a[i], a[rank])]
        rank += 1
    return rank


def _factor_shapes(n: int, r: int, F: int):
    """(e_i, f_i) from n = sum e f, r factors and F = sum f (unique for n <= 3)."""
    shapes = []
    for parts in _partitions(n, r):
        for fs in itertools.product(*[[(e, f) for e in range(1, d + 1) for f in range(1, d + 1) if e * f == d]
                                      for d in parts]):
            if sum(f for _, f in fs) == F:
                shapes.append(tuple(sorted(fs)))
    shapes = sorted(set(shapes))
    if len(shapes) != 1:
        raise ConvergenceError(f"ambiguous factor shapes {shapes}")
    return list(shapes[0])


def _partitions(n, r, largest=None):
    largest = n if largest is None else largest
    if r == 0:
        if n == 0:
            yield ()
        return
    for first in range(min(n, largest), 0, -1):
        for rest in _partitions(n - first, r - 1, first):
            yield (first,) + rest


# -- unit density ------------------------------------------------------------------


def _count_units_mod_p(alg, basis, p):
    n = alg.n
    mats = [alg.matrix(b) for b in basis]
    count = 0
    for c in itertools.product(range(p), repeat=n):
        X = [[sum(c[k] * mats[k][i][j] for k in range(n)) for j in range(n)] for i in range(n)]
        d = Fraction(ex.mat_det(X))
        if d and ex.vp_rat(d, p) == 0:
            count += 1
    return count


def unit_density(data: LocalTorusData) -> Fraction:
    """vol(Lambda^x) / vol(O_A^x).

    An element of an order in A is a unit exactly when its determinant is a
    p-adic unit, which is decided mod p; so unit residues are counted in
    Lambda / p Lambda and O_A / p O_A and weighted by the index.
    """
    alg = data.algebra
    p = data.p
    n = alg.n
    lam = lambda_basis(data)
    OA = [list(r) for r in maximal_order_basis(data)]
    index = _ppart(abs(Fraction(ex.mat_det(lam)) / Fraction(ex.mat_det(OA))), p)
    ul = _count_units_mod_p(alg, lam, p)
    uo = _count_units_mod_p(alg, OA, p)
    return Fraction(ul, uo) / index


def unit_density_bound(data: LocalTorusData) -> float:
    """max(1 - n/p, p^-n) (disc_D / disc_A)^(-1/2)."""
    n = data.n
    p = data.p
    ratio = disc_D(data) / algebra_disc(data)
    return max(1 - n / p, p ** (-n)) * ratio ** -0.5


# -- split data: eigenvectors and Delta ------------------------------------------------


def padic_roots(coeffs, p: int, K: int):
    """Roots in Z_p (mod p^K) of the monic integer polynomial with given low coefficients."""
    full = [int(c) for c in coeffs] + [1]
    n = len(coeffs)

    def ev(f, x, mod):
        acc = 0
        for c in reversed(f):
            acc = (acc * x + c) % mod
        return acc

    deriv = [i * full[i] for i in range(1, n + 1)]
    mod = p ** K
    D = _poly_disc_int(full)
    s = ex.vp(D, p) + 1 if D % p == 0 else 1
    roots = []
    for a in range(p ** s):
        fa = ev(full, a, mod)
        da = ev(deriv, a, mod)
        vf = ex.vp(fa, p) if fa else K
        vd = ex.vp(da, p) if da else K
        if vd >= K or vf <= 2 * vd:
            continue
        # Newton lift to precision K
        x = a
        for _ in range(2 * K):
            fx = ev(full, x, p ** (K + 2 * vd + 2))
            if fx % mod == 0:
                break
            dx = ev(deriv, x, p ** (K + 2 * vd + 2))
            num = fx // p ** vd if vd else fx
            den = dx // p ** vd if vd else dx
            x = (x - num * pow(den, -1, mod)) % mod
        roots.append(x % mod)
    # the same root can arise from several residues mod p^s
    out = []
    for r in roots:
        if all((r - q) % p ** (K - s) for q in out):
            out.append(r)
    return sorted(out)


def _poly_disc_int(full) -> int:
    n = len(full) - 1
    alg_M = companion_matrix(full[:n])
    return int(_disc_from_traces(LocalAlgebra(alg_M)))


def _working_precision(data: LocalTorusData) -> int:
    return max(data.prec, 40)


def eigenbasis(data: LocalTorusData):
    """(roots, U) with U's columns primitive eigenvectors of M, entries mod p^K."""
    p = data.p
    K = _working_precision(data)
    mod = p ** K
    roots = padic_roots([int(c) for c in data.algebra.charpoly], p, K)
    n = data.n
    if len(roots) != n:
        raise InputError("algebra is not split over Q_p")
    M = data.M
    den = ex.common_den([list(r) for r in M])
    c = ex.vp(den, p)
    unit = den // p ** c
    uinv = pow(unit, -1, mod)
    Mi = [[int(x * den) * uinv % mod for x in r] for r in M]  # p^c M mod p^K
    cols = []
    for lam in roots:
        N = [[((p ** c) * lam * int(i == j) - Mi[i][j]) % mod for j in range(n)] for i in range(n)]
        adj = _adjugate_mod(N, mod)
        best = None
        for j in range(n):
            col = [adj[i][j] for i in range(n)]
            v = min((ex.vp(x, p) for x in col if x), default=K)
            if best is None or v < best[0]:
                best = (v, col)
        v, col = best
        if v >= K - 10:
            raise ConvergenceError("eigenvector lost to p-adic precision")
        cols.append([(x // p ** v) % p ** (K - v) for x in col])
    U = [[cols[j][i] for j in range(n)] for i in range(n)]
    return roots, U


def _adjugate_mod(N, mod):
    n = len(N)
    if n == 2:
        (a, b), (c, d) = N
        return [[d % mod, -b % mod], [-c % mod, a % mod]]
    adj = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [[N[r][s] for s in range(n) if s != j] for r in range(n) if r != i]
            adj[j][i] = ((-1) ** (i + j) * (minor[0][0] * minor[1][1] - minor[0][1] * minor[1][0])) % mod
    return adj


def delta_distance(data: LocalTorusData, radius: int | None = None):
    """inf over t in A^x of dist(N_0, t iota^-1 N_A), in units of log p.

    Minimizes the vertex distance of U diag(p^s) over integer shifts s with
    s_0 = 0 in a box.  Returns (Delta in units of log p, best shift).
    """
    roots, U = eigenbasis(data)
    n = data.n
    p = data.p
    if radius is None:
        radius = 2 * ex.vp(disc_D(data), p) + n
    best = None
    for tail in itertools.product(range(-radius, radius + 1), repeat=n - 1):
        s = (0,) + tail
        g = [[U[i][j] * Fraction(p) ** s[j] for j in range(n)] for i in range(n)]
        d = vertex_distance_units(g, p)
        if best is None or d < best[0]:
            best = (d, s)
    return best


def delta_lower_bound(data: LocalTorusData) -> Fraction:
    """(1/4n) log(disc_D / disc_A) in units of log p."""
    p = data.p
    return Fraction(ex.vp(disc_D(data), p) - ex.vp(algebra_disc(data), p), 4 * data.n)


def extreme_check(p: int, s, units, g):
    """(dist(t N_A, N_A), (1/2) log ||t||) in units of log p for split A.

    t has eigen-coordinates p^{s_i} u_i; the distance is computed in the
    coordinates of the Z_p-basis of O_A given by the rows of g in GL_n(Z_p).
    """
    n = len(s)
    g = [[Fraction(x) for x in r] for r in g]
    gi = ex.mat_inv(g)
    T = [[Fraction(p) ** s[i] * units[i] if i == j else Fraction(0) for j in range(n)] for i in range(n)]
    conj = ex.mat_mul(ex.mat_mul(gi, T), g)
    return vertex_distance_units(conj, p), Fraction(max(s) - min(s), 2)


def spread_counts(n: int, p: int, R_max: float):
    """#{s in Z^n / Z(1,..,1) : log p (max s - min s) in [R, R+1)} for R = 0, 1, .., R_max."""
    D_max = int(math.floor((R_max + 1) / math.log(p))) + 1
    by_spread = {D: _spread_exact(n, D) for D in range(D_max + 1)}
    out = []
    for R in range(int(R_max) + 1):
        c = sum(v for D, v in by_spread.items() if R <= D * math.log(p) < R + 1)
        out.append((R, c))
    return out


def _spread_exact(n: int, D: int) -> int:
    """Number of classes s mod Z(1,..,1) with max - min = D, by enumeration."""
    if D == 0:
        return 1
    cnt = 0
    for s in itertools.product(range(D + 1), repeat=n):
        if min(s) == 0 and max(s) == D:
            cnt += 1
    return cnt


# ----------------------------------------------------------------------------
# the local integral I(N)


def _lattice_rows_int(L, p: int):
    """Integer rows with the same Z_p-span as p^c L for some c (I is scale invariant)."""
    rows = [[Fraction(x) for x in r] for r in L]
    vmin = min(ex.vp_rat(x, p) for r in rows for x in r if x)
    shift = Fraction(p) ** (-vmin)
    out = []
    for r in rows:
        r = [x * shift for x in r]
        d = ex.common_den([r])
        # d is prime to p here; scaling a row by a p-adic unit keeps its span
        out.append([int(x * d) for x in r])
    return out


class PadicLocalIntegral:
    """I(L) = int_L prod|x_i|^(-1/2) dx / vol(L)^(1/2) for a lattice L in Q_p^n."""

    def __init__(self, L, p: int):
        self.p = p
        self.rows = _lattice_rows_int(L, p)
        self.n = len(self.rows)
        self.eL = sum(padic_divisors(self.rows, p))
        self.lo = [min(ex.vp(r[i], p) for r in self.rows if r[i]) for i in range(self.n)]
        self.T = max(padic_divisors(self.rows, p))
        self._vol = {}

    def vol_exp(self, m) -> int:
        """e with vol(L meet prod p^{m_i} Z_p) = p^-e."""
        m = tuple(m)
        if m not in self._vol:
            n = self.n
            K = max(max(m), self.T) + 2
            rows = self.rows + [[p_pow if i == j else 0 for j in range(n)]
                                for i, p_pow in enumerate(self.p ** mi for mi in m)]
            e_sum = _padic_sum_exponent(rows, n, self.p, K)
            self._vol[m] = self.eL + sum(m) - e_sum
        return self._vol[m]

    def mu(self, m, fixed=()):
        """Measure of {x in L : v(x_i) = m_i} for the free coordinates; coordinates
        in fixed are pinned at T (used by the geometric tail)."""
        n = self.n
        free = [i for i in range(n) if i not in fixed]
        p = self.p
        total = 0.0
        for U in itertools.product((0, 1), repeat=len(free)):
            mm = list(m)
            for i in fixed:
                mm[i] = self.T
            for i, u in zip(free, U):
                mm[i] += u
            total += (-1) ** sum(U) * p ** (-self.vol_exp(mm))
        return total

    def closed_form(self) -> float:
        p = self.p
        n = self.n
        T = self.T
        geo = (1 - 1 / p) * p ** (T / 2) / (1 - p ** -0.5)
        total = 0.0
        for k in range(n + 1):
            for S in itertools.combinations(range(n), k):
                free = [i for i in range(n) if i not in S]
                ranges = [range(self.lo[i], T) for i in free]
                inner = 0.0
                for vals in itertools.product(*ranges):
                    m = [T] * n
                    for i, v in zip(free, vals):
                        m[i] = v
                    inner += p ** (sum(vals) / 2) * self.mu(m, fixed=S)
                total += geo ** k * inner
        return total * p ** (self.eL / 2)

    def truncated(self, cutoff: int) -> float:
        p = self.p
        total = 0.0
        for m in itertools.product(*[range(self.lo[i], cutoff + 1) for i in range(self.n)]):
            total += p ** (sum(m) / 2) * self.mu(list(m))
        return total * p ** (self.eL / 2)


def local_integral_padic(L, p: int) -> float:
    return PadicLocalIntegral(L, p).closed_form()


def ray_lattice(n: int, p: int, r: int):
    """Vertex r steps along a ray of the apartment of the basis (1,..,1), e_2, .., e_n.

    The basis rows are b_1 = (1, 1, .., 1), b_i = e_i; the lattice is
    p^{t_i} b_i with t = (0, .., 0, r).
    """
    rows = []
    for i in range(n):
        b = [1] * n if i == 0 else [int(j == i) for j in range(n)]
        t = r if i == n - 1 else 0
        rows.append([x * p ** t for x in b])
    return rows


def decay_profile(n: int, p: int, r_max: int = 20):
    return [(r, local_integral_padic(ray_lattice(n, p, r), p)) for r in range(r_max + 1)]


def local_integral_split_constant(p: int, n: int) -> float:
    """I on the norms of A's own apartment: ((1 - 1/p)/(1 - p^-1/2))^n."""
    return ((1 - 1 / p) / (1 - p ** -0.5)) ** n


# -- the real case -------------------------------------------------------------------------


@dataclass
class RealIntegral:
    value: float
    stderr: float
    samples: int
    converged: bool


def local_integral_real(Q, samples: int = 200_000, seed: int = 0, target: float = 0.01,
                        max_rounds: int = 6) -> RealIntegral:
    """I(Q) for a positive definite form by stratified Monte Carlo.

    x_i = sign_i u_i^2 turns |x_i|^(-1/2) dx_i into 2 du_i, so each sign
    orthant contributes 2^n vol{u >= 0 : Q(sign u^2) <= 1}; that volume is
    estimated on a grid of strata over the bounding box of u.
    """
    from .orbit_geometry import block_rng

    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    w = np.linalg.eigvalsh(Q)
    if w[0] <= 0:
        raise InputError("form is not positive definite")
    # |x_i| <= sqrt((Q^-1)_ii) on the ellipsoid
    qinv = np.linalg.inv(Q)
    box = np.sqrt(np.sqrt(np.diag(qinv)))
    cells = 4
    signs = list(itertools.product((1.0, -1.0), repeat=n))
    strata = list(itertools.product(range(cells), repeat=n))
    per = max(1, samples // (len(signs) * len(strata)))
    ell_vol = math.pi ** (n / 2) / math.gamma(n / 2 + 1) / math.sqrt(np.linalg.det(Q))
    cell_vol = float(np.prod(box / cells))
    est = 0.0
    var = 0.0
    total = 0
    rounds = 0
    sums = np.zeros((len(signs), len(strata)))
    sq = np.zeros_like(sums)
    cnt = 0
    while True:
        for a, sg in enumerate(signs):
            rng = block_rng(seed, a, rounds)
            for b, st in enumerate(strata):
                u = (np.array(st) + rng.random((per, n))) * (box / cells)
                x = np.array(sg) * u * u
                inside = np.einsum("ij,jk,ik->i", x, Q, x) <= 1.0
                sums[a, b] += inside.sum()
                sq[a, b] += inside.sum()  # indicator: x^2 = x
        cnt += per
        rounds += 1
        mean = sums / cnt
        varc = (sq / cnt - mean ** 2) / max(cnt - 1, 1)
        est = (2 ** n) * cell_vol * mean.sum()
        var = ((2 ** n) * cell_vol) ** 2 * varc.sum()
        total = cnt * len(signs) * len(strata)
        se = math.sqrt(var)
        if 3 * se <= target * est or rounds >= max_rounds:
            break
    value = est / math.sqrt(ell_vol)
    se = math.sqrt(var) / math.sqrt(ell_vol)
    return RealIntegral(value, se, total, 3 * se <= target * value)


def real_integral_sphere_exact(n: int = 3) -> float:
    """I for x_1^2 + .. + x_n^2: 4^n Gamma(5/4)^n / Gamma(1 + n/4) / vol(B^n)^(1/2)."""
    num = 4 ** n * math.gamma(1.25) ** n / math.gamma(1 + n / 4)
    return num / math.sqrt(math.pi ** (n / 2) / math.gamma(n / 2 + 1))


# ----------------------------------------------------------------------------
# Tate's local functional equation (split, unramified)


def _zeta_lattice(t, X):
    """int over the lattice prod p^{t_i} Z_p of |x|^s d^x x, with X = p^-s,
    summed over valuation shells v_i >= t_i (closed geometric series)."""
    out = 1
    for ti in t:
        out *= X ** ti / (1 - X)
    return out


def tate_local_check(p: int, t, s_grid):
    """Both sides of Z(Phi^, 1-s)/L(1-s) = eps(s) Z(Phi, s)/L(s) for Phi = 1_L.

    L = prod p^{t_i} Z_p in the split algebra Q_p^n; Phi^ is computed as
    vol(L) 1_{L'} with L' the trace-dual lattice, found from the trace form
    rather than by negating t; eps = 1 for unramified data.
    Returns (max relative error over the grid, max | |eps| - 1 | on Re s = 1/2).
    """
    n = len(t)
    basis = [[Fraction(p) ** t[i] if i == j else Fraction(0) for j in range(n)] for i in range(n)]
    # trace form of Q_p^n is the dot product
    dual = ex.dual_basis(basis)
    t_dual = [ex.vp_rat(dual[i][i], p) for i in range(n)]
    vol = float(Fraction(p) ** (-sum(t)))
    worst = 0.0
    for s in s_grid:
        X = p ** (-complex(s))
        Y = p ** (-(1 - complex(s)))
        L_s = (1 - X) ** -n
        L_1s = (1 - Y) ** -n
        lhs = vol * _zeta_lattice(t_dual, Y) / L_1s
        rhs = _zeta_lattice(t, X) / L_s
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    eps_dev = 0.0
    for y in np.linspace(-20, 20, 11):
        s = complex(0.5, y)
        X = p ** (-s)
        Y = p ** (-(1 - s))
        eps = (vol * _zeta_lattice(t_dual, Y) / (1 - Y) ** -n) / (_zeta_lattice(t, X) / (1 - X) ** -n)
        eps_dev = max(eps_dev, abs(abs(eps) - 1))
    return worst, eps_dev


# ----------------------------------------------------------------------------
# random split data


def random_split_data(p: int, n: int, rng, max_exp: int = 3) -> LocalTorusData:
    """M = g C g^-1 with C the companion matrix of a polynomial with n distinct
    roots mod p, and g an integer matrix whose determinant is a power of p."""
    while True:
        roots = rng.choice(p, size=n, replace=False)
        lifts = [int(r) + p * int(rng.integers(-2, 3)) for r in roots]
        # (X - l_1)...(X - l_n)
        poly = [1]
        for l in lifts:
            poly = [0] + poly
            for i in range(len(poly) - 1):
                poly[i] -= l * poly[i + 1]
        coeffs = poly[:n]
        C = companion_matrix(coeffs)
        g = _random_p_matrix(p, n, rng, max_exp)
        try:
            return LocalTorusData.conjugated(p, C, g)
        except InputError:
            continue


def _random_p_matrix(p, n, rng, max_exp):
    g = [[int(i == j) for j in range(n)] for i in range(n)]
    for _ in range(3 * n):
        i, j = rng.choice(n, size=2, replace=False)
        k = int(rng.integers(-3, 4))
        g = [[g[r][c] + (k * g[j][c] if r == i else 0) for c in range(n)] for r in range(n)]
    D = [[p ** int(rng.integers(0, max_exp + 1)) if i == j else 0 for j in range(n)] for i in range(n)]
    h = [[int(i == j) for j in range(n)] for i in range(n)]
    for _ in range(3 * n):
        i, j = rng.choice(n, size=2, replace=False)
        k = int(rng.integers(-3, 4))
        h = [[h[r][c] + (k * h[j][c] if r == i else 0) for c in range(n)] for r in range(n)]
    return ex.mat_mul(ex.mat_mul(g, D), h)
