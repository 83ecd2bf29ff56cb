"""Exact arithmetic of orders and fractional ideals in K = Q[t]/P.

Elements of K are tuples of Fractions in the power basis 1, t, ..., t^(n-1).
Lattices (orders and fractional ideals) are stored as a positive integer
denominator together with an integer lower-triangular HNF matrix, so that
equal lattices have identical representations.
"""

from __future__ import annotations

import cmath
import itertools
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Sequence

from . import _exact as ex
from .errors import ConvergenceError, InputError, ResourceCapError

__all__ = [
    "MonicIntPoly",
    "OrderRep",
    "FracIdealRep",
    "IdealClassRep",
    "UnitGroupRep",
    "PicardGroup",
    "poly_disc",
    "order_from_poly",
    "maximal_order",
    "multiplier_ring",
    "ideal_mul",
    "is_homothetic",
    "is_locally_homothetic",
    "ideals_of_bounded_norm",
    "picard_group",
    "unit_group",
    "factorint",
]


# ----------------------------------------------------------------------------
# integers


def factorint(n: int) -> dict[int, int]:
    """Prime factorization by trial division (desk-scale inputs)."""
    n = abs(int(n))
    if n == 0:
        raise ValueError("cannot factor 0")
    out: dict[int, int] = {}
    for p in (2, 3, 5):
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    f, step = 7, itertools.cycle((4, 2, 4, 2, 4, 6, 2, 6))
    while f * f <= n:
        while n % f == 0:
            out[f] = out.get(f, 0) + 1
            n //= f
        f += next(step)
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def primes_up_to(b: int) -> list[int]:
    if b < 2:
        return []
    sieve = bytearray([1]) * (b + 1)
    sieve[0:2] = b"\x00\x00"
    for i in range(2, int(b ** 0.5) + 1):
        if sieve[i]:
            sieve[i * i::i] = bytearray(len(range(i * i, b + 1, i)))
    return [i for i in range(b + 1) if sieve[i]]


# ----------------------------------------------------------------------------
# polynomials

_TERM = re.compile(r"([+-]?)\s*(\d*)\s*\*?\s*(?:([a-zA-Z])\s*(?:\^\s*(\d+))?)?")


@dataclass(frozen=True)
class MonicIntPoly:
    """P = X^n + a_{n-1} X^{n-1} + ... + a_0, irreducible over Q, n in {2, 3}."""

    coeffs: tuple[int, ...]  # a_0 .. a_{n-1}

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(int(c) for c in self.coeffs))
        n = len(self.coeffs)
        if n not in (2, 3):
            raise InputError(f"degree {n} not supported (need 2 or 3)")
        if self.disc == 0:
            raise InputError(f"{self}: zero discriminant")
        if self.rational_root() is not None:
            raise InputError(f"{self}: reducible over Q")

    @property
    def n(self) -> int:
        return len(self.coeffs)

    @classmethod
    def parse(cls, text: str) -> "MonicIntPoly":
        """Parse strings like "x^3 - x - 1"; the leading coefficient must be 1."""
        s = text.replace(" ", "")
        if not s:
            raise InputError("empty polynomial")
        terms: dict[int, int] = {}
        pos = 0
        while pos < len(s):
            m = _TERM.match(s, pos)
            if not m or m.end() == pos:
                raise InputError(f"cannot parse polynomial {text!r}")
            sign, num, var, exp = m.groups()
            if not num and not var:
                raise InputError(f"cannot parse polynomial {text!r}")
            c = int(num) if num else 1
            if sign == "-":
                c = -c
            e = (int(exp) if exp else 1) if var else 0
            terms[e] = terms.get(e, 0) + c
            pos = m.end()
        deg = max(e for e, c in terms.items() if c)
        if terms[deg] != 1:
            raise InputError(f"{text!r} is not monic")
        return cls(tuple(terms.get(i, 0) for i in range(deg)))

    def __str__(self):
        parts = []
        n = self.n
        for e in range(n, -1, -1):
            c = 1 if e == n else self.coeffs[e]
            if c == 0:
                continue
            mag = abs(c)
            mono = "" if e == 0 else ("x" if e == 1 else f"x^{e}")
            body = (str(mag) if (mag != 1 or e == 0) else "") + mono
            if not parts:
                parts.append(("-" if c < 0 else "") + body)
            else:
                parts.append(("- " if c < 0 else "+ ") + body)
        return " ".join(parts)

    def eval(self, x):
        acc = 1
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def rational_root(self):
        a0 = self.coeffs[0]
        if a0 == 0:
            return 0
        for d in _divisors(abs(a0)):
            for r in (d, -d):
                if self.eval(r) == 0:
                    return r
        return None

    @cached_property
    def power_sums(self) -> tuple[int, ...]:
        """tr(t^k) for k = 0 .. 2n-2 via Newton's identities."""
        return tuple(_newton_sums(list(self.coeffs) + [1], 2 * self.n - 1))

    @cached_property
    def disc(self) -> int:
        n = self.n
        ps = self.power_sums
        return int(ex.mat_det([[ps[i + j] for j in range(n)] for i in range(n)]))

    @cached_property
    def signature(self) -> tuple[int, int]:
        if self.n == 2:
            return (2, 0) if self.disc > 0 else (0, 1)
        return (3, 0) if self.disc > 0 else (1, 1)

    @cached_property
    def reduction_table(self) -> tuple[tuple[int, ...], ...]:
        """Power-basis coordinates of t^k for k = 0 .. 2n-2."""
        n = self.n
        rows = []
        for k in range(2 * n - 1):
            if k < n:
                rows.append(tuple(int(i == k) for i in range(n)))
            else:
                prev = rows[k - 1]
                # t * prev, then reduce t^n = -sum a_i t^i
                top = prev[n - 1]
                new = [0] + list(prev[:n - 1])
                new = [x - top * a for x, a in zip(new, self.coeffs)]
                rows.append(tuple(new))
        return tuple(rows)

    def to_json(self):
        return [str(c) for c in self.coeffs]


def _divisors(m: int) -> list[int]:
    out = []
    i = 1
    while i * i <= m:
        if m % i == 0:
            out.append(i)
            if i * i != m:
                out.append(m // i)
        i += 1
    return sorted(out)


def _newton_sums(c, count):
    """Power sums p_0 .. p_{count-1} of the roots of sum c_i X^i (monic)."""
    n = len(c) - 1
    p = [n]
    for k in range(1, count):
        s = -k * c[n - k] if k <= n else 0
        for i in range(1, min(k, n + 1)):
            s -= c[n - i] * p[k - i]
        p.append(s)
    return p


def poly_disc(P: MonicIntPoly | Sequence[int]) -> int:
    """Determinant of the trace form (tr(t^i t^j)) on Z[t]/P.

    Accepts a MonicIntPoly or a full coefficient list [a_0, ..., a_{n-1}, 1]
    (high coefficient last); non-monic coefficient lists are rejected.
    """
    if isinstance(P, MonicIntPoly):
        return P.disc
    c = [int(x) for x in P]
    if len(c) < 2 or c[-1] != 1:
        raise InputError("polynomial is not monic")
    n = len(c) - 1
    e = _newton_sums(c, 2 * n - 1)
    return int(ex.mat_det([[e[i + j] for j in range(n)] for i in range(n)]))


# ----------------------------------------------------------------------------
# elements of K


def el_mul(P: MonicIntPoly, x, y) -> tuple:
    n = P.n
    prod = [0] * (2 * n - 1)
    for i, a in enumerate(x):
        if a:
            for j, b in enumerate(y):
                if b:
                    prod[i + j] += a * b
    tab = P.reduction_table
    out = [0] * n
    for k, c in enumerate(prod):
        if c:
            row = tab[k]
            for i in range(n):
                if row[i]:
                    out[i] += c * row[i]
    return tuple(out)


def mult_matrix(P: MonicIntPoly, x):
    """Rows are coordinates of t^i * x; coords(y*x) = coords(y) @ M."""
    n = P.n
    rows = []
    cur = tuple(x)
    for i in range(n):
        rows.append(list(cur))
        cur = el_mul(P, cur, tuple(int(j == 1) for j in range(n)))
    return rows


def el_norm(P, x) -> Fraction:
    return Fraction(ex.mat_det(mult_matrix(P, x)))


def el_trace(P, x) -> Fraction:
    ps = P.power_sums
    return sum(Fraction(c) * ps[i] for i, c in enumerate(x))


def el_inv(P, x) -> tuple:
    inv = ex.mat_inv(mult_matrix(P, x))
    return tuple(inv[0])


def el_pow(P, x, k: int) -> tuple:
    n = P.n
    res = tuple(Fraction(int(i == 0)) for i in range(n))
    base = tuple(x)
    if k < 0:
        base, k = el_inv(P, base), -k
    while k:
        if k & 1:
            res = el_mul(P, res, base)
        base = el_mul(P, base, base)
        k >>= 1
    return res


def one(P) -> tuple:
    return tuple(Fraction(int(i == 0)) for i in range(P.n))


# ----------------------------------------------------------------------------
# lattices


def _lat_key(den, hnf):
    return (den, tuple(tuple(r) for r in hnf))


@dataclass(frozen=True)
class _Lattice:
    poly: MonicIntPoly
    den: int
    hnf: tuple[tuple[int, ...], ...]

    @classmethod
    def from_generators(cls, poly, gens):
        d, h = ex.rational_hnf([list(g) for g in gens])
        return cls(poly, d, tuple(tuple(r) for r in h))

    @cached_property
    def basis(self):
        return [[Fraction(x, self.den) for x in r] for r in self.hnf]

    @cached_property
    def basis_inv(self):
        return ex.mat_inv(self.basis)

    @cached_property
    def norm(self) -> Fraction:
        """Covolume relative to Z[t]/P, i.e. det(basis)."""
        d = 1
        for i, r in enumerate(self.hnf):
            d *= r[i]
        return Fraction(d, self.den ** self.poly.n)

    @property
    def key(self):
        return (self.poly.coeffs, self.den, self.hnf)

    def contains(self, x) -> bool:
        inv = self.basis_inv
        n = self.poly.n
        for j in range(n):
            s = sum(Fraction(x[i]) * inv[i][j] for i in range(n))
            if s.denominator != 1:
                return False
        return True

    def contains_lattice(self, other) -> bool:
        return all(self.contains(b) for b in other.basis)

    def coords_of(self, x):
        inv = self.basis_inv
        n = self.poly.n
        return [sum(Fraction(x[i]) * inv[i][j] for i in range(n)) for j in range(n)]

    def to_json(self):
        return {"poly": str(self.poly), "den": str(self.den),
                "hnf": [[str(x) for x in r] for r in self.hnf]}

    def sort_key(self):
        return (self.norm, self.den, self.hnf)


@dataclass(frozen=True)
class FracIdealRep(_Lattice):
    """A full-rank lattice L in K (a fractional ideal of its multiplier ring)."""

    @classmethod
    def from_json(cls, obj):
        poly = MonicIntPoly.parse(obj["poly"])
        hnf = tuple(tuple(int(x) for x in r) for r in obj["hnf"])
        return cls(poly, int(obj["den"]), hnf)

    def scale(self, lam) -> "FracIdealRep":
        return FracIdealRep.from_generators(self.poly, [el_mul(self.poly, b, lam) for b in self.basis])


@dataclass(frozen=True)
class OrderRep(_Lattice):
    """An order O with Z[t]/P contained in O."""

    @cached_property
    def disc(self) -> int:
        d = Fraction(self.poly.disc) * self.norm ** 2
        assert d.denominator == 1
        return int(d)

    @cached_property
    def index(self) -> int:
        """[O : Z[t]/P]."""
        i = 1 / self.norm
        assert i.denominator == 1
        return int(i)

    def as_ideal(self) -> FracIdealRep:
        return FracIdealRep(self.poly, self.den, self.hnf)

    def is_maximal(self) -> bool:
        return self == maximal_order(self.poly)

    def check(self):
        """Verify 1 in O, closure under products and Z[t] in O."""
        P = self.poly
        if not self.contains(one(P)):
            raise ValueError("1 not in order")
        t = tuple(Fraction(int(i == 1)) for i in range(P.n))
        if not self.contains(t):
            raise ValueError("t not in order")
        for a in self.basis:
            for b in self.basis:
                if not self.contains(el_mul(P, a, b)):
                    raise ValueError("not closed under multiplication")
        return True


def as_ideal(L) -> FracIdealRep:
    return L if isinstance(L, FracIdealRep) else FracIdealRep(L.poly, L.den, L.hnf)


def as_order(L) -> OrderRep:
    return L if isinstance(L, OrderRep) else OrderRep(L.poly, L.den, L.hnf)


def order_from_poly(P: MonicIntPoly) -> OrderRep:
    n = P.n
    return OrderRep(P, 1, tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))


def ideal_mul(L1, L2) -> FracIdealRep:
    """HNF of the span of all pairwise products of basis elements."""
    if L1.poly != L2.poly:
        raise InputError("ideals over different polynomials")
    P = L1.poly
    gens = [el_mul(P, a, b) for a in L1.basis for b in L2.basis]
    return FracIdealRep.from_generators(P, gens)


def ideal_add(L1, L2) -> FracIdealRep:
    return FracIdealRep.from_generators(L1.poly, list(L1.basis) + list(L2.basis))


def ideal_intersection(L1, L2) -> FracIdealRep:
    b = ex.lattice_intersection(L1.basis, L2.basis)
    return FracIdealRep.from_generators(L1.poly, b)


def colon(A, B) -> FracIdealRep:
    """(A : B) = {x in K : x B subset A}."""
    P = A.poly
    ainv = A.basis_inv
    cols = []
    for b in B.basis:
        c = ex.mat_mul(mult_matrix(P, b), ainv)
        cols.extend(ex.transpose(c))
    span = ex.lattice_sum(cols)
    return FracIdealRep.from_generators(P, ex.dual_basis(span))


@lru_cache(maxsize=4096)
def _multiplier_ring_cached(L: _Lattice) -> OrderRep:
    c = colon(L, L)
    return OrderRep(L.poly, c.den, c.hnf)


def multiplier_ring(L) -> OrderRep:
    """O_L = {x in K : x L subset L}, as an exact order."""
    return _multiplier_ring_cached(as_ideal(L))


def is_invertible(L, O: OrderRep | None = None) -> bool:
    O = O or multiplier_ring(L)
    inv = colon(as_ideal(O), L)
    return ideal_mul(L, inv) == as_ideal(O)


def ideal_inverse(L, O: OrderRep | None = None) -> FracIdealRep:
    O = O or multiplier_ring(L)
    return colon(as_ideal(O), L)


# ----------------------------------------------------------------------------
# maximal order


def _frobenius_kernel(O: OrderRep, p: int):
    """Basis (O-coordinates, mod p) of the p-radical of O/pO."""
    P = O.poly
    n = P.n
    j = 1
    while p ** j < n:
        j += 1
    rows = []
    for b in O.basis:
        # x -> x^(p^j) with O-coordinates reduced mod p at each step
        x = b
        for _ in range(j):
            x = _pow_mod_order(O, x, p, p)
        rows.append([int(c) % p for c in O.coords_of(x)])
    return _left_kernel_mod_p(rows, p)


def _pow_mod_order(O, x, e, p):
    P = O.poly
    res = one(P)
    base = x
    while e:
        if e & 1:
            res = _reduce_mod(O, el_mul(P, res, base), p)
        base = _reduce_mod(O, el_mul(P, base, base), p)
        e >>= 1
    return res


def _reduce_mod(O, x, p):
    c = O.coords_of(x)
    c = [Fraction(int(v) % p) for v in c]
    return tuple(sum(c[i] * O.basis[i][k] for i in range(len(c))) for k in range(len(c)))


def _left_kernel_mod_p(rows, p):
    """Vectors v (mod p) with v @ rows == 0 mod p."""
    n = len(rows)
    m = len(rows[0])
    # augment [rows | I] and row-reduce the left block
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


def _radical_idealizer(O: OrderRep, p: int) -> OrderRep:
    ker = _frobenius_kernel(O, p)
    n = O.poly.n
    gens = [[p * x for x in b] for b in O.basis]
    for v in ker:
        gens.append([sum(v[i] * O.basis[i][k] for i in range(n)) for k in range(n)])
    rad = FracIdealRep.from_generators(O.poly, gens)
    return multiplier_ring(rad)


def p_maximal_order(O: OrderRep, p: int) -> OrderRep:
    while True:
        nxt = _radical_idealizer(O, p)
        if nxt == O:
            return O
        O = nxt


@lru_cache(maxsize=1024)
def maximal_order(P: MonicIntPoly) -> OrderRep:
    """The ring of integers O_K (round-2 at every p with p^2 | disc P)."""
    O = order_from_poly(P)
    for p, e in factorint(P.disc).items():
        if e >= 2:
            O = p_maximal_order(O, p)
    return O


# ----------------------------------------------------------------------------
# polynomials mod p


def _pmod_trim(a):
    while a and a[-1] == 0:
        a.pop()
    return a


def _pmod_divmod(a, b, p):
    a = list(a)
    inv = pow(b[-1], -1, p)
    q = [0] * max(len(a) - len(b) + 1, 1)
    while len(_pmod_trim(a)) >= len(b):
        c = a[-1] * inv % p
        k = len(a) - len(b)
        q[k] = c
        for i, bc in enumerate(b):
            a[k + i] = (a[k + i] - c * bc) % p
    return _pmod_trim(q), a


def _pmod_gcd(a, b, p):
    a, b = _pmod_trim([x % p for x in a]), _pmod_trim([x % p for x in b])
    while b:
        a, b = b, _pmod_divmod(a, b, p)[1]
    if a:
        inv = pow(a[-1], -1, p)
        a = [x * inv % p for x in a]
    return a


def _pmod_mulmod(a, b, m, p):
    prod = [0] * (len(a) + len(b) - 1) if a and b else []
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            prod[i + j] = (prod[i + j] + x * y) % p
    return _pmod_divmod(prod, m, p)[1]


def _pmod_powmod(a, e, m, p):
    res = [1]
    base = _pmod_divmod(a, m, p)[1]
    while e:
        if e & 1:
            res = _pmod_mulmod(res, base, m, p)
        base = _pmod_mulmod(base, base, m, p)
        e >>= 1
    return res


def count_roots_mod_p(P: MonicIntPoly, p: int) -> int:
    """Number of distinct roots of P in F_p."""
    f = [c % p for c in P.coeffs] + [1]
    xp = _pmod_powmod([0, 1], p, f, p)
    g = _pmod_gcd(_sub(xp, [0, 1], p), f, p)
    return len(g) - 1 if g else 0


def _sub(a, b, p):
    n = max(len(a), len(b))
    a = a + [0] * (n - len(a))
    b = b + [0] * (n - len(b))
    return _pmod_trim([(x - y) % p for x, y in zip(a, b)])


def roots_mod_p(f, p):
    """Distinct roots in F_p of a polynomial (low-to-high coefficients)."""
    f = _pmod_trim([c % p for c in f])
    if len(f) <= 1:
        return []
    if p < 2000:
        return [r for r in range(p) if _peval(f, r, p) == 0]
    xp = _pmod_powmod([0, 1], p, f, p)
    g = _pmod_gcd(_sub(xp, [0, 1], p), f, p)
    return sorted(_split_linear(g, p))


def _peval(f, x, p):
    acc = 0
    for c in reversed(f):
        acc = (acc * x + c) % p
    return acc


def _split_linear(g, p):
    """Roots of a squarefree product of distinct linear factors (Cantor-Zassenhaus)."""
    if len(g) <= 1:
        return []
    if len(g) == 2:
        return [(-g[0] * pow(g[1], -1, p)) % p]
    a = 1
    while True:
        h = _pmod_powmod([a, 1], (p - 1) // 2, g, p)
        d = _pmod_gcd(_sub(h, [1], p), g, p)
        if 1 < len(d) < len(g):
            q, _ = _pmod_divmod(g, d, p)
            return _split_linear(d, p) + _split_linear(q, p)
        a += 1


def factor_mod_p(P: MonicIntPoly, p: int):
    """Factorization of P mod p as [(g, e)] with g monic (low-to-high)."""
    f = [c % p for c in P.coeffs] + [1]
    out = []
    for r in roots_mod_p(f, p):
        e = 0
        lin = [(-r) % p, 1]
        while True:
            q, rem = _pmod_divmod(f, lin, p)
            if rem:
                break
            f, e = q, e + 1
        out.append(([(-r) % p, 1], e))
    if len(f) > 1:
        # no roots left, degree <= 3 remainder: irreducible, possibly a square
        if len(f) == 5:  # quartic cannot occur for n <= 3
            raise AssertionError
        out.append((f, 1))
    return out


# ----------------------------------------------------------------------------
# ideals


def _poly_el(P, g):
    """Element g(t) of K for g low-to-high integer coefficients."""
    n = P.n
    x = [Fraction(0)] * n
    tab = P.reduction_table
    for k, c in enumerate(g):
        for i in range(n):
            x[i] += c * tab[k][i]
    return tuple(x)


def principal(O: OrderRep, x) -> FracIdealRep:
    return FracIdealRep.from_generators(O.poly, [el_mul(O.poly, b, x) for b in O.basis])


def int_ideal(O: OrderRep, k) -> FracIdealRep:
    return FracIdealRep.from_generators(O.poly, [[Fraction(k) * c for c in b] for b in O.basis])


def _is_O_stable(O: OrderRep, L) -> bool:
    P = O.poly
    return all(L.contains(el_mul(P, a, b)) for a in O.basis[1:] for b in L.basis) and \
        all(L.contains(el_mul(P, O.basis[0], b)) for b in L.basis)


def is_good_prime(P: MonicIntPoly, p: int) -> bool:
    """True when Z[t] is p-maximal (p^2 does not divide disc P)."""
    return P.disc % (p * p) != 0


def primes_above(O: OrderRep, p: int):
    """Prime ideals of O above a good prime p as (ideal, residue degree, e)."""
    P = O.poly
    if not is_good_prime(P, p):
        raise ValueError("primes_above needs p with p^2 not dividing disc P")
    out = []
    pO = int_ideal(O, p)
    for g, e in factor_mod_p(P, p):
        if len(g) - 1 == P.n:
            # P irreducible mod p: p is inert
            out.append((pO, P.n, 1))
            continue
        gen = principal(O, _poly_el(P, g))
        out.append((ideal_add(pO, gen), len(g) - 1, e))
    return out


def _primary_ideals_bad(O: OrderRep, p: int, bound: int):
    """All O-ideals of p-power index <= bound (descending index-p steps)."""
    n = O.poly.n
    top = as_ideal(O)
    seen = {top: 1}
    frontier = [top]
    while frontier:
        nxt = []
        for L in frontier:
            if seen[L] * p > bound:
                continue
            for h in _hyperplanes(n, p):
                gens = [[p * c for c in b] for b in L.basis]
                for v in h:
                    gens.append([sum(v[i] * L.basis[i][k] for i in range(n)) for k in range(n)])
                sub = FracIdealRep.from_generators(O.poly, gens)
                if sub in seen or not _is_O_stable(O, sub):
                    continue
                seen[sub] = seen[L] * p
                nxt.append(sub)
        frontier = nxt
    return [(L, idx) for L, idx in seen.items()]


@lru_cache(maxsize=None)
def _hyperplanes(n, p):
    """Spanning sets of the index-p subspaces of F_p^n."""
    out = []
    # a hyperplane is the kernel of a nonzero functional, normalized
    for f in itertools.product(range(p), repeat=n):
        if not any(f):
            continue
        lead = next(i for i in range(n) if f[i])
        if f[lead] != 1:
            continue
        basis = []
        for i in range(n):
            if i == lead:
                continue
            v = [0] * n
            v[i] = 1
            v[lead] = (-f[i]) % p
            basis.append(tuple(v))
        out.append(tuple(basis))
    return tuple(out)


def primary_ideals(O: OrderRep, p: int, bound: int):
    """All O-ideals with index a power of p, at most bound, as (ideal, index)."""
    P = O.poly
    if is_good_prime(P, p):
        pr = primes_above(O, p)
        out = []
        maxe = int(math.log(bound, p) + 1e-9)

        def rec(i, cur, idx):
            if i == len(pr):
                out.append((cur, idx))
                return
            q, f, _ = pr[i]
            nq = p ** f
            rec(i + 1, cur, idx)
            a = 1
            acc = cur
            while idx * nq ** a <= bound:
                acc = ideal_mul(acc, q)
                rec(i + 1, acc, idx * nq ** a)
                a += 1

        rec(0, as_ideal(O), 1)
        return out
    return _primary_ideals_bad(O, p, bound)


def ideals_of_bounded_norm(O: OrderRep, B: int, cap: int = 200000):
    """All integral O-ideals of index <= B, sorted by (norm, HNF).

    Built from primary components: an ideal of finite index is the
    product of its p-primary parts.
    """
    if B < 1:
        raise InputError("B must be >= 1")
    comps = []
    for p in primes_up_to(B):
        lst = [x for x in primary_ideals(O, p, B) if x[1] > 1]
        if lst:
            comps.append(sorted(lst, key=lambda t: (t[1], t[0].sort_key())))
    out = []

    def rec(i, cur, idx):
        if len(out) > cap:
            raise ResourceCapError(f"more than {cap} ideals of norm <= {B}")
        if i == len(comps):
            out.append((idx, cur))
            return
        rec(i + 1, cur, idx)
        for L, k in comps[i]:
            if idx * k <= B:
                rec(i + 1, ideal_mul(cur, L) if idx > 1 else L, idx * k)
            else:
                break

    # primes larger than B/idx can be skipped quickly: rec is pruned by idx
    rec(0, as_ideal(O), 1)
    out.sort(key=lambda t: (t[0], t[1].den, t[1].hnf))
    return [L for _, L in out]


def ideal_norm_in(L, O: OrderRep) -> Fraction:
    """[O : L] generalized to fractional L (covolume ratio)."""
    return L.norm / O.norm


# ----------------------------------------------------------------------------
# homothety


def is_homothetic(L1, L2):
    """Return (True, lambda) with L1 = lambda L2, or (False, None)."""
    from .reduction import canonical_class

    if L1.poly != L2.poly:
        raise InputError("lattices over different polynomials")
    c1, x1 = canonical_class(as_ideal(L1))
    c2, x2 = canonical_class(as_ideal(L2))
    if c1 != c2:
        return False, None
    lam = el_mul(L1.poly, x1, el_inv(L1.poly, x2))
    return True, lam


def _bad_primes_for(O: OrderRep):
    OK = maximal_order(O.poly)
    idx = O.norm / OK.norm
    assert idx.denominator == 1
    return sorted(factorint(int(idx))) if idx > 1 else []


def is_locally_homothetic(L1, L2, witness: bool = False):
    """Decide whether L1 and L2 are homothetic at every prime.

    Only primes dividing [O_K : O] need attention (elsewhere O is locally
    maximal and both lattices are locally principal).  At such p the test
    searches lambda in (L1 : L2) modulo p (L1 : L2) for one with
    lambda L2 + p L1 = L1, which by Nakayama forces lambda L2 = L1 at p.
    """
    L1, L2 = as_ideal(L1), as_ideal(L2)
    O1, O2 = multiplier_ring(L1), multiplier_ring(L2)
    if O1 != O2:
        return (False, {}) if witness else False
    wits = {}
    for p in _bad_primes_for(O1):
        lam = _local_homothety_at(L1, L2, p)
        if lam is None:
            return (False, {}) if witness else False
        wits[p] = lam
    return (True, wits) if witness else True


def _local_homothety_at(L1, L2, p):
    P = L1.poly
    n = P.n
    col = colon(L1, L2)
    for coeffs in itertools.product(range(p), repeat=n):
        if not any(coeffs):
            continue
        lam = tuple(sum(coeffs[i] * col.basis[i][k] for i in range(n)) for k in range(n))
        nm = abs(el_norm(P, lam)) * L2.norm / L1.norm
        if nm == 0 or ex.vp_rat(nm, p) != 0:
            continue
        return lam
    return None


# ----------------------------------------------------------------------------
# Picard group


@dataclass(frozen=True)
class IdealClassRep:
    """A homothety class of lattices, stored by its canonical representative."""

    representative: FracIdealRep
    order: OrderRep

    @classmethod
    def of(cls, L) -> "IdealClassRep":
        from .reduction import canonical_class

        L = as_ideal(L)
        c, _ = canonical_class(L)
        return cls(c, multiplier_ring(L))

    @property
    def poly(self):
        return self.representative.poly

    def to_json(self):
        return self.representative.to_json()


@dataclass
class PicardGroup:
    order: OrderRep
    classes: list  # IdealClassRep, identity first
    table: list  # table[i][j] = index of classes[i] * classes[j]
    invariants: list  # cyclic factors d_1 | d_2 | ...
    coords: list  # class index -> tuple in prod Z/d_i
    generators: list = field(default_factory=list)  # (FracIdealRep, class index)

    @property
    def order_size(self) -> int:
        return len(self.classes)

    def index_of(self, L) -> int:
        from .reduction import canonical_class

        c, _ = canonical_class(as_ideal(L))
        return self._lookup[c.key]

    @cached_property
    def _lookup(self):
        return {c.representative.key: i for i, c in enumerate(self.classes)}

    def characters(self):
        """All characters as lists of exact exponents: psi(c) = exp(2 pi i e)."""
        chars = []
        for m in itertools.product(*[range(d) for d in self.invariants]):
            vals = []
            for cv in self.coords:
                e = sum(Fraction(mi * ci, d) for mi, ci, d in zip(m, cv, self.invariants))
                vals.append(e - math.floor(e))
            chars.append(vals)
        return chars

    def character_values(self):
        return [[cmath.exp(2j * math.pi * float(e)) for e in ch] for ch in self.characters()]


def minkowski_constant(sig) -> float:
    r, s = sig
    n = r + 2 * s
    return (4 / math.pi) ** s * math.factorial(n) / n ** n


def _picard_generators(O: OrderRep, bound: int):
    """Invertible prime (or bad-primary) ideals of norm <= bound."""
    gens = []
    for p in primes_up_to(bound):
        if is_good_prime(O.poly, p):
            for q, f, _ in primes_above(O, p):
                if p ** f <= bound:
                    gens.append(q)
        else:
            for L, idx in primary_ideals(O, p, bound):
                if idx > 1 and multiplier_ring(L) == O and is_invertible(L, O):
                    gens.append(L)
    return gens


@lru_cache(maxsize=256)
def picard_group(O: OrderRep, bound: int | None = None, cap: int = 5000) -> PicardGroup:
    """Pic(O): classes of invertible O-ideals with table and characters."""
    from .reduction import canonical_class

    if bound is None:
        bound = math.ceil(minkowski_constant(O.poly.signature) * math.sqrt(abs(O.disc)))
    ident, _ = canonical_class(as_ideal(O))
    classes = [ident]
    reps = [as_ideal(O)]
    words = [()]
    lookup = {ident.key: 0}
    gens = []
    relations = []
    for g in _picard_generators(O, bound):
        cg, _ = canonical_class(g)
        gi = len(gens)
        gens.append(g)
        if cg.key in lookup:
            relations.append(_word_sub(_unit_word(gi), words[lookup[cg.key]]))
            continue
        # extend the subgroup by closing under the new generator
        frontier = list(range(len(classes)))
        while frontier:
            nxt = []
            for ci in frontier:
                prod = ideal_mul(reps[ci], g)
                c, _ = canonical_class(prod)
                w = _word_add(words[ci], _unit_word(gi))
                if c.key in lookup:
                    relations.append(_word_sub(w, words[lookup[c.key]]))
                else:
                    lookup[c.key] = len(classes)
                    classes.append(c)
                    reps.append(prod)
                    words.append(w)
                    nxt.append(len(classes) - 1)
                    if len(classes) > cap:
                        raise ResourceCapError("Picard group larger than cap")
            frontier = nxt
    k = len(gens)
    rel = [_dense(w, k) for w in relations]
    invariants, coord_map = _group_structure(rel, k, words, len(classes))
    h = len(classes)
    table = [[0] * h for _ in range(h)]
    inv_lookup = {tuple(c): i for i, c in enumerate(coord_map)}
    for i in range(h):
        for j in range(h):
            s = tuple((a + b) % d for a, b, d in zip(coord_map[i], coord_map[j], invariants))
            table[i][j] = inv_lookup[s]
    cls = [IdealClassRep(c, O) for c in classes]
    return PicardGroup(O, cls, table, invariants, [tuple(c) for c in coord_map],
                       list(zip(gens, [None] * len(gens))))


def _unit_word(i):
    return ((i, 1),)


def _word_add(a, b):
    d = dict(a)
    for i, e in b:
        d[i] = d.get(i, 0) + e
    return tuple(sorted((i, e) for i, e in d.items() if e))


def _word_sub(a, b):
    return _word_add(a, tuple((i, -e) for i, e in b))


def _dense(w, k):
    v = [0] * k
    for i, e in w:
        v[i] = e
    return v


def _group_structure(relations, k, words, h):
    """Invariant factors of Z^k / relations and coordinates of each class."""
    if k == 0:
        return [], [()]
    rows = [r for r in relations if any(r)]
    if not rows:
        raise ConvergenceError("relation lattice not of full rank")
    hm = ex.hnf(rows, k)
    U, D, V = ex.smith_form(hm)
    diag = [D[i][i] for i in range(k)]
    # Z^k / rowspace(H): coordinates via x -> x V, reduced mod diag
    keep = [i for i in range(k) if diag[i] != 1]
    invariants = [diag[i] for i in keep]
    coords = []
    for w in words:
        x = _dense(w, k)
        y = [sum(x[r] * V[r][c] for r in range(k)) for c in range(k)]
        coords.append(tuple(y[i] % diag[i] for i in keep))
    prod = 1
    for d in invariants:
        prod *= d
    if prod != h or len(set(coords)) != h:
        raise ConvergenceError("inconsistent Picard group structure")
    return invariants, coords


# ----------------------------------------------------------------------------
# units


@dataclass(frozen=True)
class UnitGroupRep:
    torsion_order: int
    fundamental_logs: tuple  # tuple of tuples, one per unit, length r + s
    regulator: float
    fundamental_units: tuple | None = None  # exact elements when recorded

    @property
    def rank(self) -> int:
        return len(self.fundamental_logs)


def unit_group(O: OrderRep, max_radius: float = 4000.0) -> UnitGroupRep:
    """Torsion, fundamental units and regulator of O (verified search)."""
    from .reduction import unit_search

    return unit_search(O, max_radius=max_radius)
