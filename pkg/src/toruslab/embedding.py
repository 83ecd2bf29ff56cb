"""Archimedean places of K = Q[t]/P and the Minkowski map."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np

from .errors import ConvergenceError
from .order_core import MonicIntPoly

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class EmbeddingRep:
    """Roots of P: r real roots ascending, then s complex roots with Im > 0."""

    poly: MonicIntPoly
    real_roots: tuple
    complex_roots: tuple

    @property
    def signature(self):
        return (len(self.real_roots), len(self.complex_roots))

    @property
    def roots(self):
        return tuple(self.real_roots) + tuple(self.complex_roots)

    @property
    def degrees(self):
        """Local degrees d_j (1 real, 2 complex), one per place."""
        return (1,) * len(self.real_roots) + (2,) * len(self.complex_roots)

    @property
    def places(self) -> int:
        return len(self.real_roots) + len(self.complex_roots)

    def sigma(self, x):
        """Values of x (power-basis coordinates) at each place."""
        out = []
        for r in self.roots:
            acc = 0.0
            for c in reversed(x):
                acc = acc * r + float(c)
            out.append(acc)
        return out

    def minkowski(self, x) -> np.ndarray:
        """Real coordinates (sigma_1..sigma_r, sqrt2 Re, sqrt2 Im, ...)."""
        vals = self.sigma(x)
        r = len(self.real_roots)
        v = [float(z.real) if isinstance(z, complex) else float(z) for z in vals[:r]]
        for z in vals[r:]:
            v.extend((SQRT2 * z.real, SQRT2 * z.imag))
        return np.array(v)

    @property
    def vandermonde(self) -> np.ndarray:
        """Matrix V with minkowski(x) = x @ V for float coordinate vectors x."""
        n = self.poly.n
        return np.array([self.minkowski([int(i == j) for j in range(n)]) for i in range(n)])

    def logs(self, x):
        return [math.log(abs(z)) for z in self.sigma(x)]

    def sigma_hp(self, x):
        """Place values of an exact element, correctly rounded from integer
        arithmetic; immune to cancellation among large coordinates."""
        table = _hp_table(self)
        x = [Fraction(c) for c in x]
        den = 1
        for c in x:
            den = den * c.denominator // math.gcd(den, c.denominator)
        a = [c.numerator * (den // c.denominator) for c in x]
        scale = den << _HP_BITS
        out = []
        for re_pows, im_pows in table:
            re = sum(ak * rk for ak, rk in zip(a, re_pows)) / scale
            if im_pows is None:
                out.append(re)
            else:
                out.append(complex(re, sum(ak * ik for ak, ik in zip(a, im_pows)) / scale))
        return out

    def minkowski_hp(self, x) -> np.ndarray:
        vals = self.sigma_hp(x)
        r = len(self.real_roots)
        v = list(vals[:r])
        for z in vals[r:]:
            v.extend((SQRT2 * z.real, SQRT2 * z.imag))
        return np.array(v)

    def logs_hp(self, x):
        return [math.log(abs(z)) for z in self.sigma_hp(x)]


_HP_BITS = 256


@lru_cache(maxsize=1024)
def _hp_table(theta: EmbeddingRep):
    """Powers r^k of every root as integers scaled by 2^_HP_BITS."""
    out = []
    with mpmath.workdps(90):
        for j, z in enumerate(_hp_roots(theta)):
            pw = [mpmath.mpf(1)]
            for _ in range(1, theta.poly.n):
                pw.append(pw[-1] * z)
            re_p = tuple(int(mpmath.nint(mpmath.re(w) * 2 ** _HP_BITS)) for w in pw)
            im_p = None
            if j >= len(theta.real_roots):
                im_p = tuple(int(mpmath.nint(mpmath.im(w) * 2 ** _HP_BITS)) for w in pw)
            out.append((re_p, im_p))
    return tuple(out)


@lru_cache(maxsize=1024)
def _hp_roots(theta: EmbeddingRep):
    coeffs = list(theta.poly.coeffs) + [1]
    out = []
    with mpmath.workdps(90):
        for z0 in theta.roots:
            z = mpmath.mpc(z0) if isinstance(z0, complex) else mpmath.mpf(z0)
            for _ in range(10):
                f = mpmath.mpf(0)
                df = mpmath.mpf(0)
                for c in reversed(coeffs):
                    df = df * z + f
                    f = f * z + c
                if df == 0:
                    break
                z = z - f / df
            out.append(z)
    return tuple(out)


def _newton(P: MonicIntPoly, z, steps=60):
    coeffs = list(P.coeffs) + [1]
    for _ in range(steps):
        f = 0j if isinstance(z, complex) else 0.0
        df = f
        for c in reversed(coeffs):
            df = df * z + f
            f = f * z + c
        if df == 0:
            break
        dz = f / df
        z = z - dz
        if abs(dz) <= 1e-17 * max(1.0, abs(z)):
            break
    return z


@lru_cache(maxsize=1024)
def real_embedding(P: MonicIntPoly) -> EmbeddingRep:
    """Roots of P to full double precision with a fixed ordering."""
    coeffs = [1] + [float(c) for c in reversed(P.coeffs)]
    seeds = np.roots(coeffs)
    r_expected = P.signature[0]
    reals, cplx = [], []
    for z in seeds:
        if abs(z.imag) < 1e-7 * max(1.0, abs(z)) and len(reals) < r_expected:
            reals.append(float(_newton(P, float(z.real))))
        elif z.imag > 0:
            cplx.append(complex(_newton(P, complex(z))))
    if len(reals) != r_expected or len(cplx) != P.signature[1]:
        # near-degenerate seeds: fall back to the imaginary part ranking
        order = sorted(seeds, key=lambda w: abs(w.imag))
        reals = [float(_newton(P, float(w.real))) for w in order[:r_expected]]
        cplx = [complex(_newton(P, complex(w.real, abs(w.imag))))
                for w in order[r_expected:] if w.imag >= 0][:P.signature[1]]
    reals.sort()
    cplx.sort(key=lambda w: w.real)
    scale = max(1.0, max(abs(c) for c in P.coeffs))
    for z in reals + cplx:
        if abs(P.eval(z)) > 1e-10 * scale * max(1.0, abs(z)) ** P.n:
            raise ConvergenceError(f"root refinement failed for {P}")
    if len(set(reals)) != len(reals):
        raise ConvergenceError(f"repeated real roots for {P}")
    return EmbeddingRep(P, tuple(reals), tuple(complex(z.real, abs(z.imag)) for z in cplx))


def phase(z) -> float:
    return cmath.phase(z)
