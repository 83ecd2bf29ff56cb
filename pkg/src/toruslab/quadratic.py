"""Quadratic fields: lattices as quadratic irrationals.

A rank-2 lattice L = w1 (Z + Z tau) in K is determined up to homothety by
the GL_2(Z)-orbit of tau.  Writing tau = (P + sqrt(D)) / Q with integers
P, Q, Q | D - P^2, the orbit has a canonical point: the reduced cycle of
the continued fraction of tau when D > 0, and the reduced point of the
upper half plane when D < 0.  The same continued fraction yields the
fundamental unit of an order.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt

from . import order_core as oc
from .errors import ConvergenceError, InputError


def _sqrt_rat(x: Fraction) -> Fraction:
    x = Fraction(x)
    a, b = isqrt(x.numerator), isqrt(x.denominator)
    if a * a != x.numerator or b * b != x.denominator:
        raise InputError(f"{x} is not a rational square")
    return Fraction(a, b)


def _s(P):
    """s = 2t + a_1, a square root of disc P in K."""
    return (Fraction(P.coeffs[1]), Fraction(2))


def sqrt_disc(P, D: int):
    """The square root of D in K that is a positive multiple of 2t + a_1."""
    c = _sqrt_rat(Fraction(D, P.disc))
    s = _s(P)
    return (c * s[0], c * s[1])


def tau_form(P, tau):
    """Primitive (a, b, c) with tau = (-b + sqrt(b^2 - 4ac)) / (2a).

    The square root is the positive multiple of 2t + a_1, so the sign of
    a records the orientation of tau.
    """
    u, v = Fraction(tau[0]), Fraction(tau[1])
    if v == 0:
        raise InputError("tau is rational")
    a1 = P.coeffs[1]
    alpha = u - v * a1 / 2
    beta = v / 2
    # tau = alpha + beta * s, root of X^2 - 2 alpha X + alpha^2 - beta^2 disc
    coeffs = [Fraction(1), -2 * alpha, alpha * alpha - beta * beta * P.disc]
    den = 1
    for c in coeffs:
        den = den * c.denominator // gcd(den, c.denominator)
    ints = [int(c * den) for c in coeffs]
    g = gcd(gcd(ints[0], ints[1]), ints[2])
    a, b, c = (x // g for x in ints)
    if beta < 0:
        a, b, c = -a, -b, -c
    return a, b, c


def quad_el(P, num: int, den: int, D: int):
    """The element (num + sqrt D) / den of K."""
    r = sqrt_disc(P, D)
    return (Fraction(num, den) + r[0] / den, r[1] / den)


def _floor_quad(p: int, q: int, r: int) -> int:
    """floor((p + sqrt D) / q) with r = isqrt(D), D not a square."""
    if q > 0:
        return (p + r) // q
    return (-p - r - 1) // (-q)


def cf_orbit(p: int, q: int, D: int, limit: int = 10_000_000):
    """Complete quotients (P_k, Q_k, a_k) of (p + sqrt D)/q until a repeat.

    Returns (states, start) where states[start:] is the period.
    """
    r = isqrt(D)
    seen = {}
    states = []
    while (p, q) not in seen:
        if len(states) > limit:
            raise ConvergenceError("continued fraction period too long")
        seen[(p, q)] = len(states)
        a = _floor_quad(p, q, r)
        states.append((p, q, a))
        p1 = a * q - p
        q1 = (D - p1 * p1) // q
        p, q = p1, q1
    return states, seen[(p, q)]


def _apply_cf(mat, a):
    p, p1, q, q1 = mat
    return (p * a + p1, p, q * a + q1, q)


def _reduce_definite(p: int, q: int, D: int):
    """Reduce (p + sqrt D)/q, D < 0, q > 0 into the standard domain.

    Returns the reduced (P, Q) and (p, p', q, q') with
    tau = (p x + p') / (q x + q') for the reduced x.
    """
    mat = (1, 0, 0, 1)
    while True:
        # translate so that -q/2 <= p < q/2
        k = (2 * p + q) // (2 * q)
        if k:
            p -= k * q
            m0, m1, m2, m3 = mat
            mat = (m0, m1 + k * m0, m2, m3 + k * m2)
        q2 = (p * p - D) // q
        if q2 < q or (q2 == q and p > 0):
            # x -> -1/x
            m0, m1, m2, m3 = mat
            mat = (m1, -m0, m3, -m2)
            done = q2 == q
            p, q = -p, q2
            if done:
                break
            continue
        break
    return (p, q), mat


def _lattice_tau(L):
    b = L.basis
    w1 = tuple(b[0])
    tau = oc.el_mul(L.poly, b[1], oc.el_inv(L.poly, w1))
    return w1, tau


def canonical_class(L):
    """Canonical representative of the homothety class of a rank-2 lattice.

    Returns (C, x) with L = x C.
    """
    P = L.poly
    w1, tau = _lattice_tau(L)
    a, b, c = tau_form(P, tau)
    D = b * b - 4 * a * c
    p, q = -b, 2 * a
    flip = (1, 0, 0, 1)
    if D < 0:
        if q < 0:
            # tau -> -tau keeps the lattice and lands in the upper half plane
            p, q = b, -2 * a
            flip = (-1, 0, 0, 1)
        (P0, Q0), mat = _reduce_definite(p, q, D)
    else:
        states, start = cf_orbit(p, q, D)
        best = min(range(start, len(states)), key=lambda k: (states[k][0], states[k][1]))
        mat = (1, 0, 0, 1)
        for k in range(best):
            mat = _apply_cf(mat, states[k][2])
        P0, Q0 = states[best][0], states[best][1]
    mat = _compose(flip, mat)
    x_red = quad_el(P, P0, Q0, D)
    one = oc.one(P)
    canon = oc.FracIdealRep.from_generators(P, [one, x_red])
    _, _, mq, mq1 = mat
    denom = tuple(mq * xi + mq1 * oi for xi, oi in zip(x_red, one))
    x = oc.el_mul(P, w1, oc.el_inv(P, denom))
    return canon, x


def _compose(m, n):
    """Matrix product of 2x2 matrices stored as (p, p', q, q') = [[p, p'], [q, q']]."""
    a, b, c, d = m
    e, f, g, h = n
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


@lru_cache(maxsize=4096)
def unit_group(O) -> "oc.UnitGroupRep":
    """Units of a quadratic order from the period of its continued fraction."""
    P = O.poly
    w1, tau = _lattice_tau(O)
    a, b, c = tau_form(P, tau)
    D = b * b - 4 * a * c
    if D != O.disc:
        raise AssertionError("order discriminant mismatch")
    if D < 0:
        w = {-3: 6, -4: 4}.get(D, 2)
        return oc.UnitGroupRep(w, (), 1.0, ())
    states, start = cf_orbit(-b, 2 * a, D)
    period = states[start:]
    mat = (1, 0, 0, 1)
    reg = 0.0
    rD = math.sqrt(D)
    for p, q, ak in period:
        mat = _apply_cf(mat, ak)
        reg += math.log((p + rD) / q)
    p0, q0, _ = period[0]
    xi = quad_el(P, p0, q0, D)
    _, _, mq, mq1 = mat
    eps = tuple(mq * z + mq1 * o for z, o in zip(xi, oc.one(P)))
    if abs(oc.el_norm(P, eps)) != 1 or not O.contains(eps):
        raise ConvergenceError("continued fraction unit check failed")
    # eps > 1 at the place where 2t + a_1 > 0, the larger real root
    logs = ((-reg, reg),)
    return oc.UnitGroupRep(2, logs, reg, (eps,))
