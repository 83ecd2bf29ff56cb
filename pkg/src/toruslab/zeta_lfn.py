"""Partial Dedekind zeta sums, the class number formula, and volume growth."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import order_core as oc
from .errors import InputError


def zeta_partial(O: oc.OrderRep, s, B: int, character=None, pic=None) -> complex:
    """sum over integral ideals a with N(a) <= B of psi(a) N(a)^-s.

    character is None (trivial), an index into the Picard characters, or a
    list of exponents e_c with psi(c) = exp(2 pi i e_c).  Non-invertible
    ideals are skipped when a character is given.  Terms are added in the
    order (norm, HNF).
    """
    if O.poly.n < 2:
        raise InputError("degree must be at least 2")
    if B < 1:
        raise InputError("B must be >= 1")
    s = complex(s)
    if character is not None:
        pic = pic or oc.picard_group(O)
        if isinstance(character, int):
            character = pic.characters()[character]
    total = 0j
    for a in oc.ideals_of_bounded_norm(O, B):
        N = int(oc.ideal_norm_in(a, O))
        term = cmath.exp(-s * math.log(N))
        if character is not None:
            if not oc.is_invertible(a, O):
                continue
            e = float(character[pic.index_of(a)])
            term *= cmath.exp(2j * math.pi * e)
        total += term
    return total


def principal_partial(O: oc.OrderRep, s, B: int, pic=None) -> complex:
    """The same sum restricted to principal ideals."""
    pic = pic or oc.picard_group(O)
    s = complex(s)
    total = 0j
    for a in oc.ideals_of_bounded_norm(O, B):
        if oc.is_invertible(a, O) and pic.index_of(a) == 0:
            total += cmath.exp(-s * math.log(int(oc.ideal_norm_in(a, O))))
    return total


def zeta_majorant(n: int, s: float) -> float:
    """zeta(s)^n bounds the trivial partial sums for real s > 1 (at most d_n(m) ideals of norm m)."""
    from scipy.special import zeta

    if s <= 1:
        raise InputError("majorant needs s > 1")
    return float(zeta(s)) ** n


# ----------------------------------------------------------------------------
# ideal counting


def _local_counts(degrees, K: int) -> list[int]:
    """c_k = #{a : sum f_i a_i = k} for k = 0..K: ideals of norm p^k above a prime
    where the order is maximal (residue degrees f_i)."""
    c = [1] + [0] * K
    for f in degrees:
        for k in range(f, K + 1):
            c[k] += c[k - f]
    return c


def _prime_degrees(O: oc.OrderRep, p: int):
    """Residue degrees of the primes of O above p, or None when p needs the slow path."""
    P = O.poly
    if not oc.is_good_prime(P, p):
        return None
    n = P.n
    if P.disc % p == 0:
        return [len(g) - 1 for g, _ in oc.factor_mod_p(P, p)]
    if n == 2:
        b, c = P.coeffs[1], P.coeffs[0]
        D = b * b - 4 * c
        if p == 2:
            return [len(g) - 1 for g, _ in oc.factor_mod_p(P, p)]
        leg = pow(D % p, (p - 1) // 2, p)
        return [1, 1] if leg == 1 else [2]
    r = oc.count_roots_mod_p(P, p)
    return {3: [1, 1, 1], 1: [1, 2], 0: [3]}[r]


def ideal_counts(O: oc.OrderRep, B: int) -> np.ndarray:
    """a[m] = number of ideals of O of norm m, for m <= B (O maximal)."""
    if not O.is_maximal():
        raise InputError("ideal counting needs the maximal order")
    a = np.ones(B + 1, dtype=np.int64)
    a[0] = 0
    for p in oc.primes_up_to(B):
        K = int(math.log(B) / math.log(p) + 1e-12)
        while p ** (K + 1) <= B:
            K += 1
        while p ** K > B:
            K -= 1
        deg = _prime_degrees(O, p)
        if deg is None:
            c = [0] * (K + 1)
            for _, idx in oc.primary_ideals(O, p, p ** K):
                c[int(round(math.log(idx, p)))] += 1
        else:
            c = _local_counts(deg, K)
        if K == 1:
            a[p::p] *= c[1]
            continue
        m = np.arange(p, B + 1, p)
        v = np.ones(m.size, dtype=np.int64)
        q = m // p
        mask = q % p == 0
        while mask.any():
            v[mask] += 1
            q[mask] //= p
            mask = (q % p == 0) & mask
        a[m] *= np.asarray(c, dtype=np.int64)[v]
    return a


# ----------------------------------------------------------------------------
# class number formula


@dataclass
class CNFResult:
    residue: float
    error: float
    rhs: float
    relerr: float
    B: int
    h: int
    regulator: float
    w: int
    signature: tuple
    disc: int
    raw: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "residue_estimate": self.residue, "residue_error": self.error, "acnf_rhs": self.rhs,
            "relerr": self.relerr, "B": self.B, "h": self.h, "regulator": self.regulator,
            "w": self.w, "signature": list(self.signature), "disc": self.disc,
        }


def residue_estimate(counts: np.ndarray, B: int, n: int):
    """Richardson-extrapolated ideal density from the counts up to 2B.

    r(X) = #{N(a) <= X} / X has an error of order X^(-1/n); pairing B with 2B
    removes that term.  The error bar is the change between the (B/2, B)
    and (B, 2B) estimates.
    """
    cum = np.cumsum(counts)
    r = {X: cum[X] / X for X in (B // 2, B, 2 * B)}
    c = 2 ** (1 / n)
    hi = (c * r[2 * B] - r[B]) / (c - 1)
    lo = (c * r[B] - r[B // 2]) / (c - 1)
    return float(hi), float(abs(hi - lo))


def acnf_rhs(signature, h: int, regulator: float, w: int, disc: int) -> float:
    r1, r2 = signature
    return 2 ** r1 * (2 * math.pi) ** r2 * h * regulator / (w * math.sqrt(abs(disc)))


def cnf_check(O: oc.OrderRep, B: int = 10 ** 6) -> CNFResult:
    """Ideal density of the maximal order against 2^r1 (2 pi)^r2 h R / (w sqrt|d|)."""
    if O.poly.n not in (2, 3):
        raise InputError("degree must be 2 or 3")
    if not O.is_maximal():
        raise InputError("class number formula check needs the maximal order")
    counts = ideal_counts(O, 2 * B)
    res, err = residue_estimate(counts, B, O.poly.n)
    pic = oc.picard_group(O)
    units = _units(O)
    sig = O.poly.signature
    rhs = acnf_rhs(sig, pic.order_size, units.regulator, units.torsion_order, O.disc)
    raw = {X: float(np.cumsum(counts)[X] / X) for X in (B // 2, B, 2 * B)}
    return CNFResult(res, err, rhs, abs(res - rhs) / rhs, B, pic.order_size, units.regulator,
                     units.torsion_order, sig, O.disc, raw)


def _units(O):
    if O.poly.n == 2:
        from . import quadratic

        return quadratic.unit_group(O)
    return oc.unit_group(O)


# ----------------------------------------------------------------------------
# volume against discriminant


@dataclass
class PacketVolume:
    label: str
    disc: int
    h: int
    regulator: float

    @property
    def volume(self) -> float:
        return self.h * self.regulator


@dataclass
class TrendFit:
    slope: float
    lo: float
    hi: float
    intercept: float
    count: int
    decades: float

    def within(self, a: float, b: float) -> bool:
        return a <= self.lo and self.hi <= b


def packet_volume(O: oc.OrderRep, label: str = "") -> PacketVolume:
    """Total volume h(O) R(O) of the packet of invertible classes of O."""
    pic = oc.picard_group(O)
    units = _units(O)
    return PacketVolume(label or str(O.poly), abs(O.disc), pic.order_size, units.regulator)


def volume_disc_trend(rows, boots: int = 2000, seed: int = 0) -> TrendFit:
    """Least-squares slope of log(h R) against log|disc| with a 95% bootstrap interval."""
    rows = list(rows)
    if len(rows) < 10:
        raise InputError("need at least 10 packets")
    x = np.log10([r.disc for r in rows])
    if x.max() - x.min() < 2:
        raise InputError("discriminants span less than two decades")
    y = np.log10([r.volume for r in rows])
    slope, icpt = np.polyfit(x, y, 1)
    rng = np.random.Generator(np.random.Philox(key=seed))
    bs = np.empty(boots)
    for i in range(boots):
        idx = rng.integers(0, len(rows), len(rows))
        if np.ptp(x[idx]) == 0:
            bs[i] = np.nan
            continue
        bs[i] = np.polyfit(x[idx], y[idx], 1)[0]
    lo, hi = np.nanpercentile(bs, [2.5, 97.5])
    return TrendFit(float(slope), float(lo), float(hi), float(icpt), len(rows), float(x.max() - x.min()))


def _squarefree(m: int) -> bool:
    return all(e == 1 for e in oc.factorint(abs(m)).values())


def quadratic_family(dmin: int = 100, dmax: int = 10 ** 6, count: int = 24):
    """Orders Z[t] for t^2 - t - k with 4k + 1 squarefree, log-spaced in disc."""
    out = []
    seen = set()
    for target in np.geomspace(dmin, dmax, count):
        k = max(1, int(round((target - 1) / 4)))
        while not _squarefree(4 * k + 1) or k in seen:
            k += 1
        seen.add(k)
        out.append(oc.order_from_poly(oc.MonicIntPoly.parse(f"x^2 - x - {k}")))
    return out


def cubic_family(kmin: int = 3, kmax: int = 40):
    """Orders Z[t] for t^3 - k t - 1 with squarefree discriminant 4k^3 - 27."""
    out = []
    for k in range(kmin, kmax + 1):
        P = oc.MonicIntPoly.parse(f"x^3 - {k}x - 1")
        if _squarefree(P.disc):
            out.append(oc.order_from_poly(P))
    return out


def trend_csv(rows) -> str:
    lines = ["label,disc,h,regulator,volume"]
    for r in rows:
        lines.append(f"{r.label},{r.disc},{r.h},{r.regulator!r},{r.volume!r}")
    return "\r\n".join(lines) + "\r\n"
