"""Siegel transforms of lattices and their averages over packets of orbits.

E_f(L) sums a test function over the nonzero vectors of a unimodular
lattice.  Its Haar average is the integral of f, so averages over packets
measure how far a packet is from equidistribution.  Averages over a single
orbit can also be unfolded into a sum over lattice vectors modulo units,
which gives an independent evaluation of the same number.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate, special

from . import kernels
from . import order_core as oc
from .embedding import real_embedding
from .errors import ConvergenceError, InputError, ResourceCapError
from .orbit_geometry import EmbeddedLattice, OrbitSampler, orbit_of, sample_params
from .reduction import min_norm_elements

# ----------------------------------------------------------------------------
# test functions


def _unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def _smoothstep(u):
    return u ** 3 * (10 - 15 * u + 6 * u * u)


def _bump_shell(n: int) -> Fraction:
    """n * int_0^1 (1 - S(u)) (1 + u)^(n-1) du for the quintic smoothstep S."""
    # 1 - S(u) = 1 - 10u^3 + 15u^4 - 6u^5
    one_minus_s = {0: 1, 3: -10, 4: 15, 5: -6}
    total = Fraction(0)
    for k in range(n):
        binom = math.comb(n - 1, k)
        for e, c in one_minus_s.items():
            total += Fraction(binom * c, e + k + 1)
    return n * total


@dataclass(frozen=True)
class TestFunction:
    kind: str  # "gaussian" or "bump"
    n: int
    sigma: float = 1.0
    center: tuple = ()
    eps: float = 0.0

    @classmethod
    def gaussian(cls, n: int, sigma: float = 1.0) -> "TestFunction":
        return cls("gaussian", n, sigma=float(sigma))

    @classmethod
    def bump(cls, center, eps: float) -> "TestFunction":
        center = tuple(float(c) for c in center)
        return cls("bump", len(center), center=center, eps=float(eps))

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == "gaussian":
            return np.exp(-math.pi * np.einsum("ij,ij->i", x, x) / self.sigma ** 2)
        d = np.linalg.norm(x - np.array(self.center), axis=1)
        u = np.clip((d - self.eps) / self.eps, 0.0, 1.0)
        return 1.0 - _smoothstep(u)

    @property
    def integral(self) -> float:
        if self.kind == "gaussian":
            return self.sigma ** self.n
        return _unit_ball_volume(self.n) * self.eps ** self.n * float(1 + _bump_shell(self.n))

    def describe(self) -> str:
        if self.kind == "gaussian":
            return f"gaussian(sigma={self.sigma:g})"
        c = ",".join(f"{x:g}" for x in self.center)
        return f"bump(center=({c}),eps={self.eps:g})"


def siegel_rhs(f: TestFunction) -> float:
    return f.integral


def default_suite(n: int) -> list[TestFunction]:
    """Three gaussians and three bumps away from the origin."""
    suite = [TestFunction.gaussian(n, s) for s in (0.8, 1.0, 1.25)]
    centers = {
        2: [(0.7, 0.0), (0.9, 0.6), (0.3, 1.2)],
        3: [(0.8, 0.0, 0.0), (0.6, 0.6, 0.3), (0.2, 0.5, 1.1)],
    }[n]
    suite += [TestFunction.bump(c, 0.25) for c in centers]
    return suite


def _split_suite(suite):
    sig = [f.sigma for f in suite if f.kind == "gaussian"]
    cen = [f.center for f in suite if f.kind == "bump"]
    eps = [f.eps for f in suite if f.kind == "bump"]
    order = [i for i, f in enumerate(suite) if f.kind == "gaussian"] + \
            [i for i, f in enumerate(suite) if f.kind == "bump"]
    return sig, cen, eps, order


def siegel_suite(bases, suite) -> np.ndarray:
    """E_f for every lattice (rows of bases) and every f of the suite."""
    bases = np.asarray(bases, dtype=float)
    if bases.ndim == 2:
        bases = bases[None]
    sig, cen, eps, order = _split_suite(suite)
    raw = kernels.siegel_suite(bases, sig, cen, eps)
    out = np.empty_like(raw)
    out[:, order] = raw
    return out


# ----------------------------------------------------------------------------
# single lattices


def _basis_of(L):
    return L.basis if isinstance(L, EmbeddedLattice) else np.asarray(L, dtype=float)


def vectors_in_ball(L, R: float, cap: int = 2_000_000) -> np.ndarray:
    """All nonzero vectors of length <= R."""
    if R <= 0:
        raise InputError("radius must be positive")
    B = _basis_of(L)
    n = B.shape[0]
    red, _ = kernels.lll(B)
    # lattice points in a ball of radius R number about vol/covol
    est = _unit_ball_volume(n) * R ** n / abs(np.linalg.det(B))
    if est > cap:
        raise ResourceCapError(f"about {est:.0f} vectors requested")
    _, vecs = kernels.enumerate_ball(B, R)
    return vecs


def siegel_transform(L, f: TestFunction) -> float:
    return float(siegel_suite(_basis_of(L), [f])[0, 0])


def cusp_height(L) -> float:
    return 1.0 / kernels.shortest_length(_basis_of(L))


def hermite_bound(n: int) -> float:
    """Lower bound gamma_n^(-1/2) for the height of a unimodular lattice."""
    gamma = {1: 1.0, 2: math.sqrt(4 / 3), 3: 2 ** (1 / 3), 4: math.sqrt(2)}[n]
    return gamma ** -0.5


# ----------------------------------------------------------------------------
# packet averages


@dataclass
class WeylRow:
    disc: int
    volume: float
    means: np.ndarray
    rhs: np.ndarray
    stderr: np.ndarray
    samples: int
    classes: int

    @property
    def deviation(self) -> np.ndarray:
        return self.means - self.rhs

    @property
    def max_abs_deviation(self) -> float:
        return float(np.max(np.abs(self.deviation)))


def batch_stderr(values: np.ndarray, batches: int = 16) -> np.ndarray:
    values = np.asarray(values)
    m = values.shape[0]
    if m < batches:
        return np.full(values.shape[1:], np.nan)
    edges = np.linspace(0, m, batches + 1).astype(int)
    bm = np.array([values[a:b].mean(axis=0) for a, b in zip(edges[:-1], edges[1:])])
    return bm.std(axis=0, ddof=1) / math.sqrt(batches)


def packet_orbits(packet):
    return [orbit_of(C, class_id=i) for i, C in enumerate(packet.classes)]


def grid_count(orbit, step: float) -> int:
    """Points per stabilizer direction so that the spacing is about step."""
    if orbit.rank == 0:
        return 1
    cell = orbit.reduced_logs
    return max(1, max(math.ceil(float(np.max(np.abs(v))) / step) for v in cell))


def packet_samples(packet, scheme: str = "grid", step: float = 0.1, m: int = 0, seed: int = 0,
                   shift=None):
    """Unimodular samples of every orbit of a packet, stacked in class order."""
    out = []
    for i, orb in enumerate(packet_orbits(packet)):
        if scheme == "grid":
            params = sample_params(orb, "grid", k=grid_count(orb, step))
        else:
            params = sample_params(orb, "monte_carlo", m=m, seed=seed, stream=i)
        out.append(OrbitSampler(orb).points(params, shift))
    return np.concatenate(out, axis=0)


def weyl_average(packet, suite, scheme: str = "grid", step: float = 0.1, m: int = 0,
                 seed: int = 0, shift=None, batches: int = 16) -> WeylRow:
    """Equal-weight average of E_f over samples of all orbits of the packet.

    Every orbit contributes the same number of samples per unit volume on
    the grid scheme, and m samples on the Monte Carlo scheme; orbits of one
    packet have equal volume, so equal weights are correct.
    """
    pts = packet_samples(packet, scheme, step, m, seed, shift)
    vals = siegel_suite(pts, suite)
    means = np.array([kernels.pairwise_sum(vals[:, j]) for j in range(vals.shape[1])]) / len(vals)
    rhs = np.array([f.integral for f in suite])
    orb0 = orbit_of(packet.classes[0])
    return WeylRow(packet.discriminant, orb0.regulator * len(packet.classes), means, rhs,
                   batch_stderr(vals, batches), len(vals), len(packet.classes))


def weyl_csv(rows, suite) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    head = ["disc", "volume", "classes", "samples"]
    for f in suite:
        d = f.describe()
        head += [f"mean[{d}]", f"rhs[{d}]", f"dev[{d}]", f"stderr[{d}]"]
    w.writerow(head)
    for r in rows:
        line = [r.disc, repr(float(r.volume)), r.classes, r.samples]
        for j in range(len(suite)):
            line += [repr(float(r.means[j])), repr(float(r.rhs[j])), repr(float(r.deviation[j])),
                     repr(float(r.stderr[j]))]
        w.writerow(line)
    return buf.getvalue()


# ----------------------------------------------------------------------------
# unfolding


def _orbit_integral_fn(sig, n):
    """Integral over the full diagonal torus of the gaussian at a vector
    whose coordinate product has absolute value nu (unimodular scale)."""
    r, s = sig
    if (r, s) == (2, 0):
        return lambda nu, sigma: float(special.k0(2 * math.pi * nu / sigma ** 2))
    if (r, s) == (3, 0):
        def g(nu, sigma):
            kappa = 2 * math.pi ** 1.5 * nu / sigma ** 3
            fn = lambda w: math.exp(-math.exp(2 * w)) * special.k0(kappa * math.exp(-w))
            lo = -0.5 * math.log(45.0 / max(kappa, 1e-300)) - 40 if kappa > 0 else -40
            val, _ = integrate.quad(fn, -60, 5, limit=400, epsabs=0, epsrel=1e-13, points=[lo] if -60 < lo < 5 else None)
            return val
        return g
    if (r, s) == (1, 1):
        def g(nu, sigma):
            # place values x (real) and z (complex): |x| |z|^2 = nu; with
            # t = (u, -u/2) the exponent is pi (e^{2u} x^2 + 2 e^{-u} |z|^2) / sigma^2;
            # take x = 1 and |z|^2 = nu after shifting u
            a = math.pi / sigma ** 2
            b = 2 * math.pi * nu / sigma ** 2
            fn = lambda u: math.exp(-a * math.exp(2 * u) - b * math.exp(-u))
            # peak where 2a e^{2u} = b e^{-u}
            u0 = math.log(b / (2 * a)) / 3 if b > 0 else 0.0
            val, _ = integrate.quad(fn, u0 - 40, u0 + 20, limit=400, epsabs=0, epsrel=1e-13, points=[u0])
            return val
        return g
    raise InputError(f"signature {sig} not supported for unfolding")


@dataclass
class HeckeResult:
    lhs: float
    rhs: float
    relerr: float
    nodes: int
    terms: int
    tail_change: float = 0.0


def _gl_tensor(k: int, rank: int):
    x, w = np.polynomial.legendre.leggauss(k)
    x = 0.5 * (x + 1)
    w = 0.5 * w
    if rank == 1:
        return x[:, None], w
    X, Y = np.meshgrid(x, x, indexing="ij")
    W = np.outer(w, w)
    return np.stack([X.ravel(), Y.ravel()], axis=1), W.ravel()


def hecke_unfolding_check(C, sigma: float = 1.0, nodes: int = 16, max_nodes: int = 512,
                          tol: float = 1e-10) -> HeckeResult:
    """Average of E_f over one orbit, computed directly and by unfolding.

    lhs: tensor Gauss-Legendre quadrature over the stabilizer cell, nodes
    doubled until two successive values agree to tol.
    rhs: w / reg times the sum over lambda in L modulo units of the integral
    of f along the full torus orbit of lambda; the sum is truncated where
    the terms drop below 1e-18 and the truncation is checked by doubling.
    """
    L = C.representative if isinstance(C, oc.IdealClassRep) else oc.as_ideal(C)
    P = L.poly
    n = P.n
    emb = real_embedding(P)
    orbit = orbit_of(C)
    f = TestFunction.gaussian(n, sigma)
    sampler = OrbitSampler(orbit)
    # quadrature in the cell coordinates (the cell has u-area = regulator)
    prev = None
    k = nodes
    while True:
        pts, wts = _gl_tensor(k, orbit.rank)
        bases = sampler.points(pts)
        vals = siegel_suite(bases, [f])[:, 0]
        lhs = float(np.dot(wts, vals))
        if prev is not None and abs(lhs - prev) <= tol * abs(lhs):
            break
        if k >= max_nodes:
            raise ConvergenceError("orbit quadrature did not converge")
        prev = lhs
        k *= 2
    # unfolded side
    OL = oc.multiplier_ring(L)
    units = oc.unit_group(OL)
    covol = math.sqrt(abs(P.disc)) * float(L.norm)
    g = _orbit_integral_fn(emb.signature, n)
    scale = float(L.norm / OL.norm)

    def unfolded(bound):
        total, terms = 0.0, 0
        for idx, x in min_norm_elements(L, bound):
            nu = float(abs(oc.el_norm(P, x))) / covol
            total += g(nu, sigma)
            terms += 1
        return total, terms

    # index bound from the decay of the orbit integral (gaussian tail)
    bound = 4
    while g(bound * scale / covol, sigma) > 1e-18:
        bound *= 2
    total, terms = unfolded(bound)
    total2, _ = unfolded(2 * bound)
    rhs = units.torsion_order * total / units.regulator
    rhs2 = units.torsion_order * total2 / units.regulator
    return HeckeResult(lhs, rhs, abs(lhs - rhs) / abs(rhs), k, terms, abs(rhs2 - rhs) / abs(rhs))


# ----------------------------------------------------------------------------
# cusp and ball statistics


def cusp_heights(bases) -> np.ndarray:
    return 1.0 / kernels.shortest_lengths(np.asarray(bases, dtype=float))


def _signed_perms(n: int):
    import itertools

    for perm in itertools.permutations(range(n)):
        for signs in itertools.product((1.0, -1.0), repeat=n):
            P = np.zeros((n, n))
            for i, (j, s) in enumerate(zip(perm, signs)):
                P[i, j] = s
            yield P


def canonical_basis(B) -> np.ndarray:
    red, _ = kernels.lll(np.asarray(B, dtype=float))
    return red


def lattice_distance(B, x0) -> float:
    """Frobenius distance between reduced bases, minimized over signed row permutations."""
    A = canonical_basis(B)
    X = canonical_basis(x0)
    n = A.shape[0]
    return min(float(np.linalg.norm(Pm @ A - X)) for Pm in _signed_perms(n))


def lattice_distances(bases, x0) -> np.ndarray:
    bases = np.asarray(bases, dtype=float)
    X = canonical_basis(x0)
    n = X.shape[0]
    perms = np.array(list(_signed_perms(n)))
    out = np.empty(len(bases))
    for i, B in enumerate(bases):
        A = canonical_basis(B)
        diff = np.einsum("pij,jk->pik", perms, A) - X
        out[i] = float(np.sqrt(np.min(np.einsum("pij,pij->p", diff, diff))))
    return out


def empirical_mass(values: np.ndarray, threshold: float, kind: str) -> float:
    """Fraction of samples in the cusp (height >= R) or in the ball (distance <= eps)."""
    values = np.asarray(values)
    if values.size == 0:
        raise InputError("empty sample")
    if kind == "cusp":
        return float(np.count_nonzero(values >= threshold)) / values.size
    if kind == "ball":
        return float(np.count_nonzero(values <= threshold)) / values.size
    raise InputError(f"unknown statistic {kind!r}")


@dataclass
class ExponentFit:
    slope: float
    lo: float
    hi: float
    xs: np.ndarray = field(repr=False)
    masses: np.ndarray = field(repr=False)

    def contains(self, v: float) -> bool:
        return self.lo <= v <= self.hi


def fit_exponent(values, thresholds, kind: str, boots: int = 400, seed: int = 0) -> ExponentFit:
    """Least-squares slope of log(mass) against log(threshold) with a 95% bootstrap interval."""
    values = np.sort(np.asarray(values, dtype=float))
    th = np.asarray(thresholds, dtype=float)

    def masses(sorted_vals):
        m = sorted_vals.size
        if kind == "cusp":
            return (m - np.searchsorted(sorted_vals, th, side="left")) / m
        return np.searchsorted(sorted_vals, th, side="right") / m

    def slope(ms):
        ok = ms > 0
        if np.count_nonzero(ok) < 3:
            return np.nan
        return float(np.polyfit(np.log(th[ok]), np.log(ms[ok]), 1)[0])

    base = masses(values)
    s0 = slope(base)
    rng = np.random.Generator(np.random.Philox(key=seed))
    bs = []
    for _ in range(boots):
        res = np.sort(values[rng.integers(0, values.size, values.size)])
        bs.append(slope(masses(res)))
    bs = np.array(bs)
    bs = bs[np.isfinite(bs)]
    if bs.size == 0:
        return ExponentFit(s0, np.nan, np.nan, th, base)
    lo, hi = np.percentile(bs, [2.5, 97.5])
    return ExponentFit(s0, float(lo), float(hi), th, base)


# ----------------------------------------------------------------------------
# class group characters


def class_character_sum(O: oc.OrderRep, character, delta: float = 1.0):
    """Average of a Picard character over invertible ideals of norm <= delta sqrt|D|.

    character: index into picard_group(O).characters(), or a list of
    exponents e_c with psi(c) = exp(2 pi i e_c).
    """
    pic = oc.picard_group(O)
    if isinstance(character, int):
        character = pic.characters()[character]
    bound = max(1, int(math.floor(delta * math.sqrt(abs(O.disc)))))
    total = 0j
    count = 0
    for a in oc.ideals_of_bounded_norm(O, bound):
        if not oc.is_invertible(a, O):
            continue
        e = character[pic.index_of(a)]
        total += complex(math.cos(2 * math.pi * float(e)), math.sin(2 * math.pi * float(e)))
        count += 1
    return total / count


# ----------------------------------------------------------------------------
# families of packets


def invertible_packet(P: oc.MonicIntPoly):
    """The packet of invertible classes of Z[t]/P, identity class first."""
    from .correspondence import PacketRep

    O = oc.order_from_poly(P)
    pic = oc.picard_group(O)
    return PacketRep(O, tuple(pic.classes), abs(O.disc))


def family_polys(family: str, kmin: int, kmax: int, count: int) -> list[oc.MonicIntPoly]:
    """Log-spaced members of x^2 - x - k (quadratic) or x^3 - k x - 1 (cubic)."""
    if family not in ("quadratic", "cubic"):
        raise InputError(f"unknown family {family!r}")
    if not 1 <= kmin <= kmax or count < 1:
        raise InputError("need 1 <= kmin <= kmax and count >= 1")
    ks = sorted({int(round(k)) for k in np.geomspace(kmin, kmax, count)})
    out = []
    for k in ks:
        text = f"x^2 - x - {k}" if family == "quadratic" else f"x^3 - {k}x - 1"
        try:
            out.append(oc.MonicIntPoly.parse(text))
        except InputError:
            continue
    return out


def decile_drop(rows) -> tuple[float, float]:
    """Means of max |deviation| over the first and last disc-deciles of rows."""
    rows = sorted(rows, key=lambda r: r.disc)
    k = max(1, len(rows) // 10)
    first = float(np.mean([r.max_abs_deviation for r in rows[:k]]))
    last = float(np.mean([r.max_abs_deviation for r in rows[-k:]]))
    return first, last
