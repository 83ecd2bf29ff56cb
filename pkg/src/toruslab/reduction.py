"""Twisted embeddings of a lattice in K, unit search and canonical classes.

For a lattice L in K and a log vector t (one entry per archimedean place,
sum_j d_j t_j = 0) the twisted lattice a_t theta(L) scales place j by
e^{t_j}.  Far from t = 0 the float embedding of L's exact basis loses all
precision, so every computation goes through an anchor: an exact lattice
L_i = L / x_i together with the logs l_i = log|sigma(x_i)| and phases, so
that a_t theta(L) = a_{t + l_i} theta(L_i) up to those phases.  Anchors are
created on demand by stepping from the nearest existing one, which keeps
the float bases well conditioned for regulators in the thousands.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import _exact as ex
from . import kernels
from . import order_core as oc
from .embedding import real_embedding
from .errors import ConvergenceError, ResourceCapError

# grid spacing in log space; every element is within h/2 of a grid point
GRID_STEP = 1.0
# anchors serve targets within this sup-distance (condition number <= e^6)
ANCHOR_TOL = 3.0


@dataclass
class Anchor:
    lat: oc.FracIdealRep
    ell: np.ndarray  # log|sigma_j(x)| per place
    phase: tuple  # sigma_j(x) / |sigma_j(x)|
    parent: int  # -1 for the root anchor (x = 1)
    step: tuple | None  # y with x = x_parent * y
    basis: np.ndarray  # Minkowski rows of elems
    elems: list  # exact reduced basis of lat


class Infrastructure:
    """Anchored access to the twisted lattices a_t theta(L)."""

    def __init__(self, L, O: oc.OrderRep | None = None):
        self.L = oc.as_ideal(L)
        self.P = self.L.poly
        self.n = self.P.n
        self.emb = real_embedding(self.P)
        self.O = O if O is not None else oc.multiplier_ring(self.L)
        self.d = np.array(self.emb.degrees, dtype=float)
        self.m = self.emb.places
        r = self.emb.signature[0]
        self._coord_place = list(range(r)) + [j for j in range(r, self.m) for _ in (0, 1)]
        self.anchors: list[Anchor] = []
        self._centered = np.zeros((0, self.m))
        self._x_cache: dict[int, tuple] = {0: oc.one(self.P)}
        self.covolume = math.sqrt(abs(self.P.disc)) * float(self.L.norm)
        self._add(self.L, np.zeros(self.m), (1.0,) * self.m, -1, None)

    # -- anchors -----------------------------------------------------------

    def _add(self, lat, ell, phase, parent, step):
        # reduce the HNF basis so that float coordinates of short vectors
        # do not come from cancelling large terms
        raw = np.array([self.emb.minkowski_hp(b) for b in lat.basis])
        _, u = kernels.lll(raw)
        u = np.rint(u).astype(np.int64)
        elems = [tuple(sum(int(u[k, j]) * lat.basis[j][c] for j in range(self.n)) for c in range(self.n))
                 for k in range(self.n)]
        basis = np.array([self.emb.minkowski_hp(e) for e in elems])
        self.anchors.append(Anchor(lat, ell, phase, parent, step, basis, elems))
        c = ell - float(self.d @ ell) / self.n
        self._centered = np.vstack([self._centered, c])
        return len(self.anchors) - 1

    def coord_scale(self, rel) -> np.ndarray:
        """Per-coordinate factors e^{rel_j} for a per-place log vector."""
        return np.exp(np.asarray(rel)[self._coord_place])

    def full_t(self, u) -> np.ndarray:
        """Complete u (first m-1 places) to a trace-zero log vector."""
        u = list(u)
        last = -sum(self.d[j] * u[j] for j in range(self.m - 1)) / self.d[self.m - 1]
        return np.array(u + [last])

    def nearest(self, t) -> tuple[int, float]:
        dist = np.max(np.abs(self._centered + np.asarray(t)), axis=1)
        i = int(np.argmin(dist))
        return i, float(dist[i])

    def anchor_for(self, t, tol: float = ANCHOR_TOL) -> int:
        t = np.asarray(t, dtype=float)
        i, dist = self.nearest(t)
        guard = 0
        while dist > tol:
            guard += 1
            if guard > 64:
                raise ConvergenceError("anchor walk did not approach target")
            # move at most 4 log units per step to keep the float basis sane
            cur = -self._centered[i]
            gap = t - cur
            span = float(np.max(np.abs(gap)))
            target = cur + gap * min(1.0, 4.0 / span)
            j = self.step(i, target)
            i2, d2 = self.nearest(t)
            if i2 == i and d2 >= dist:
                break
            i, dist = (j, float(np.max(np.abs(self._centered[j] + t)))) if i2 == j else (i2, d2)
        return i

    def twisted(self, i: int, t) -> np.ndarray:
        a = self.anchors[i]
        return a.basis * self.coord_scale(np.asarray(t) + a.ell)

    def element(self, i: int, coeffs) -> tuple:
        """Exact element sum c_k b_k of anchor lattice i."""
        b = self.anchors[i].elems
        n = self.n
        return tuple(sum(int(coeffs[k]) * b[k][j] for k in range(n)) for j in range(n))

    def step(self, i: int, t) -> int:
        """New anchor L_i / y for y shortest in the lattice twisted by t."""
        red, u = kernels.lll(self.twisted(i, t))
        k = int(np.argmin(np.einsum("ij,ij->i", red, red)))
        y = self.element(i, np.rint(u[k]))
        a = self.anchors[i]
        yinv = oc.el_inv(self.P, y)
        lat = oc.FracIdealRep.from_generators(self.P, [oc.el_mul(self.P, b, yinv) for b in a.lat.basis])
        sig = [complex(z) for z in self.emb.sigma_hp(y)]
        ell = a.ell + np.array(self.emb.logs_hp(y))
        phase = tuple(p * (z / abs(z)) for p, z in zip(a.phase, sig))
        return self._add(lat, ell, phase, i, y)

    def x(self, i: int) -> tuple:
        """Exact x_i with L_i = L / x_i."""
        if i not in self._x_cache:
            a = self.anchors[i]
            self._x_cache[i] = oc.el_mul(self.P, self.x(a.parent), a.step)
        return self._x_cache[i]

    # -- queries -----------------------------------------------------------

    def enumerate(self, t, radius: float):
        """Vectors of a_t theta(L) of length <= radius, in anchor coordinates.

        Returns (i, coeffs, sigma) with sigma the untwisted place values of
        each element of L_i (float).
        """
        i = self.anchor_for(t)
        a = self.anchors[i]
        coeffs, _ = kernels.enumerate_ball(self.twisted(i, t), radius)
        return i, coeffs, coeffs @ a.basis

    def float_norms(self, vals) -> np.ndarray:
        """|N(y)| from Minkowski coordinates (rows)."""
        r = self.emb.signature[0]
        out = np.prod(np.abs(vals[:, :r]), axis=1)
        for j in range(r, self.n, 2):
            out = out * (vals[:, j] ** 2 + vals[:, j + 1] ** 2) / 2.0
        return out

    def place_logs(self, vals) -> np.ndarray:
        r = self.emb.signature[0]
        cols = [np.log(np.abs(vals[:, j])) for j in range(r)]
        for j in range(r, self.n, 2):
            cols.append(0.5 * np.log((vals[:, j] ** 2 + vals[:, j + 1] ** 2) / 2.0))
        return np.stack(cols, axis=1)

    def lattice_at(self, t) -> np.ndarray:
        """Row basis of a_t theta(L) scaled to covolume 1 (signs and phases kept)."""
        t = np.asarray(t, dtype=float)
        i = self.anchor_for(t)
        a = self.anchors[i]
        b = self.twisted(i, t)
        r = self.emb.signature[0]
        for j in range(r):
            b[:, j] *= 1.0 if a.phase[j].real > 0 else -1.0
        for k, j in enumerate(range(r, self.n, 2)):
            z = (b[:, j] + 1j * b[:, j + 1]) * a.phase[r + k]
            b[:, j], b[:, j + 1] = z.real, z.imag
        return b / self.covolume ** (1.0 / self.n)


# ----------------------------------------------------------------------------
# unit search


def _torsion(inf: Infrastructure) -> tuple[int, list]:
    n = inf.n
    _, coeffs, vals = inf.enumerate(np.zeros(inf.m), math.sqrt(n) * (1 + 1e-9))
    roots = []
    for c, v in zip(coeffs, vals):
        logs = inf.place_logs(v[None, :])[0]
        if np.max(np.abs(logs)) > 1e-8:
            continue
        y = inf.element(0, c)
        if abs(oc.el_norm(inf.P, y)) == 1:
            roots.append(y)
    return len(roots), roots


def _lattice_basis(vecs, rank):
    """Basis of the Z-span of float vectors known to lie in a rank-k lattice."""
    vecs = sorted(vecs, key=lambda v: (float(np.max(np.abs(v))), tuple(np.round(v, 9))))
    if rank == 1:
        v1 = vecs[0]
        return [v1]
    v1 = vecs[0]
    v2 = None
    for v in vecs[1:]:
        det = v1[0] * v[1] - v1[1] * v[0]
        if abs(det) > 1e-7 * np.linalg.norm(v1) * np.linalg.norm(v):
            v2 = v
            break
    if v2 is None:
        return [v1]
    base = np.array([v1, v2])
    inv = np.linalg.inv(base)
    rows = []
    for v in vecs:
        c = v @ inv
        fr = [Fraction(float(x)).limit_denominator(512) for x in c]
        if max(abs(float(f) - x) for f, x in zip(fr, c)) > 1e-6:
            raise ConvergenceError("unit logs are not commensurable")
        rows.append(fr)
    den, h = ex.rational_hnf(rows)
    hb = np.array([[x / den for x in r] for r in h], dtype=float)
    return list(hb @ base)


@lru_cache(maxsize=1024)
def unit_search_generic(O: oc.OrderRep, max_radius: float = 4000.0, max_points: int = 400_000,
                        h: float = GRID_STEP):
    """Units of O by a verified search over the log space.

    Grid points of spacing h in the first m-1 log coordinates are visited
    in shells of growing sup-norm.  Every unit whose log vector lies within
    sup-distance delta of a grid point has twisted length at most
    sqrt(n) e^delta there, so after shell K all units with |u|_inf <=
    (K + 1/2) h are known.  The search stops once the shortest independent
    units found lie inside that box; their span is then the full unit
    lattice (in dimension <= 2 every coset of the span of the successive
    minima has a representative no longer than the second minimum).
    """
    inf = Infrastructure(O, O)
    n, m = inf.n, inf.m
    w, _ = _torsion(inf)
    rank = m - 1
    if rank == 0:
        return oc.UnitGroupRep(w, (), 1.0, ())
    d = inf.d
    delta = 0.5 * h * max(1.0, (n - d[m - 1]) / d[m - 1])
    radius = math.sqrt(n) * math.exp(delta) * (1 + 1e-9)
    found: dict[tuple, tuple] = {}
    visited = 0
    K = 0
    while True:
        for p in itertools.product(range(-K, K + 1), repeat=rank):
            if max(abs(c) for c in p) != K:
                continue
            visited += 1
            if visited > max_points:
                raise ResourceCapError("unit search exceeded its grid budget")
            t = inf.full_t([c * h for c in p])
            i, coeffs, vals = inf.enumerate(t, radius)
            if not len(coeffs):
                continue
            nf = inf.float_norms(vals) / float(inf.anchors[i].lat.norm / O.norm)
            logs = inf.place_logs(vals)
            for c, nv, lg in zip(coeffs, nf, logs):
                if abs(nv - 1.0) > 1e-6:
                    continue
                full = inf.anchors[i].ell + lg
                if np.max(np.abs(full)) < 1e-8:
                    continue
                key = tuple(np.round(full[:rank], 6))
                if key in found:
                    continue
                y = inf.element(i, c)
                if abs(oc.el_norm(inf.P, y)) * O.norm != inf.anchors[i].lat.norm:
                    continue
                found[key] = (full, i, y)
        rho = (K + 0.5) * h
        inside = [v[0][:rank] for v in found.values() if np.max(np.abs(v[0][:rank])) <= rho + 1e-9]
        if inside:
            basis = _lattice_basis(inside, rank)
            if len(basis) == rank and max(float(np.max(np.abs(b))) for b in basis) <= rho:
                break
        if rho > max_radius:
            raise ConvergenceError("unit search radius exhausted before full rank")
        K += 1
    # represent the basis by actual units (the HNF step may combine them)
    units = []
    logs = []
    for b in basis:
        hit = min(found.values(), key=lambda v: float(np.max(np.abs(v[0][:rank] - b))))
        if float(np.max(np.abs(hit[0][:rank] - b))) < 1e-6:
            full, i, y = hit
            units.append(oc.el_mul(inf.P, inf.x(i), y))
            logs.append(full)
        else:
            units = None
            full = np.append(b, -float(d[:rank] @ b) / d[rank])
            logs.append(full)
    reg = abs(float(np.linalg.det(np.array([lg[:rank] for lg in logs]) * d[:rank])))
    weighted = tuple(tuple(float(x) for x in lg * d) for lg in logs)
    return oc.UnitGroupRep(w, weighted, reg, tuple(units) if units is not None else None)


def unit_search(O: oc.OrderRep, max_radius: float = 4000.0):
    if O.poly.n == 2:
        from . import quadratic

        return quadratic.unit_group(O)
    return unit_search_generic(O, max_radius=max_radius)


# ----------------------------------------------------------------------------
# canonical classes


def fundamental_grid(logs, d, h: float = GRID_STEP):
    """Cell centres covering a fundamental domain of the unit log lattice.

    logs are unweighted per-place log vectors.  Every point of the domain
    is within sup-distance h/2 of a returned point.
    """
    rank = len(logs)
    m = len(d)
    if rank == 0:
        return [np.zeros(m)], 0.0
    vs = [np.asarray(v, dtype=float) for v in logs]
    if rank == 2:
        vs = _gauss_reduce(vs)
    counts = [max(1, math.ceil(rank * float(np.max(np.abs(v))) / h)) for v in vs]
    pts = []
    for idx in itertools.product(*[range(c) for c in counts]):
        p = sum(((k + 0.5) / c) * v for k, c, v in zip(idx, counts, vs))
        pts.append(np.asarray(p))
    return pts, h / 2


def _gauss_reduce(vs):
    a, b = vs
    while True:
        if a @ a > b @ b:
            a, b = b, a
        mu = round(float(a @ b) / float(a @ a))
        if mu == 0:
            return [a, b]
        b = b - mu * a


@lru_cache(maxsize=65536)
def canonical_class_generic(L: oc.FracIdealRep, h: float = GRID_STEP):
    """Canonical representative of the homothety class of L.

    Among the elements x of L with minimal |N(x)|, the lattices L / x form
    a finite set (units act trivially on it) that depends only on the
    class; its least member in HNF order is returned with its x.
    """
    L = oc.as_ideal(L)
    O = oc.multiplier_ring(L)
    units = unit_search_generic(O)
    inf = Infrastructure(L, O)
    d = inf.d
    logs = [np.array(w) / d for w in units.fundamental_logs]
    grid, delta = fundamental_grid(logs, d, h)
    n = inf.n
    scale = float(L.norm / O.norm)
    best = None
    cands: dict = {}
    for g in grid:
        i = inf.anchor_for(g)
        a = inf.anchors[i]
        if best is None:
            red, u = kernels.lll(inf.twisted(i, g))
            k = int(np.argmin(np.einsum("ij,ij->i", red, red)))
            y = inf.element(i, np.rint(u[k]))
            best = int(abs(oc.el_norm(inf.P, y)) * O.norm / a.lat.norm)
        radius = math.sqrt(n) * (best * scale) ** (1.0 / n) * math.exp(delta) * (1 + 1e-9)
        coeffs, _ = kernels.enumerate_ball(inf.twisted(i, g), radius)
        if not len(coeffs):
            continue
        vals = coeffs @ a.basis
        nu = inf.float_norms(vals) * float(O.norm / a.lat.norm)
        for c, v in zip(coeffs, nu):
            if v > best + 0.5:
                continue
            y = inf.element(i, c)
            exact = abs(oc.el_norm(inf.P, y)) * O.norm / a.lat.norm
            assert exact.denominator == 1
            exact = int(exact)
            if exact < best:
                best = exact
                cands = {}
            if exact == best:
                yinv = oc.el_inv(inf.P, y)
                q = oc.FracIdealRep.from_generators(inf.P, [oc.el_mul(inf.P, b, yinv) for b in a.lat.basis])
                if q.key not in cands:
                    cands[q.key] = (q, i, y)
    key = min(cands)
    q, i, y = cands[key]
    return q, oc.el_mul(inf.P, inf.x(i), y)


@lru_cache(maxsize=65536)
def _canonical_cached(L: oc.FracIdealRep):
    if L.poly.n == 2:
        from . import quadratic

        return quadratic.canonical_class(L)
    return canonical_class_generic(L)


def canonical_class(L):
    """(C, x): canonical lattice C of the class of L and x with L = x C."""
    return _canonical_cached(oc.as_ideal(L))


def min_norm_elements(L, bound: int):
    """Elements x of L with [L : x O_L] <= bound, one per unit orbit.

    Two elements lie in one orbit exactly when L / x coincide.  Returns a
    list of (index, x) sorted by index and then by the HNF of L / x.
    """
    L = oc.as_ideal(L)
    O = oc.multiplier_ring(L)
    units = unit_search_generic(O)
    inf = Infrastructure(L, O)
    logs = [np.array(w) / inf.d for w in units.fundamental_logs]
    grid, delta = fundamental_grid(logs, inf.d)
    n = inf.n
    scale = float(L.norm / O.norm)
    radius = math.sqrt(n) * (bound * scale) ** (1.0 / n) * math.exp(delta) * (1 + 1e-9)
    # with a real place, an element of absolute value 1 everywhere is +-1, so
    # y and y' share a unit orbit exactly when their log vectors agree
    # modulo the unit log lattice; that test is cheap and avoids the exact
    # quotient for the many repeated hits of neighbouring grid points
    by_logs = inf.emb.signature[0] > 0 and logs
    if by_logs:
        U = np.array([w[:len(logs)] for w in logs]) if len(logs) else None
        Uinv = np.linalg.inv(U)
    seen: dict[int, list] = {}
    out = {}
    for g in grid:
        i, coeffs, vals = inf.enumerate(g, radius)
        if not len(coeffs):
            continue
        a = inf.anchors[i]
        nu = inf.float_norms(vals) * float(O.norm / a.lat.norm)
        full = inf.place_logs(vals) + a.ell if by_logs else None
        for k, (c, v) in enumerate(zip(coeffs, nu)):
            if v > bound + 0.5:
                continue
            if by_logs:
                fr = full[k][:len(logs)] @ Uinv
                fr = fr - np.floor(fr)
                bucket = seen.setdefault(int(round(v)), [])
                if any(np.max(np.abs((fr - f + 0.5) % 1.0 - 0.5)) < 1e-6 for f in bucket):
                    continue
                bucket.append(fr)
            y = inf.element(i, c)
            exact = abs(oc.el_norm(inf.P, y)) * O.norm / a.lat.norm
            if exact > bound:
                continue
            yinv = oc.el_inv(inf.P, y)
            q = oc.FracIdealRep.from_generators(inf.P, [oc.el_mul(inf.P, b, yinv) for b in a.lat.basis])
            if q.key not in out:
                out[q.key] = (int(exact), i, y)
    inf_x = inf.x
    return [(nu, oc.el_mul(inf.P, inf_x(i), y)) for key, (nu, i, y) in sorted(out.items(), key=lambda kv: (kv[1][0], kv[0]))]
