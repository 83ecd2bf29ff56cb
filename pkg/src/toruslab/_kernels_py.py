"""Reference numeric kernels in numpy.

These are the slow, readable versions of the routines in ``_ckernels.pyx``;
both expose the same function names and signatures.  All lattices are
given by float64 row bases of shape (n, n) or batches (N, n, n).
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "python"

# Gaussian tails are dropped beyond exp(-GAUSS_CUT); e^-45 ~ 3e-20.
GAUSS_CUT = 45.0


def lll(basis, delta=0.99):
    """LLL-reduce a float row basis.

    Returns (reduced, transform) with reduced = transform @ basis and
    transform an integer unimodular matrix (float64 holding integers).
    """
    b = np.array(basis, dtype=np.float64)
    n = b.shape[0]
    u = np.eye(n)
    bstar = np.zeros_like(b)
    mu = np.zeros((n, n))
    bb = np.zeros(n)

    def gso():
        for i in range(n):
            v = b[i].copy()
            for j in range(i):
                mu[i, j] = b[i] @ bstar[j] / bb[j]
                v -= mu[i, j] * bstar[j]
            bstar[i] = v
            bb[i] = v @ v

    gso()
    k = 1
    guard = 0
    while k < n:
        guard += 1
        if guard > 10000:
            break
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q:
                b[k] -= q * b[j]
                u[k] -= q * u[j]
                mu[k, :j + 1] -= q * np.append(mu[j, :j], 1.0)
        if bb[k] >= (delta - mu[k, k - 1] ** 2) * bb[k - 1]:
            k += 1
        else:
            b[[k - 1, k]] = b[[k, k - 1]]
            u[[k - 1, k]] = u[[k, k - 1]]
            gso()
            k = max(k - 1, 1)
    return b, u


def _fp_points(b, radius):
    """Integer coefficient vectors c != 0 with |c @ b| <= radius (b reduced)."""
    n = b.shape[0]
    g = b @ b.T
    # Cholesky-style decomposition of the quadratic form.
    q = np.zeros((n, n))
    a = g.copy()
    for i in range(n):
        q[i, i] = a[i, i]
        for j in range(i + 1, n):
            q[i, j] = a[i, j] / a[i, i]
        for j in range(i + 1, n):
            for l in range(j, n):
                a[j, l] -= q[i, j] * q[i, l] * q[i, i]
    r2 = radius * radius * (1 + 1e-12)
    out = []
    x = [0] * n
    center = [0.0] * n
    rem = [0.0] * (n + 1)
    rem[n] = r2

    def rec(i):
        c = -sum(q[i, j] * x[j] for j in range(i + 1, n))
        center[i] = c
        span = math.sqrt(max(rem[i + 1], 0.0) / q[i, i])
        lo = math.ceil(c - span - 1e-12)
        hi = math.floor(c + span + 1e-12)
        for xi in range(lo, hi + 1):
            x[i] = xi
            used = q[i, i] * (xi - c) ** 2
            left = rem[i + 1] - used
            if left < -1e-12 * r2:
                continue
            rem[i] = left
            if i == 0:
                if any(x):
                    out.append(list(x))
            else:
                rec(i - 1)
        x[i] = 0

    rec(n - 1)
    return np.array(out, dtype=np.float64).reshape(-1, n)


def enumerate_ball(basis, radius):
    """All nonzero lattice vectors of length <= radius.

    Returns (coeffs, vectors): integer coefficients with respect to the
    input basis and the vectors themselves.
    """
    b = np.asarray(basis, dtype=np.float64)
    red, u = lll(b)
    c = _fp_points(red, radius)
    coeffs = np.rint(c @ u)
    vecs = coeffs @ b
    keep = np.einsum("ij,ij->i", vecs, vecs) <= radius * radius * (1 + 1e-9)
    return coeffs[keep], vecs[keep]


def shortest_length(basis):
    red, _ = lll(basis)
    r = math.sqrt(min(v @ v for v in red))
    pts = _fp_points(red, r)
    vecs = pts @ red
    return float(np.sqrt(np.min(np.einsum("ij,ij->i", vecs, vecs))))


def shortest_lengths(bases):
    bases = np.asarray(bases, dtype=np.float64)
    return np.array([shortest_length(b) for b in bases])


def _bump_profile(r, eps):
    u = np.clip((r - eps) / eps, 0.0, 1.0)
    return 1.0 - u ** 3 * (10.0 - 15.0 * u + 6.0 * u * u)


def suite_radius(lambda1, sigmas, centers, eps):
    """Enumeration radius covering every function of a test suite."""
    r = 0.0
    for s in sigmas:
        r = max(r, math.sqrt(lambda1 ** 2 + GAUSS_CUT * s * s / math.pi))
    for c, e in zip(centers, eps):
        r = max(r, float(np.linalg.norm(c)) + 2.0 * e)
    return r


def siegel_suite(bases, sigmas, centers, eps):
    """Siegel transforms of a suite of test functions on a batch of lattices.

    sigmas: gaussian scales (f = exp(-pi |x|^2 / s^2)); centers/eps: smooth
    bumps equal to 1 on B(c, e) and supported in B(c, 2e).  Returns an array
    of shape (N, len(sigmas) + len(centers)).
    """
    bases = np.asarray(bases, dtype=np.float64)
    sigmas = np.asarray(sigmas, dtype=np.float64).reshape(-1)
    centers = np.asarray(centers, dtype=np.float64).reshape(len(eps), -1) if len(eps) else np.zeros((0, bases.shape[-1]))
    eps = np.asarray(eps, dtype=np.float64).reshape(-1)
    out = np.zeros((bases.shape[0], sigmas.size + eps.size))
    for k, b in enumerate(bases):
        red, _ = lll(b)
        lam = math.sqrt(min(v @ v for v in red))
        rad = suite_radius(lam, sigmas, centers, eps)
        pts = _fp_points(red, rad) @ red
        r2 = np.einsum("ij,ij->i", pts, pts)
        for i, s in enumerate(sigmas):
            out[k, i] = _pairwise_sum(np.exp(-math.pi * r2 / (s * s)))
        for i, (c, e) in enumerate(zip(centers, eps)):
            d = np.sqrt(np.einsum("ij,ij->i", pts - c, pts - c))
            out[k, sigmas.size + i] = _pairwise_sum(_bump_profile(d, e))
    return out


def _pairwise_sum(x):
    """Sum with a fixed fan-in-2 tree in index order."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        return 0.0
    while x.size > 1:
        if x.size % 2:
            x = np.append(x, 0.0)
        x = x[0::2] + x[1::2]
    return float(x[0])


def charpoly3_matrices(c2, c1, c0, height):
    """All 3x3 integer matrices with entries in [-height, height] whose
    characteristic polynomial is X^3 + c2 X^2 + c1 X + c0.

    Rows are returned flattened (a, b, c, d, e, f, g, h, i).
    """
    h = int(height)
    rng = np.arange(-h, h + 1, dtype=np.int64)
    c, d, e, f = (z.ravel() for z in np.meshgrid(rng, rng, rng, rng, indexing="ij"))
    found = []
    for a0 in rng:
        for b0 in rng:
            a = np.full_like(c, a0)
            b = np.full_like(c, b0)
            found.extend(_charpoly3_block(a, b, c, d, e, f, c2, c1, c0, h, rng))
    if not found:
        return np.zeros((0, 9), dtype=np.int64)
    return np.unique(np.concatenate(found).astype(np.int64), axis=0)


def _charpoly3_block(a, b, c, d, e, f, c2, c1, c0, h, rng):
    i = -c2 - a - e
    ok = np.abs(i) <= h
    a, b, c, d, e, f, i = (z[ok] for z in (a, b, c, d, e, f, i))
    # sum of principal 2x2 minors = c1:  -c g - f h = c1 - (ae - bd) - ai - ei
    r1 = c1 - (a * e - b * d) - a * i - e * i
    # det = -c0:  g (bf - ce) - h (af - cd) = -c0 - i (ae - bd)
    p = b * f - c * e
    q = -(a * f - c * d)
    r2 = -c0 - i * (a * e - b * d)
    det = (-c) * q - (-f) * p
    found = []
    nz = det != 0
    if np.any(nz):
        safe = np.where(nz, det, 1)
        gn = r1 * q - (-f) * r2
        hn = (-c) * r2 - r1 * p
        sel = nz & (gn % safe == 0) & (hn % safe == 0)
        g = gn[sel] // det[sel]
        hh = hn[sel] // det[sel]
        good = (np.abs(g) <= h) & (np.abs(hh) <= h)
        cols = [z[sel][good] for z in (a, b, c, d, e, f)]
        found.append(np.stack(cols + [g[good], hh[good], i[sel][good]], axis=1))
    zs = ~nz
    if np.any(zs):
        za, zb, zc, zd, ze, zf, zi = (z[zs] for z in (a, b, c, d, e, f, i))
        zr1, zp, zq, zr2 = r1[zs], p[zs], q[zs], r2[zs]
        for g in rng:
            for hh in rng:
                m = ((-zc) * g + (-zf) * hh == zr1) & (g * zp + hh * zq == zr2)
                if np.any(m):
                    k = int(m.sum())
                    found.append(np.stack([za[m], zb[m], zc[m], zd[m], ze[m], zf[m],
                                           np.full(k, g), np.full(k, hh), zi[m]], axis=1))
    return found
