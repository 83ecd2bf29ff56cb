# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the numeric kernels in ``_kernels_py``."""

import math

import numpy as np
cimport numpy as cnp
from libc.math cimport ceil, floor, sqrt, exp, fabs, round as cround
from libc.stdlib cimport malloc, realloc, free

cnp.import_array()

from ._kernels_py import GAUSS_CUT, suite_radius, _pairwise_sum

BACKEND = "cython"


cdef void _gso(double[:, ::1] b, double[:, ::1] bstar, double[:, ::1] mu,
               double[::1] bb, int n, int dim) noexcept nogil:
    cdef int i, j, k
    cdef double s
    for i in range(n):
        for k in range(dim):
            bstar[i, k] = b[i, k]
        for j in range(i):
            s = 0.0
            for k in range(dim):
                s += b[i, k] * bstar[j, k]
            mu[i, j] = s / bb[j]
            for k in range(dim):
                bstar[i, k] -= mu[i, j] * bstar[j, k]
        s = 0.0
        for k in range(dim):
            s += bstar[i, k] * bstar[i, k]
        bb[i] = s


def lll(basis, double delta=0.99):
    """LLL-reduce a float row basis; returns (reduced, transform)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] barr = np.array(basis, dtype=np.float64, order="C")
    cdef int n = barr.shape[0]
    cdef int dim = barr.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] uarr = np.eye(n)
    cdef double[:, ::1] b = barr
    cdef double[:, ::1] u = uarr
    cdef double[:, ::1] bstar = np.zeros((n, dim))
    cdef double[:, ::1] mu = np.zeros((n, n))
    cdef double[::1] bb = np.zeros(n)
    cdef int k = 1, j, l, guard = 0
    cdef double q, tmp
    with nogil:
        _gso(b, bstar, mu, bb, n, dim)
        while k < n:
            guard += 1
            if guard > 10000:
                break
            for j in range(k - 1, -1, -1):
                q = cround(mu[k, j])
                if q != 0.0:
                    for l in range(dim):
                        b[k, l] -= q * b[j, l]
                    for l in range(n):
                        u[k, l] -= q * u[j, l]
                    for l in range(j):
                        mu[k, l] -= q * mu[j, l]
                    mu[k, j] -= q
            if bb[k] >= (delta - mu[k, k - 1] * mu[k, k - 1]) * bb[k - 1]:
                k += 1
            else:
                for l in range(dim):
                    tmp = b[k, l]; b[k, l] = b[k - 1, l]; b[k - 1, l] = tmp
                for l in range(n):
                    tmp = u[k, l]; u[k, l] = u[k - 1, l]; u[k - 1, l] = tmp
                _gso(b, bstar, mu, bb, n, dim)
                k = k - 1 if k > 1 else 1
    return barr, uarr


cdef struct PointBuf:
    double *data
    Py_ssize_t count
    Py_ssize_t cap
    int n


cdef int _push(PointBuf *buf, long *x) noexcept nogil:
    cdef Py_ssize_t i
    cdef double *nd
    if buf.count == buf.cap:
        buf.cap = buf.cap * 2 if buf.cap else 1024
        nd = <double *> realloc(buf.data, buf.cap * buf.n * sizeof(double))
        if nd == NULL:
            return -1
        buf.data = nd
    for i in range(buf.n):
        buf.data[buf.count * buf.n + i] = <double> x[i]
    buf.count += 1
    return 0


cdef int _fincke_pohst(double[:, ::1] q, int n, double r2, PointBuf *buf) noexcept nogil:
    """Iterative enumeration of x != 0 with sum_i q_ii (x_i + sum_j q_ij x_j)^2 <= r2."""
    cdef long x[16]
    cdef long hi[16]
    cdef double center[16]
    cdef double rem[17]
    cdef int i, j, nz
    cdef double c, span, used
    rem[n] = r2
    for i in range(n):
        x[i] = 0
    i = n - 1
    # set up level i
    c = 0.0
    center[i] = c
    span = sqrt(rem[i + 1] / q[i, i]) if rem[i + 1] > 0 else 0.0
    x[i] = <long> ceil(c - span - 1e-12)
    hi[i] = <long> floor(c + span + 1e-12)
    while True:
        if x[i] > hi[i]:
            x[i] = 0
            i += 1
            if i >= n:
                break
            x[i] += 1
            continue
        used = q[i, i] * (x[i] - center[i]) * (x[i] - center[i])
        rem[i] = rem[i + 1] - used
        if rem[i] < -1e-12 * r2:
            x[i] += 1
            continue
        if i == 0:
            nz = 0
            for j in range(n):
                if x[j] != 0:
                    nz = 1
                    break
            if nz:
                if _push(buf, x) < 0:
                    return -1
            x[i] += 1
            continue
        i -= 1
        c = 0.0
        for j in range(i + 1, n):
            c -= q[i, j] * x[j]
        center[i] = c
        span = sqrt(rem[i + 1] / q[i, i]) if rem[i + 1] > 0 else 0.0
        x[i] = <long> ceil(c - span - 1e-12)
        hi[i] = <long> floor(c + span + 1e-12)
    return 0


cdef cnp.ndarray _quad_form(cnp.ndarray red):
    cdef int n = red.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] a = red @ red.T
    cdef cnp.ndarray[cnp.float64_t, ndim=2] q = np.zeros((n, n))
    cdef int i, j, l
    for i in range(n):
        q[i, i] = a[i, i]
        for j in range(i + 1, n):
            q[i, j] = a[i, j] / a[i, i]
        for j in range(i + 1, n):
            for l in range(j, n):
                a[j, l] -= q[i, j] * q[i, l] * q[i, i]
    return q


def _fp_points(red, double radius):
    red = np.ascontiguousarray(red, dtype=np.float64)
    cdef int n = red.shape[0]
    if n > 16:
        raise ValueError("dimension above 16")
    cdef double[:, ::1] q = _quad_form(red)
    cdef PointBuf buf
    buf.data = NULL
    buf.count = 0
    buf.cap = 0
    buf.n = n
    cdef double r2 = radius * radius * (1 + 1e-12)
    cdef int rc
    with nogil:
        rc = _fincke_pohst(q, n, r2, &buf)
    try:
        if rc < 0:
            raise MemoryError("enumeration buffer")
        out = np.empty((buf.count, n), dtype=np.float64)
        if buf.count:
            out[:] = np.asarray(<double[:buf.count * n]> buf.data).reshape(buf.count, n)
        return out
    finally:
        free(buf.data)


def enumerate_ball(basis, radius):
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


def siegel_suite(bases, sigmas, centers, eps):
    bases = np.asarray(bases, dtype=np.float64)
    sigmas = np.asarray(sigmas, dtype=np.float64).reshape(-1)
    eps = np.asarray(eps, dtype=np.float64).reshape(-1)
    if eps.size:
        centers = np.asarray(centers, dtype=np.float64).reshape(eps.size, -1)
    else:
        centers = np.zeros((0, bases.shape[2]))
    cdef int ns = sigmas.size, nb = eps.size
    out = np.zeros((bases.shape[0], ns + nb))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] pts
    cdef Py_ssize_t m, a
    cdef int i, k, dim, dd_i
    cdef double r2, s2, d2, dd, uu, e
    cdef double[::1] vals
    cdef double[::1] c
    cdef double[:, ::1] cen = np.ascontiguousarray(centers)
    for k in range(bases.shape[0]):
        red, _ = lll(bases[k])
        lam = math.sqrt(min(v @ v for v in red))
        rad = suite_radius(lam, sigmas, centers, eps)
        pts = np.ascontiguousarray(_fp_points(red, rad) @ red)
        m = pts.shape[0]
        dim = pts.shape[1]
        vals = np.empty(m)
        for i in range(ns):
            s2 = sigmas[i] * sigmas[i]
            for a in range(m):
                r2 = 0.0
                for dd_i in range(dim):
                    r2 += pts[a, dd_i] * pts[a, dd_i]
                vals[a] = exp(-math.pi * r2 / s2)
            out[k, i] = _pairwise_sum(np.asarray(vals))
        for i in range(nb):
            e = eps[i]
            c = cen[i]
            for a in range(m):
                d2 = 0.0
                for dd_i in range(dim):
                    dd = pts[a, dd_i] - c[dd_i]
                    d2 += dd * dd
                uu = (sqrt(d2) - e) / e
                if uu < 0.0:
                    uu = 0.0
                elif uu > 1.0:
                    uu = 1.0
                vals[a] = 1.0 - uu * uu * uu * (10.0 - 15.0 * uu + 6.0 * uu * uu)
            out[k, ns + i] = _pairwise_sum(np.asarray(vals))
    return out


def charpoly3_matrices(long c2, long c1, long c0, long height):
    """All 3x3 integer matrices with entries in [-height, height] and the
    given characteristic polynomial, rows flattened, sorted and unique."""
    cdef long h = height
    cdef long a, b, c, d, e, f, g, hh, i
    cdef long r1, p, q, r2, det, gn, hn
    rows = []
    for a in range(-h, h + 1):
        for e in range(-h, h + 1):
            i = -c2 - a - e
            if i < -h or i > h:
                continue
            for b in range(-h, h + 1):
                for d in range(-h, h + 1):
                    r1 = c1 - (a * e - b * d) - a * i - e * i
                    r2 = -c0 - i * (a * e - b * d)
                    for c in range(-h, h + 1):
                        for f in range(-h, h + 1):
                            p = b * f - c * e
                            q = -(a * f - c * d)
                            det = (-c) * q - (-f) * p
                            if det != 0:
                                gn = r1 * q - (-f) * r2
                                hn = (-c) * r2 - r1 * p
                                if gn % det != 0 or hn % det != 0:
                                    continue
                                g = gn // det
                                hh = hn // det
                                if g < -h or g > h or hh < -h or hh > h:
                                    continue
                                rows.append((a, b, c, d, e, f, g, hh, i))
                            else:
                                for g in range(-h, h + 1):
                                    for hh in range(-h, h + 1):
                                        if (-c) * g + (-f) * hh == r1 and g * p + hh * q == r2:
                                            rows.append((a, b, c, d, e, f, g, hh, i))
    if not rows:
        return np.zeros((0, 9), dtype=np.int64)
    return np.unique(np.array(rows, dtype=np.int64), axis=0)
