"""Integer matrices with a fixed characteristic polynomial and lattices in K.

A matrix M with char poly P turns Z^n into a module over O_P = Z[t]/P, and
that module is a lattice in K determined up to scaling.  Going one way we
read the lattice off an eigenvector of M over K (a column of the adjugate
of tI - M); going back we write multiplication by t in a Z-basis.
GL_n(Z)-conjugacy of matrices becomes homothety of lattices.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import _exact as ex
from . import kernels
from . import order_core as oc
from .errors import InputError, ResourceCapError


def _to_rows(M):
    return tuple(tuple(int(x) for x in r) for r in M)


def charpoly_coeffs(M) -> tuple[int, ...]:
    """(a_0, .., a_{n-1}) of det(XI - M)."""
    n = len(M)
    if n == 2:
        (a, b), (c, d) = M
        return (a * d - b * c, -(a + d))
    if n == 3:
        tr = M[0][0] + M[1][1] + M[2][2]
        m2 = sum(M[i][i] * M[j][j] - M[i][j] * M[j][i] for i, j in ((0, 1), (0, 2), (1, 2)))
        return (-int(ex.mat_det(M)), m2, -tr)
    raise InputError(f"matrix size {n} not supported")


@dataclass(frozen=True)
class IntMatrixRep:
    M: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "M", _to_rows(self.M))
        n = len(self.M)
        if any(len(r) != n for r in self.M):
            raise InputError("matrix must be square")

    @property
    def n(self) -> int:
        return len(self.M)

    @cached_property
    def charpoly(self) -> oc.MonicIntPoly:
        return oc.MonicIntPoly(charpoly_coeffs(self.M))

    def to_json(self):
        return [[str(x) for x in r] for r in self.M]

    @classmethod
    def from_json(cls, obj):
        return cls(tuple(tuple(int(x) for x in r) for r in obj))

    @classmethod
    def parse(cls, text: str) -> "IntMatrixRep":
        """Rows separated by ';', entries by ',' e.g. "1,2;-3,-1"."""
        try:
            rows = [[int(x) for x in r.split(",")] for r in text.strip().split(";")]
        except ValueError as exc:
            raise InputError(f"cannot parse matrix {text!r}") from exc
        return cls(rows)

    def flat(self) -> tuple[int, ...]:
        return tuple(x for r in self.M for x in r)


def companion(P: oc.MonicIntPoly) -> IntMatrixRep:
    """Matrix of t on the power basis: row i holds the coordinates of t^i * t."""
    n = P.n
    rows = []
    for i in range(n - 1):
        rows.append(tuple(int(j == i + 1) for j in range(n)))
    rows.append(tuple(-c for c in P.coeffs))
    return IntMatrixRep(rows)


# ----------------------------------------------------------------------------
# matrix <-> lattice


def _pmul(f, g):
    out = [0] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        for j, b in enumerate(g):
            out[i + j] += a * b
    return out


def _padd(f, g, s=1):
    m = max(len(f), len(g))
    return [(f[i] if i < len(f) else 0) + s * (g[i] if i < len(g) else 0) for i in range(m)]


def _pdet(A):
    """Determinant of a matrix of polynomials (coefficient lists)."""
    n = len(A)
    if n == 1:
        return A[0][0]
    if n == 2:
        return _padd(_pmul(A[0][0], A[1][1]), _pmul(A[0][1], A[1][0]), -1)
    out = [0]
    for j in range(n):
        minor = [[A[i][k] for k in range(n) if k != j] for i in range(1, n)]
        term = _pmul(A[0][j], _pdet(minor))
        out = _padd(out, term, -1 if j % 2 else 1)
    return out


def eigen_elements(M) -> list[tuple]:
    """v in K^n with t v = M v: the first column of adj(tI - M)."""
    M = _to_rows(M.M if isinstance(M, IntMatrixRep) else M)
    n = len(M)
    A = [[([-M[i][j], 1] if i == j else [-M[i][j]]) for j in range(n)] for i in range(n)]
    v = []
    for i in range(n):
        # adj(A)[i][0] = (-1)^i det(A without row 0 and column i)
        minor = [[A[r][c] for c in range(n) if c != i] for r in range(1, n)]
        f = _pdet(minor)
        if i % 2:
            f = [-c for c in f]
        f = f + [0] * (n - len(f))
        v.append(tuple(Fraction(c) for c in f[:n]))
    return v


def matrix_lattice(M) -> oc.FracIdealRep:
    M = M if isinstance(M, IntMatrixRep) else IntMatrixRep(M)
    return oc.FracIdealRep.from_generators(M.charpoly, eigen_elements(M))


def matrix_to_class(M, P: oc.MonicIntPoly | None = None) -> oc.IdealClassRep:
    """Coarse ideal class of the O_P-module Z^n with t acting by M."""
    M = M if isinstance(M, IntMatrixRep) else IntMatrixRep(M)
    if P is not None and M.charpoly != P:
        raise InputError(f"matrix has char poly {M.charpoly}, expected {P}")
    return oc.IdealClassRep.of(matrix_lattice(M))


def lattice_to_matrix(L) -> IntMatrixRep:
    """Matrix of multiplication by t in the HNF basis of L."""
    P = L.poly
    n = P.n
    T = oc.mult_matrix(P, tuple(Fraction(int(i == 1)) for i in range(n)))
    B = L.basis
    M = ex.mat_mul(ex.mat_mul(B, T), L.basis_inv)
    out = []
    for r in M:
        if any(Fraction(x).denominator != 1 for x in r):
            raise InputError("lattice is not stable under t")
        out.append(tuple(int(x) for x in r))
    return IntMatrixRep(out)


def class_to_matrix(C: oc.IdealClassRep) -> IntMatrixRep:
    return lattice_to_matrix(C.representative)


def conjugator(M1, M2):
    """gamma in GL_n(Z) with gamma M1 gamma^-1 = M2, or None."""
    M1 = M1 if isinstance(M1, IntMatrixRep) else IntMatrixRep(M1)
    M2 = M2 if isinstance(M2, IntMatrixRep) else IntMatrixRep(M2)
    if M1.charpoly != M2.charpoly:
        return None
    P = M1.charpoly
    v, w = eigen_elements(M1), eigen_elements(M2)
    L1 = oc.FracIdealRep.from_generators(P, v)
    L2 = oc.FracIdealRep.from_generators(P, w)
    ok, lam = oc.is_homothetic(L1, L2)
    if not ok:
        return None
    # lam w_i = sum_j g_ij v_j
    lw = [oc.el_mul(P, wi, lam) for wi in w]
    g = ex.mat_mul(lw, ex.mat_inv(v))
    if any(Fraction(x).denominator != 1 for r in g for x in r):
        return None
    g = tuple(tuple(int(x) for x in r) for r in g)
    if abs(ex.mat_det(g)) != 1:
        return None
    lhs = ex.mat_mul(g, M1.M)
    rhs = ex.mat_mul(M2.M, g)
    if [list(r) for r in lhs] != [list(r) for r in rhs]:
        return None
    return g


# ----------------------------------------------------------------------------
# coarse classes


@dataclass(frozen=True)
class PacketRep:
    order: oc.OrderRep
    classes: tuple  # IdealClassRep, sorted
    discriminant: int

    @property
    def size(self) -> int:
        return len(self.classes)


def _window_hnfs(n: int, f: int):
    """Integer lower-triangular HNFs H with f Z^n inside the row span."""
    divs = [d for d in range(1, f + 1) if f % d == 0]
    for diag in itertools.product(divs, repeat=n):
        ranges = []
        for i in range(n):
            for j in range(i):
                ranges.append(range(diag[j]))
        for off in itertools.product(*ranges):
            H = [[0] * n for _ in range(n)]
            k = 0
            for i in range(n):
                H[i][i] = diag[i]
                for j in range(i):
                    H[i][j] = off[k]
                    k += 1
            yield H


def _stable_sublattices(A, T, f):
    """Sublattices fZ^n <= L <= Z^n (row coordinates) stable under T."""
    n = len(T)
    for H in _window_hnfs(n, f):
        Hi = ex.mat_inv(H)
        if any((f * x).denominator != 1 for r in Hi for x in r):
            continue
        HT = ex.mat_mul(ex.mat_mul(H, T), Hi)
        if any(Fraction(x).denominator != 1 for r in HT for x in r):
            continue
        yield ex.mat_mul(H, A)


def candidate_lattices(P: oc.MonicIntPoly, cap: int = 100_000):
    """O_P-stable lattices f a <= L <= a over representatives a of Pic(O_K)."""
    OK = oc.maximal_order(P)
    f = OK.index
    pic = oc.picard_group(OK)
    t = tuple(Fraction(int(i == 1)) for i in range(P.n))
    Tt = oc.mult_matrix(P, t)
    out = []
    for cls in pic.classes:
        a = cls.representative
        A = a.basis
        T = ex.mat_mul(ex.mat_mul(A, Tt), a.basis_inv)
        for rows in _stable_sublattices(A, T, f):
            out.append(oc.FracIdealRep.from_generators(P, rows))
            if len(out) > cap:
                raise ResourceCapError("coarse class window exceeds cap")
    return out


def enumerate_coarse_classes(P: oc.MonicIntPoly, cap: int = 100_000) -> list[PacketRep]:
    """All coarse ideal classes of O_P grouped into packets."""
    seen = {}
    for L in candidate_lattices(P, cap):
        C = oc.IdealClassRep.of(L)
        seen.setdefault(C.representative.key, C)
    by_order: dict = {}
    for C in seen.values():
        by_order.setdefault(C.order, []).append(C)
    packets = []
    for O, cls in by_order.items():
        cls.sort(key=lambda c: c.representative.sort_key())
        groups: list[list] = []
        for C in cls:
            for g in groups:
                if oc.is_locally_homothetic(g[0].representative, C.representative):
                    g.append(C)
                    break
            else:
                groups.append([C])
        for g in groups:
            packets.append(PacketRep(O, tuple(g), abs(O.disc)))
    packets.sort(key=lambda pk: (pk.discriminant, pk.order.sort_key(),
                                 pk.classes[0].representative.sort_key()))
    return packets


def class_count(packets) -> int:
    return sum(pk.size for pk in packets)


def packets_csv(P: oc.MonicIntPoly, packets) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["poly", "order_disc", "packet_id", "class_id", "class_hnf"])
    for pi, pk in enumerate(packets):
        for ci, C in enumerate(pk.classes):
            rep = C.representative
            hnf = json.dumps({"den": str(rep.den), "hnf": [[str(x) for x in r] for r in rep.hnf]},
                             separators=(",", ":"))
            w.writerow([str(P), pk.order.disc, pi, ci, hnf])
    return buf.getvalue()


# ----------------------------------------------------------------------------
# brute force over matrices


def _gl_moves(n: int):
    """Conjugation moves M -> g M g^-1 for a generating set of GL_n(Z)."""
    moves = []
    for i in range(n):
        for j in range(n):
            if i != j:
                for s in (1, -1):
                    moves.append(("e", i, j, s))
    for i in range(n):
        moves.append(("neg", i, 0, 0))
    for i in range(n):
        for j in range(i + 1, n):
            moves.append(("swap", i, j, 0))
    return moves


def _conj(M, move):
    kind, i, j, s = move
    n = len(M)
    A = [list(r) for r in M]
    if kind == "e":
        # g = I + s e_ij: row_i += s row_j, then col_j -= s col_i
        for c in range(n):
            A[i][c] += s * A[j][c]
        for r in range(n):
            A[r][j] -= s * A[r][i]
    elif kind == "neg":
        for c in range(n):
            A[i][c] = -A[i][c]
        for r in range(n):
            A[r][i] = -A[r][i]
    else:
        A[i], A[j] = A[j], A[i]
        for r in range(n):
            A[r][i], A[r][j] = A[r][j], A[r][i]
    return tuple(tuple(r) for r in A)


def matrices_with_charpoly(P: oc.MonicIntPoly, height: int, cap: int = 2_000_000):
    """All integer matrices with char poly P and entries in [-height, height]."""
    h = int(height)
    out = []
    if P.n == 2:
        det, tr = P.coeffs[0], -P.coeffs[1]
        for x in range(-h, h + 1):
            w = tr - x
            if abs(w) > h:
                continue
            m = x * w - det  # = y z
            if m == 0:
                for y in range(-h, h + 1):
                    out.append(((x, y), (0, w)))
                    if y:
                        out.append(((x, 0), (y, w)))
                continue
            for y in range(1, min(h, abs(m)) + 1):
                if m % y == 0 and abs(m // y) <= h:
                    out.append(((x, y), (m // y, w)))
                    out.append(((x, -y), (-(m // y), w)))
            if len(out) > cap:
                raise ResourceCapError("too many matrices")
    else:
        c0, c1, c2 = P.coeffs
        arr = kernels.charpoly3_matrices(c2, c1, c0, h)
        if len(arr) > cap:
            raise ResourceCapError("too many matrices")
        out = [tuple(tuple(int(x) for x in row[3 * k:3 * k + 3]) for k in range(3)) for row in arr]
    return sorted(set(out))


def conjugation_components(mats):
    """Components of the graph joining M to g M g^-1 inside the given set."""
    index = {m: i for i, m in enumerate(mats)}
    n = len(mats[0]) if mats else 0
    moves = _gl_moves(n)
    comp = [-1] * len(mats)
    comps = []
    for s in range(len(mats)):
        if comp[s] >= 0:
            continue
        cid = len(comps)
        comp[s] = cid
        members = [s]
        q = deque([s])
        while q:
            u = q.popleft()
            for mv in moves:
                v = index.get(_conj(mats[u], mv))
                if v is not None and comp[v] < 0:
                    comp[v] = cid
                    members.append(v)
                    q.append(v)
        comps.append(min(members, key=lambda i: _small_key(mats[i])))
    return [mats[i] for i in comps]


def brute_force_conjugacy(P: oc.MonicIntPoly, height: int, cap: int = 2_000_000):
    """One representative per GL_n(Z)-conjugacy class among bounded matrices.

    Matrices are first joined by generator conjugations that stay in the
    box; components are then merged when their lattices are homothetic, and
    every merge is confirmed by an explicit integral conjugator.
    """
    mats = matrices_with_charpoly(P, height, cap)
    if not mats:
        return []
    reps = conjugation_components(mats)
    classes: dict = {}
    for m in reps:
        key = matrix_to_class(m).representative.key
        if key in classes:
            if conjugator(classes[key], m) is None:
                raise AssertionError(f"homothetic lattices without a conjugator: {m}")
            classes[key] = min(classes[key], m, key=_small_key)
        else:
            classes[key] = m
    return sorted((IntMatrixRep(m) for m in classes.values()), key=lambda r: _small_key(r.M))


def _small_key(m):
    flat = [x for r in m for x in r]
    return (max(abs(x) for x in flat), sum(abs(x) for x in flat), m)


# ----------------------------------------------------------------------------
# alternative generators of a monogenic order


def small_generator(P: oc.MonicIntPoly, radius: float = 4.0, tries: int = 12):
    """A polynomial Q of least height with Z[x] = Z[t] for a root x of Q.

    Elements x = c_1 t + .. + c_{n-1} t^{n-1} are enumerated by the size of
    their trace-free embedding, shifted by an integer to make the trace as
    small as possible; those with disc(charpoly x) = disc(P) generate O_P.
    Returns (Q, x) with x in power-basis coordinates of P.
    """
    from .embedding import real_embedding

    n = P.n
    emb = real_embedding(P)
    V = emb.vandermonde
    one = V[0] / np.linalg.norm(V[0])
    rows = [V[k] - (V[k] @ one) * one for k in range(1, n)]
    basis = np.array(rows)
    best = None
    for _ in range(tries):
        coeffs, _vecs = kernels.enumerate_ball(basis, radius)
        for c in coeffs:
            x = [Fraction(0)] + [Fraction(int(v)) for v in c]
            tr = oc.el_trace(P, x)
            x[0] = Fraction(-round(tr / n))
            Q = _charpoly_of(P, x)
            if Q is None or oc.poly_disc(Q) != P.disc:
                continue
            h = max(abs(a) for a in Q.coeffs)
            cand = (h, Q.coeffs, tuple(x))
            if best is None or cand < best:
                best = cand
        if best is not None:
            break
        radius *= 2
    if best is None:
        return P, tuple(Fraction(int(i == 1)) for i in range(n))
    return oc.MonicIntPoly(best[1]), best[2]


def _charpoly_of(P, x):
    M = oc.mult_matrix(P, x)
    rows = [[int(v) for v in r] for r in M]
    try:
        return oc.MonicIntPoly(charpoly_coeffs(rows))
    except InputError:
        return None


# ----------------------------------------------------------------------------
# integral points in a window


@dataclass(frozen=True)
class Window:
    """Per-entry intervals [lo, hi] on the radial projection M / |det M|^(1/n)."""

    lo: tuple
    hi: tuple

    @classmethod
    def box(cls, n: int, bound: float) -> "Window":
        return cls((-bound,) * (n * n), (bound,) * (n * n))

    def scaled(self, c: float) -> "Window":
        return Window(tuple(c * x for x in self.lo), tuple(c * x for x in self.hi))

    @property
    def empty(self) -> bool:
        return any(a > b for a, b in zip(self.lo, self.hi))

    def contains(self, M, scale: float) -> bool:
        flat = [x / scale for r in M for x in r]
        return all(a <= x <= b for a, x, b in zip(self.lo, flat, self.hi))

    def entry_bound(self, scale: float) -> int:
        return int(math.floor(scale * max(max(abs(a) for a in self.lo), max(abs(b) for b in self.hi))))


def integral_points_in_window(P: oc.MonicIntPoly, window: Window, cap: int = 100_000,
                              start_length: int = 6, prune_factor: float = 4.0,
                              max_length: int = 96):
    """Matrices with char poly P whose radial projection lies in the window.

    Conjugates of one matrix per coarse class are generated by words in the
    GL_n(Z) generators; the word length doubles until the window count is
    unchanged twice in a row.  Intermediate matrices with entries beyond
    prune_factor times the window's entry bound are not expanded.

    Returns (points, lengths, counts).
    """
    if window.empty:
        return [], [], []
    n = P.n
    scale = abs(P.coeffs[0]) ** (1.0 / n)
    bound = window.entry_bound(scale)
    limit = max(2, int(prune_factor * max(bound, 1)))
    reps = [class_to_matrix(C).M for pk in enumerate_coarse_classes(P) for C in pk.classes]
    moves = _gl_moves(n)
    seen = set(reps)
    frontier = list(reps)
    inside = {m for m in reps if window.contains(m, scale)}
    depth = 0
    length = start_length
    lengths, counts = [], []
    stable = 0
    while True:
        while depth < length and frontier:
            nxt = []
            for m in frontier:
                for mv in moves:
                    c = _conj(m, mv)
                    if c in seen:
                        continue
                    if max(abs(x) for r in c for x in r) > limit:
                        continue
                    seen.add(c)
                    nxt.append(c)
                    if window.contains(c, scale):
                        inside.add(c)
                        if len(inside) > cap:
                            raise ResourceCapError(f"window holds more than {cap} points")
            frontier = nxt
            depth += 1
        lengths.append(length)
        counts.append(len(inside))
        if len(counts) >= 2 and counts[-1] == counts[-2]:
            stable += 1
        else:
            stable = 0
        if stable >= 2 or length >= max_length:
            break
        length *= 2
    pts = sorted(inside)
    return [IntMatrixRep(m) for m in pts], lengths, counts


def window_points_direct(P: oc.MonicIntPoly, window: Window):
    """The same census by scanning every matrix in the entry box."""
    if window.empty:
        return []
    scale = abs(P.coeffs[0]) ** (1.0 / P.n)
    mats = matrices_with_charpoly(P, window.entry_bound(scale))
    return [IntMatrixRep(m) for m in mats if window.contains(m, scale)]


# ----------------------------------------------------------------------------
# census


def desk_corpus(n: int, disc_bound: int, scan: int = 100_000) -> list[oc.MonicIntPoly]:
    """Irreducible monic P with 0 < |disc P| <= disc_bound, one per translate class.

    Translation t -> t + k keeps O_P, so a_{n-1} is reduced to [0, 1]
    (n = 2) or [-1, 1] (n = 3).  For n = 3 the linear coefficient is scanned
    down to -scan; for each (a_2, a_1) the admissible a_0 solve a quadratic
    inequality and are found directly.
    """
    if n == 2:
        polys = []
        for D in range(-disc_bound, disc_bound + 1):
            if D == 0 or D % 4 not in (0, 1) or (D > 0 and math.isqrt(D) ** 2 == D):
                continue
            a1 = D % 2
            polys.append(oc.MonicIntPoly(((a1 - D) // 4, a1)))
        return sorted(polys, key=lambda P: (abs(P.disc), P.disc))
    found = set()
    for a2 in (-1, 0, 1):
        for a1 in range(-scan, 4):
            B = 18 * a2 * a1 - 4 * a2 ** 3
            C = a2 * a2 * a1 * a1 - 4 * a1 ** 3
            # disc = -27 a0^2 + B a0 + C
            for target in (disc_bound, -disc_bound):
                dd = B * B - 108 * (target - C)
                if dd < 0:
                    continue
                r = math.isqrt(dd)
                for root in ((B - r) // 54, (B + r) // 54):
                    for a0 in range(root - 2, root + 3):
                        d = -27 * a0 * a0 + B * a0 + C
                        if d != 0 and abs(d) <= disc_bound:
                            found.add((a0, a1, a2))
    polys = []
    for c in sorted(found):
        try:
            polys.append(oc.MonicIntPoly(c))
        except InputError:
            continue
    return sorted(polys, key=lambda P: (abs(P.disc), P.disc, max(abs(c) for c in P.coeffs), P.coeffs))


def brute_force_height(P: oc.MonicIntPoly) -> int:
    """Entry bound that reaches every class.

    A reduced binary form (a, b, c) of discriminant D gives a matrix with
    entries at most max(a, c, (|b| + 1) / 2); for D < 0 that is at most
    (|D| + 1) / 4 + 1, for D > 0 below sqrt(D) + 1.
    """
    if P.n == 2:
        return max(30, (abs(P.disc) + 1) // 4 + 1)
    return 6


@dataclass(frozen=True)
class CensusRow:
    poly: oc.MonicIntPoly
    oracle_poly: oc.MonicIntPoly
    height: int
    classes: int
    oracle_classes: int
    roundtrip: bool

    @property
    def ok(self) -> bool:
        return self.classes == self.oracle_classes and self.roundtrip


def census_check(P: oc.MonicIntPoly) -> CensusRow:
    """Count coarse classes of O_P two ways.

    For cubics with large coefficients the matrix search runs on a small
    polynomial Q generating the same order (Z[x] = O_P with Q(x) = 0); the
    classes of the two presentations correspond under t -> x.
    """
    packets = enumerate_coarse_classes(P)
    rt = True
    for pk in packets:
        for C in pk.classes:
            M = class_to_matrix(C)
            if matrix_to_class(M).representative != C.representative:
                rt = False
    Q = P
    if P.n == 3 and max(abs(c) for c in P.coeffs) > brute_force_height(P):
        Q, _ = small_generator(P)
    h = brute_force_height(Q)
    brute = brute_force_conjugacy(Q, h)
    return CensusRow(P, Q, h, class_count(packets), len(brute), rt)
