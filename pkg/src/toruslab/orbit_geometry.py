"""Ideal classes as compact torus orbits on the space of unimodular lattices.

A lattice L in K embeds through the Minkowski map; after scaling to
covolume one it is a point of X_n, and the diagonal group moves it along a
compact orbit whose stabilizer is the log lattice of the units of the
multiplier ring.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import order_core as oc
from .embedding import EmbeddingRep, real_embedding
from .errors import InputError
from .reduction import Infrastructure

__all__ = [
    "EmbeddingRep",
    "real_embedding",
    "EmbeddedLattice",
    "TorusOrbitRep",
    "embed_class",
    "unnormalized_basis",
    "orbit_of",
    "orbit_discriminant",
    "archimedean_factor",
    "sample_orbit",
    "sample_params",
    "block_rng",
    "write_samples",
    "read_samples",
]


@dataclass
class EmbeddedLattice:
    basis: np.ndarray  # rows, |det| = 1
    provenance: dict = field(default_factory=dict)

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.basis))

    @property
    def condition(self) -> float:
        return float(np.linalg.cond(self.basis @ self.basis.T))


def _as_lattice(C):
    return C.representative if isinstance(C, oc.IdealClassRep) else oc.as_ideal(C)


def unnormalized_basis(C, theta: EmbeddingRep | None = None) -> np.ndarray:
    """Minkowski rows of the HNF basis, before scaling."""
    L = _as_lattice(C)
    theta = theta or real_embedding(L.poly)
    if theta.poly != L.poly:
        raise InputError("embedding and class use different polynomials")
    return np.array([theta.minkowski(b) for b in L.basis])


def embed_class(C, theta: EmbeddingRep | None = None, class_id=None) -> EmbeddedLattice:
    B = unnormalized_basis(C, theta)
    n = B.shape[0]
    covol = abs(float(np.linalg.det(B)))
    scale = covol ** (-1.0 / n)
    return EmbeddedLattice(B * scale, {"class_id": class_id, "scale": scale, "covolume": covol})


@dataclass
class TorusOrbitRep:
    base: EmbeddedLattice
    unit_logs: np.ndarray  # rows: per-place log|sigma_j(eps)|
    regulator: float
    lattice: oc.FracIdealRep
    degrees: tuple

    @property
    def rank(self) -> int:
        return self.unit_logs.shape[0]

    @property
    def volume(self) -> float:
        """Covolume of the stabilizer read in the first r+s-1 log coordinates."""
        if self.rank == 0:
            return 1.0
        d = np.array(self.degrees, dtype=float)
        k = self.rank
        return abs(float(np.linalg.det(self.unit_logs[:, :k] * d[:k])))

    @property
    def reduced_logs(self) -> np.ndarray:
        """LLL-reduced basis of the stabilizer (used for sampling cells)."""
        from .kernels import lll

        if self.rank <= 1:
            return self.unit_logs.copy()
        red, _ = lll(self.unit_logs)
        return red


def orbit_of(C, theta: EmbeddingRep | None = None, class_id=None) -> TorusOrbitRep:
    L = _as_lattice(C)
    O = C.order if isinstance(C, oc.IdealClassRep) else oc.multiplier_ring(L)
    units = oc.unit_group(O)
    d = np.array(real_embedding(L.poly).degrees, dtype=float)
    logs = np.array([np.array(w) / d for w in units.fundamental_logs]).reshape(units.rank, len(d))
    base = embed_class(L, theta, class_id)
    return TorusOrbitRep(base, logs, units.regulator, L, tuple(int(x) for x in d))


def _regular_blocks(theta: EmbeddingRep, x) -> np.ndarray:
    """theta(x) acting on Minkowski coordinates as an n x n real matrix."""
    n = theta.poly.n
    r = theta.signature[0]
    vals = theta.sigma(x)
    M = np.zeros((n, n))
    for j in range(r):
        M[j, j] = float(vals[j])
    for k, z in enumerate(vals[r:]):
        j = r + 2 * k
        M[j:j + 2, j:j + 2] = [[z.real, -z.imag], [z.imag, z.real]]
    return M


def archimedean_factor(theta: EmbeddingRep) -> float:
    """|(2n)^(1-n) / det(tr f_i f_j)| for a Frobenius-orthonormal basis f of theta(K (x) R)."""
    n = theta.poly.n
    mats = [_regular_blocks(theta, [int(i == k) for i in range(n)]) for k in range(n)]
    flat = np.array([m.ravel() for m in mats])
    q, _ = np.linalg.qr(flat.T)
    f = [q[:, i].reshape(n, n) for i in range(n)]
    gram = np.array([[np.trace(a @ b) for b in f] for a in f])
    return abs((2 * n) ** (1 - n) / float(np.linalg.det(gram)))


def orbit_discriminant(C, theta: EmbeddingRep | None = None, reference: float | None = None):
    """|disc(O_L)|, and the archimedean factor checked against a reference value.

    Returns (disc, factor).  With reference given, factor must agree with it
    to 1e-9 relative.
    """
    L = _as_lattice(C)
    theta = theta or real_embedding(L.poly)
    O = C.order if isinstance(C, oc.IdealClassRep) else oc.multiplier_ring(L)
    fac = archimedean_factor(theta)
    if reference is not None and abs(fac - reference) > 1e-9 * abs(reference):
        raise AssertionError(f"archimedean factor {fac} differs from {reference}")
    return abs(O.disc), fac


# ----------------------------------------------------------------------------
# sampling

BLOCK = 1024


def block_rng(seed: int, stream: int, block: int) -> np.random.Generator:
    """Counter-based generator for one block of samples."""
    return np.random.Generator(np.random.Philox(key=int(seed), counter=[0, int(block), int(stream), 0]))


def sample_params(orbit: TorusOrbitRep, scheme: str = "grid", k: int = 4, m: int = 0,
                  seed: int = 0, stream: int = 0) -> np.ndarray:
    """Coefficients in [0,1)^rank of the sample points on the stabilizer cell.

    grid: the k^rank points j/k (the base point is j = 0);
    monte_carlo: m uniform points, drawn in blocks of BLOCK samples so each
    sample depends only on (seed, stream, index).
    """
    rank = orbit.rank
    if rank == 0:
        return np.zeros((1, 0))
    if scheme == "grid":
        axes = [np.arange(k) / k] * rank
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)
    if scheme == "monte_carlo":
        out = np.empty((m, rank))
        for b in range(0, m, BLOCK):
            cnt = min(BLOCK, m - b)
            out[b:b + cnt] = block_rng(seed, stream, b // BLOCK).random((BLOCK, rank))[:cnt]
        return out
    raise InputError(f"unknown sampling scheme {scheme!r}")


class OrbitSampler:
    """Unimodular points a_t theta(L) along one orbit, anchored for large t."""

    def __init__(self, orbit: TorusOrbitRep):
        self.orbit = orbit
        L = orbit.lattice
        self.inf = Infrastructure(L, oc.multiplier_ring(L))
        self.cell = orbit.reduced_logs

    def log_vector(self, coeffs) -> np.ndarray:
        if self.orbit.rank == 0:
            return np.zeros(len(self.orbit.degrees))
        return np.asarray(coeffs) @ self.cell

    def point(self, t) -> np.ndarray:
        return self.inf.lattice_at(np.asarray(t, dtype=float))

    def points(self, params, shift=None) -> np.ndarray:
        shift = np.zeros(len(self.orbit.degrees)) if shift is None else np.asarray(shift)
        out = np.empty((len(params), self.inf.n, self.inf.n))
        for i, c in enumerate(params):
            out[i] = self.point(self.log_vector(c) + shift)
        return out


def sample_orbit(orbit: TorusOrbitRep, scheme: str = "grid", k: int = 4, m: int = 0,
                 seed: int = 0, stream: int = 0, shift=None) -> list[EmbeddedLattice]:
    params = sample_params(orbit, scheme, k, m, seed, stream)
    sampler = OrbitSampler(orbit)
    pts = sampler.points(params, shift)
    prov = {"scheme": scheme, "seed": seed, "stream": stream}
    return [EmbeddedLattice(p, dict(prov, index=i)) for i, p in enumerate(pts)]


def write_samples(path, samples, meta: dict):
    """Little-endian float64 row-major stream plus a JSON sidecar."""
    path = Path(path)
    arr = np.asarray([s.basis if isinstance(s, EmbeddedLattice) else s for s in samples], dtype="<f8")
    path.write_bytes(np.ascontiguousarray(arr).tobytes())
    side = dict(meta, count=int(arr.shape[0]), shape=list(arr.shape[1:]), dtype="<f8")
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(side, sort_keys=True, indent=1) + "\n")


def read_samples(path):
    path = Path(path)
    side = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    arr = np.frombuffer(path.read_bytes(), dtype="<f8").reshape([side["count"]] + side["shape"])
    return arr, side
