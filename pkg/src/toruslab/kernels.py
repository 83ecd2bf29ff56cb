"""Numeric kernels, compiled when available.

The Cython module ``_ckernels`` is used if it imports; setting the
environment variable TORUSLAB_PURE=1 forces the numpy reference versions.
Both backends return identical results up to floating-point summation
order inside LLL; lattice censuses agree exactly.
"""

import os

from . import _kernels_py

if os.environ.get("TORUSLAB_PURE", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _kernels_py

BACKEND = _impl.BACKEND
GAUSS_CUT = _kernels_py.GAUSS_CUT

lll = _impl.lll
enumerate_ball = _impl.enumerate_ball
shortest_length = _impl.shortest_length
shortest_lengths = _impl.shortest_lengths
siegel_suite = _impl.siegel_suite
charpoly3_matrices = _impl.charpoly3_matrices
suite_radius = _kernels_py.suite_radius
pairwise_sum = _kernels_py._pairwise_sum

__all__ = [
    "BACKEND",
    "GAUSS_CUT",
    "lll",
    "enumerate_ball",
    "shortest_length",
    "shortest_lengths",
    "siegel_suite",
    "charpoly3_matrices",
    "suite_radius",
    "pairwise_sum",
]
