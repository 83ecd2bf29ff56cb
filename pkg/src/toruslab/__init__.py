"""Periodic torus orbits on the space of lattices, built from orders in number fields."""

from .errors import ConvergenceError, InputError, ResourceCapError, ToruslabError
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["ConvergenceError", "InputError", "ResourceCapError", "ToruslabError", "BACKEND", "__version__"]
