"""Exception types; each maps to a CLI exit status."""


class ToruslabError(Exception):
    exit_code = 1


class InputError(ToruslabError, ValueError):
    """Malformed or out-of-range input (bad polynomial, config, matrix)."""

    exit_code = 2


class ResourceCapError(ToruslabError, RuntimeError):
    """An enumeration exceeded its configured cap."""

    exit_code = 3


class ConvergenceError(ToruslabError, ArithmeticError):
    """A numerical or search procedure failed to converge."""

    exit_code = 4
