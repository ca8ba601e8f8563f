"""Exception taxonomy shared across the package.

ConfigError maps to CLI exit code 2, NumericalError (and subclasses)
to exit code 3.
"""

from __future__ import annotations


class ConfigError(ValueError):
    """Malformed or contradictory run configuration."""


class NumericalError(RuntimeError):
    """A numerical contract was violated during a run."""


class CflError(NumericalError):
    """Face displacement exceeded the flux-form CFL bound."""


class FeetError(NumericalError):
    """Characteristic feet failed to converge or crossed."""


class FieldSolveError(NumericalError):
    """Quasi-neutrality solve failed or returned non-finite values."""
