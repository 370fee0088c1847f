"""Exceptions raised by the library, each mapped to a CLI exit code."""

from typing import Any


class WarpedConeError(Exception):
    """Base class for all library errors."""

    exit_code = 2


class ConfigurationError(WarpedConeError):
    """Invalid input: unknown names, bad parameters, out-of-range truncation depth."""

    exit_code = 1


class ModelError(ConfigurationError):
    """A warped model could not be built or was rejected."""


class ExpressionError(ConfigurationError):
    """A closed-form expression is outside the supported grammar."""


class CatalogError(ConfigurationError):
    """Unknown or inconsistent catalog surface."""


class ChartError(ConfigurationError):
    """A finite-difference stencil leaves the coordinate chart."""


class SolverError(WarpedConeError):
    """A numerical solve failed."""

    exit_code = 2


class QuadratureError(SolverError):
    """Adaptive quadrature did not reach the requested tolerance."""


class SolverDisagreementError(SolverError):
    """Independent solvers disagree beyond tolerance."""

    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class VerificationError(WarpedConeError):
    """An invariant check failed."""

    exit_code = 3
