"""Exception hierarchy.

Every failure the CLI can report maps onto one of three exit codes:
validation problems (2), numerical divergence (3) and I/O (4).
"""

from __future__ import annotations

from typing import Any


class UEDTomographyError(Exception):
    """Base class for all package errors."""

    exit_code: int = 1


class ValidationError(UEDTomographyError, ValueError):
    """Input violates a schema, shape or precondition."""

    exit_code = 2


class BasisOrderError(ValidationError):
    """Requested angular basis order cannot be evaluated in float64."""


class JMaxTooSmallError(ValidationError):
    """Thermal population beyond the truncation exceeds tolerance."""


class SingularSystemError(ValidationError):
    """Unregularized normal equations are rank deficient."""


class KernelTooLargeError(ValidationError):
    """Kernel matrix would exceed the configured memory cap."""


class ResolutionError(ValidationError):
    """Sampling grid cannot resolve the requested basis order."""


class AliasingError(ValidationError):
    """Requested frequency exceeds the Nyquist limit of the time grid."""


class AmbiguousFactorizationError(ValidationError):
    """More than one density element contributes to a Fourier component."""


class SingularMomentumTransferError(ValidationError):
    """Electron form factor requested at zero momentum transfer."""


class PropagationError(UEDTomographyError, RuntimeError):
    """Time integration lost norm beyond tolerance."""

    exit_code = 3


class DivergenceError(UEDTomographyError, RuntimeError):
    """Iterative reconstruction diverged.

    Attributes:
        history: Iteration records collected before the abort.
    """

    exit_code = 3

    def __init__(self, message: str, history: list[Any] | None = None) -> None:
        super().__init__(message)
        self.history = history or []


class PersistenceError(UEDTomographyError, OSError):
    """Reading or writing an artifact failed."""

    exit_code = 4
