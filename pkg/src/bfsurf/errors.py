"""Semantic exception hierarchy shared across the package.

Public functions raise subclasses of :class:`BfsurfError` for contract
violations and numerical failures; plain ``ValueError``/``TypeError`` are
reserved for programming mistakes (wrong shapes, unknown enum values).
"""

from __future__ import annotations


class BfsurfError(Exception):
    """Base error for this package."""


class IntegrandUnderflowError(BfsurfError):
    """Every quadrature node evaluated to -inf: the integral underflows."""


class InvalidIntegrandError(BfsurfError):
    """A log-integrand returned NaN or +inf on the quadrature mesh."""


class LaplaceFailureError(BfsurfError):
    """Mode search failed or the located mode has non-negative curvature."""


class NotPositiveDefiniteError(BfsurfError):
    """Cholesky factorization failed even after the jitter ladder."""


class InsufficientSampleError(BfsurfError):
    """Too few observations for the requested operation."""


class InsufficientTrainingFractionError(BfsurfError):
    """Fractional training sample too small for proper fractional marginals."""


class GroupTooSmallError(BfsurfError):
    """A grouped dataset contains a group with fewer than two observations."""


class DegenerateGroupDesignError(BfsurfError):
    """A per-group model matrix is singular (e.g. constant predictor)."""


class CalibrationError(BfsurfError):
    """Data-driven hyperparameter calibration is not possible."""


class CsvFormatError(BfsurfError):
    """A CSV input violates the expected schema."""


class GridTooLargeError(BfsurfError):
    """A factorial grid exceeds the configured size cap."""


class FitFailedError(BfsurfError):
    """No optimizer start converged; carries the best-effort fit.

    Attributes
    ----------
    fit : object
        Best-effort fitted model, usable for diagnosis.
    diagnostics : dict
        Per-start convergence information.
    """

    def __init__(self, message: str, fit=None, diagnostics=None):
        super().__init__(message)
        self.fit = fit
        self.diagnostics = diagnostics or {}


class SweepFailedError(BfsurfError):
    """Every point of a surface sweep failed."""
