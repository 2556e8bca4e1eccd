"""Shared numerical kernels.

Log-domain 1-D quadrature, a Laplace approximation for log-integrals, and
Cholesky-backed log-determinant/solve.  Every marginal-likelihood routine in
the package funnels its integration and linear algebra through here, and all
arithmetic stays in the log domain end to end: the integrands involved
underflow double precision already for moderate sample sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import logsumexp

from .errors import (
    IntegrandUnderflowError,
    InvalidIntegrandError,
    LaplaceFailureError,
    NotPositiveDefiniteError,
)

__all__ = [
    "QuadratureSpec",
    "DEFAULT_PRECISION_QUAD",
    "log_trapezoid",
    "laplace_log_integral",
    "chol_logdet_solve",
]

LogIntegrand = Callable[[float], float]


@dataclass(frozen=True)
class QuadratureSpec:
    """Trapezoid mesh on a transformed axis.

    ``lower``/``upper`` are expressed on the *transformed* scale.  With
    ``transform="log"`` the integration variable is u = log(t) and the
    Jacobian e^u is added to the log-integrand, so the caller's integrand
    stays expressed in the original variable t.
    """

    lower: float
    upper: float
    n_nodes: int = 2001
    transform: str = "identity"

    def __post_init__(self):
        if not self.upper > self.lower:
            raise ValueError(f"upper ({self.upper}) must exceed lower ({self.lower})")
        if self.n_nodes < 2:
            raise ValueError(f"n_nodes must be >= 2, got {self.n_nodes}")
        if self.transform not in ("identity", "log"):
            raise ValueError(f"unknown transform {self.transform!r}")

    def refine(self) -> "QuadratureSpec":
        """Same interval with the mesh halved (2n-1 nodes)."""
        return QuadratureSpec(self.lower, self.upper, 2 * self.n_nodes - 1, self.transform)


# Brackets the posterior mass of every log-precision integral in the test
# corpus with margin; validated by the mesh-refinement property tests.
DEFAULT_PRECISION_QUAD = QuadratureSpec(lower=-20.0, upper=15.0, n_nodes=2001, transform="log")


def _eval_log_integrand(f: LogIntegrand, points: np.ndarray) -> np.ndarray:
    """Evaluate f at an array of points, accepting scalar-only callables."""
    try:
        vals = np.asarray(f(points), dtype=float)
        if vals.shape == points.shape:
            return vals
    except (TypeError, ValueError):
        pass
    return np.array([float(f(p)) for p in points], dtype=float)


def log_trapezoid(f: LogIntegrand, spec: QuadratureSpec) -> float:
    """Log of the trapezoid-rule integral of exp(f).

    Computes log ∫ exp(f(t)) dt over the mesh entirely in the log domain
    via log-sum-exp of the trapezoid weights.  With ``transform="log"`` the
    nodes are u = log(t) and the Jacobian e^u is added, i.e. the returned
    value is log ∫ exp(f(t)) dt with the mesh equispaced in log t.

    Raises
    ------
    IntegrandUnderflowError
        If every node evaluates to -inf ("integrand underflow").
    InvalidIntegrandError
        If any node evaluates to NaN or +inf ("invalid integrand").
    """
    u = np.linspace(spec.lower, spec.upper, spec.n_nodes)
    if spec.transform == "log":
        vals = _eval_log_integrand(f, np.exp(u)) + u
    else:
        vals = _eval_log_integrand(f, u)

    if np.any(np.isnan(vals)) or np.any(np.isposinf(vals)):
        raise InvalidIntegrandError("invalid integrand: NaN or +inf on the quadrature mesh")
    if np.all(np.isneginf(vals)):
        raise IntegrandUnderflowError("integrand underflow: all nodes are -inf")

    h = (spec.upper - spec.lower) / (spec.n_nodes - 1)
    log_w = np.full(spec.n_nodes, math.log(h))
    log_w[0] -= math.log(2.0)
    log_w[-1] -= math.log(2.0)
    return float(logsumexp(vals + log_w))


def _bracket_maximum(f, init, lo, hi):
    """Expand from init to a 3-point bracket (a < m < b with f(m) >= ends).

    Returns None when f is monotone up to the domain boundary, i.e. no
    interior bracket exists.
    """
    span = hi - lo
    init = min(max(init, lo), hi)
    step = max(span * 1e-3, 1e-8)
    a = m = b = init
    fm = f(m)
    # March downhill of -f in both directions until the middle dominates.
    left, right = max(init - step, lo), min(init + step, hi)
    fl, fr = f(left), f(right)
    for _ in range(200):
        if fm >= fl and fm >= fr:
            return (left, m, right) if left < m < right else None
        if fl > fm:
            left, m, right = max(left - (m - left) * 2.0, lo), left, m
            fl, fm, fr = f(left), fl, fm
            if left == m:  # pinned at boundary
                return None
        else:
            left, m, right = m, right, min(right + (right - m) * 2.0, hi)
            fl, fm, fr = fm, fr, f(right)
            if right == m:
                return None
    return None


def laplace_log_integral(f: LogIntegrand, init: float, domain: tuple[float, float]) -> float:
    """Laplace approximation to log ∫ exp(f(t)) dt on an interval.

    Locates the mode t* by 1-D maximization starting from ``init`` and
    returns f(t*) + log(2π)/2 - log(-f''(t*))/2, the second derivative taken
    by central finite differences.

    Raises
    ------
    LaplaceFailureError
        When no interior maximum is bracketed or f''(t*) >= 0 ("laplace
        failure"); callers fall back to :func:`log_trapezoid`.
    """
    from scipy.optimize import minimize_scalar

    lo, hi = float(domain[0]), float(domain[1])
    bracket = _bracket_maximum(f, float(init), lo, hi)
    if bracket is None:
        raise LaplaceFailureError("laplace failure: no interior maximum bracketed")
    try:
        res = minimize_scalar(lambda t: -f(t), bracket=bracket, method="brent",
                              options={"xtol": 1e-10})
    except (ValueError, RuntimeError) as exc:
        raise LaplaceFailureError(f"laplace failure: mode search failed ({exc})") from exc
    t_star = float(res.x)
    if not (lo < t_star < hi) or not np.isfinite(res.fun):
        raise LaplaceFailureError("laplace failure: mode search did not converge interior")

    f0 = float(f(t_star))
    h = 1e-2 * (1.0 + abs(t_star))
    h = min(h, (hi - lo) / 8.0, t_star - lo, hi - t_star)

    def second_diff(step):
        return (f(t_star + step) - 2.0 * f0 + f(t_star - step)) / (step * step)

    d2 = second_diff(h)
    if d2 < 0 and -d2 * h * h > 1.0:
        # Very peaked integrand: rescale the step to the curvature length.
        h = min(h, 1.0 / math.sqrt(-d2))
        d2 = second_diff(h)
    if not np.isfinite(d2) or d2 >= 0:
        raise LaplaceFailureError("laplace failure: non-negative curvature at the mode")
    return f0 + 0.5 * math.log(2.0 * math.pi) - 0.5 * math.log(-d2)


_JITTER_LADDER = (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)


def chol_logdet_solve(A: np.ndarray, B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Log-determinant of SPD ``A`` and the solution of A X = B, via Cholesky.

    Accepts stacked inputs: ``A`` with shape (..., n, n) and ``B`` with shape
    (..., n, k) are factorized batch-wise.  On factorization failure a jitter
    ladder (1e-10 .. 1e-6 times the mean diagonal) is escalated before giving
    up.

    Returns
    -------
    logdet : float or ndarray
        log det(A); scalar for a single matrix, shape (...,) for batches.
    X : ndarray
        Solution of A X = B.

    Raises
    ------
    NotPositiveDefiniteError
        If factorization fails after the jitter ladder is exhausted.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ValueError(f"A must have shape (..., n, n), got {A.shape}")
    n = A.shape[-1]
    if n == 1:
        # Fast path; keeps the 1x1 log-determinant exact (no sqrt round-trip).
        a = A[..., 0, 0]
        if np.any(a <= 0):
            raise NotPositiveDefiniteError("not positive definite: non-positive 1x1 entry")
        logdet = np.log(a)
        X = B / a[..., None, None]
        if A.ndim == 2:
            return float(logdet), X
        return logdet, X

    diag_mean = np.mean(np.diagonal(A, axis1=-2, axis2=-1), axis=-1)
    eye = np.eye(n)
    for jitter in _JITTER_LADDER:
        try:
            Aj = A + jitter * diag_mean[..., None, None] * eye
            L = np.linalg.cholesky(Aj)
            break
        except np.linalg.LinAlgError:
            continue
    else:
        raise NotPositiveDefiniteError(
            "not positive definite: Cholesky failed after jitter ladder"
        )

    logdet = 2.0 * np.sum(np.log(np.diagonal(L, axis1=-2, axis2=-1)), axis=-1)
    # Two triangular solves; solve_triangular has no batch support, but
    # np.linalg.solve on the triangular factors is stable for these sizes.
    Z = np.linalg.solve(L, B)
    X = np.linalg.solve(np.swapaxes(L, -2, -1), Z)
    if A.ndim == 2:
        return float(logdet), X
    return logdet, X
