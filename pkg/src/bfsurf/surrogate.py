"""Gaussian-process surrogates for log Bayes factor surfaces.

A constant-mean anisotropic GP (Matérn 5/2 by default) fit by maximum
likelihood with analytic gradients covers smooth deterministic surfaces; a
replicate-based heteroskedastic variant smooths per-location empirical
variances on the log scale with a secondary GP and feeds the resulting noise
field back into the mean-process fit (stochastic-kriging style, two passes).

Inputs live in the scaled unit cube; outputs are standardized internally and
transformed back at prediction time.  Replicated observations enter the
likelihood exactly, through their means (noise shrunk by replicate counts)
plus the within-replicate sum of squares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.optimize import minimize
from scipy.stats import norm

from . import rng
from .errors import FitFailedError, NotPositiveDefiniteError

__all__ = [
    "KernelSpec",
    "TrainingSet",
    "HetGpFit",
    "Prediction",
    "fit_gp",
    "fit_hetgp",
    "predict",
    "coverage",
]

KERNEL_FAMILIES = ("matern_5_2", "squared_exponential")

# Optimization bounds in scaled/standardized units; they keep flat slices
# (near-constant responses) away from degenerate optima.
_LOG_LS_BOUNDS = (math.log(1e-2), math.log(10.0))
_LOG_SV_BOUNDS = (math.log(1e-4), math.log(1e2))
_LOG_NUGGET_BOUNDS = (math.log(1e-8), math.log(10.0))
_NOISE_FLOOR = 1e-8          # of the (standardized) output variance
_BASE_JITTER = 1e-12
_N_STARTS = 5
_MAX_ITER = 500
_GRAD_TOL = 1e-5
_SQRT5 = math.sqrt(5.0)


@dataclass(frozen=True)
class KernelSpec:
    """Stationary kernel: family, per-dimension lengthscales, signal variance."""

    family: str
    lengthscales: np.ndarray
    signal_var: float

    def __post_init__(self):
        if self.family not in KERNEL_FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        ls = np.atleast_1d(np.asarray(self.lengthscales, dtype=float))
        if np.any(ls <= 0) or self.signal_var <= 0:
            raise ValueError("lengthscales and signal_var must be positive")
        object.__setattr__(self, "lengthscales", ls)


def _scaled_sq_dists(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.sum((diff / spec.lengthscales) ** 2, axis=2)


def kernel_cross(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Covariance matrix between two point sets in the scaled cube."""
    s = _scaled_sq_dists(spec, a, b)
    if spec.family == "squared_exponential":
        return spec.signal_var * np.exp(-0.5 * s)
    r = np.sqrt(s)
    return spec.signal_var * (1.0 + _SQRT5 * r + (5.0 / 3.0) * s) * np.exp(-_SQRT5 * r)


def _kernel_with_grads(spec: KernelSpec, diffsq: np.ndarray):
    """Training covariance and its gradients w.r.t. log-hyperparameters.

    ``diffsq`` holds per-dimension squared coordinate differences with shape
    (d, n, n).  Returns (K, dK/dlog ls_k stacked (d, n, n)); dK/dlog sv is K
    itself.
    """
    d = diffsq.shape[0]
    dk = diffsq / (spec.lengthscales**2)[:, None, None]
    s = dk.sum(axis=0)
    if spec.family == "squared_exponential":
        k = spec.signal_var * np.exp(-0.5 * s)
        grads = k[None, :, :] * dk
        return k, grads
    r = np.sqrt(s)
    e = np.exp(-_SQRT5 * r)
    k = spec.signal_var * (1.0 + _SQRT5 * r + (5.0 / 3.0) * s) * e
    # d k / d log ls_k = (5/3) sv (1 + sqrt5 r) e^{-sqrt5 r} * dk  (no 1/r term)
    grads = (5.0 / 3.0) * spec.signal_var * ((1.0 + _SQRT5 * r) * e)[None, :, :] * dk
    return k, grads


@dataclass(frozen=True)
class TrainingSet:
    """Observations in the scaled unit cube with their replicate structure.

    Exact-duplicate rows of X are grouped into unique locations; per-location
    counts, sample means, and sample variances drive the replicate-aware
    likelihood and the heteroskedastic noise field.
    """

    X: np.ndarray
    y: np.ndarray
    x_unique: np.ndarray = field(init=False)
    counts: np.ndarray = field(init=False)
    means: np.ndarray = field(init=False)
    variances: np.ndarray = field(init=False)   # ddof=1; NaN where counts < 2
    inverse: np.ndarray = field(init=False)

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape[0] != y.shape[0]:
            raise ValueError("X and y must have matching first dimensions")
        if x.shape[0] == 0:
            raise ValueError("training set is empty")
        if np.any(x < -1e-9) or np.any(x > 1 + 1e-9):
            raise ValueError("training inputs must lie in the scaled unit cube")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise ValueError("training data must be finite")
        xu, inverse = np.unique(x, axis=0, return_inverse=True)
        inverse = inverse.ravel()
        n = xu.shape[0]
        counts = np.bincount(inverse, minlength=n)
        sums = np.bincount(inverse, weights=y, minlength=n)
        means = sums / counts
        ss = np.bincount(inverse, weights=(y - means[inverse]) ** 2, minlength=n)
        with np.errstate(invalid="ignore", divide="ignore"):
            variances = np.where(counts > 1, ss / np.maximum(counts - 1, 1), np.nan)
        object.__setattr__(self, "X", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x_unique", xu)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "variances", variances)
        object.__setattr__(self, "inverse", inverse)

    @property
    def n_unique(self) -> int:
        return self.x_unique.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class Prediction:
    """Posterior mean with epistemic (mean) and observation variances."""

    mean: np.ndarray
    var_mean: np.ndarray
    var_obs: np.ndarray
    extrapolated: np.ndarray

    def interval(self, level: float = 0.95) -> tuple[np.ndarray, np.ndarray]:
        """Central predictive interval for a new observation."""
        z = norm.ppf(0.5 * (1.0 + level))
        sd = np.sqrt(self.var_obs)
        return self.mean - z * sd, self.mean + z * sd

    @property
    def sd_mean(self) -> np.ndarray:
        return np.sqrt(self.var_mean)

    @property
    def sd_obs(self) -> np.ndarray:
        return np.sqrt(self.var_obs)


@dataclass(frozen=True)
class HetGpFit:
    """Fitted surrogate: kernel, constant mean, noise model, factorized covariance.

    Internal quantities (kernel signal variance, mean, noise, factor) are in
    standardized output units; ``y_shift``/``y_scale`` map predictions back.
    ``noise_tau2`` is the per-unique-location observation-noise field; for a
    homoskedastic fit it is constant and ``noise_smoother`` is None.
    """

    kernel: KernelSpec
    mean_const: float
    x_unique: np.ndarray
    counts: np.ndarray
    y_means_std: np.ndarray
    noise_tau2: np.ndarray
    nugget: float | None
    noise_smoother: "HetGpFit | None"
    chol: np.ndarray
    alpha: np.ndarray
    y_shift: float
    y_scale: float
    log_lik: float
    diagnostics: dict

    def covariance(self) -> np.ndarray:
        """Training covariance of the replicate means (reconstructed)."""
        k = kernel_cross(self.kernel, self.x_unique, self.x_unique)
        k[np.diag_indices_from(k)] += self.noise_tau2 / self.counts + _BASE_JITTER
        return k

    def to_json_dict(self) -> dict:
        payload = {
            "kernel": {
                "family": self.kernel.family,
                "lengthscales": self.kernel.lengthscales.tolist(),
                "signal_var": self.kernel.signal_var * self.y_scale**2,
            },
            "mean_const": self.y_shift + self.y_scale * self.mean_const,
            "x_unique": self.x_unique.tolist(),
            "counts": self.counts.tolist(),
            "y_means_std": self.y_means_std.tolist(),
            "noise_tau2": (self.noise_tau2 * self.y_scale**2).tolist(),
            "nugget": None if self.nugget is None else self.nugget * self.y_scale**2,
            "y_shift": self.y_shift,
            "y_scale": self.y_scale,
            "log_lik": self.log_lik,
            "diagnostics": self.diagnostics,
            "noise_smoother": (
                None if self.noise_smoother is None else self.noise_smoother.to_json_dict()
            ),
        }
        return payload

    @classmethod
    def from_json_dict(cls, payload: dict) -> "HetGpFit":
        y_scale = float(payload["y_scale"])
        y_shift = float(payload["y_shift"])
        kernel = KernelSpec(
            payload["kernel"]["family"],
            np.array(payload["kernel"]["lengthscales"]),
            float(payload["kernel"]["signal_var"]) / y_scale**2,
        )
        xu = np.array(payload["x_unique"], dtype=float)
        counts = np.array(payload["counts"], dtype=int)
        y_means_std = np.array(payload["y_means_std"], dtype=float)
        tau2 = np.array(payload["noise_tau2"], dtype=float) / y_scale**2
        nugget = payload["nugget"]
        smoother = (
            None
            if payload["noise_smoother"] is None
            else cls.from_json_dict(payload["noise_smoother"])
        )
        mean_std = (float(payload["mean_const"]) - y_shift) / y_scale
        chol, alpha = _factorize(kernel, xu, counts, tau2, y_means_std, mean_std)
        return cls(
            kernel=kernel,
            mean_const=mean_std,
            x_unique=xu,
            counts=counts,
            y_means_std=y_means_std,
            noise_tau2=tau2,
            nugget=None if nugget is None else float(nugget) / y_scale**2,
            noise_smoother=smoother,
            chol=chol,
            alpha=alpha,
            y_shift=y_shift,
            y_scale=y_scale,
            log_lik=float(payload["log_lik"]),
            diagnostics=dict(payload["diagnostics"]),
        )


def _factorize(kernel, xu, counts, tau2, y_means_std, mean_std):
    k = kernel_cross(kernel, xu, xu)
    k[np.diag_indices_from(k)] += tau2 / counts + _BASE_JITTER
    try:
        c, lower = cho_factor(k, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("training covariance not positive definite") from exc
    alpha = cho_solve((c, lower), y_means_std - mean_std)
    return c, alpha


# --- likelihood core -------------------------------------------------------


@dataclass
class _LikContext:
    family: str
    xu: np.ndarray
    diffsq: np.ndarray          # (d, n, n)
    y_means: np.ndarray         # standardized
    counts: np.ndarray
    ss_per_loc: np.ndarray      # within-replicate SS per location (standardized)
    n_total: int
    fixed_noise: np.ndarray | None = None  # per-location obs noise, fixed field
    estimate_nugget: bool = False
    fixed_nugget: float | None = None


def _unpack(params, ctx):
    d = ctx.diffsq.shape[0]
    ls = np.exp(params[:d])
    sv = math.exp(params[d])
    g = math.exp(params[d + 1]) if ctx.estimate_nugget else ctx.fixed_nugget
    return KernelSpec(ctx.family, ls, sv), g


def _neg_log_lik_and_grad(params: np.ndarray, ctx: _LikContext):
    """Negative full-data log likelihood and its gradient in log-parameters.

    The likelihood factors exactly into the replicate means (noise shrunk by
    counts) and the within-replicate deviations; the constant mean is
    profiled out, which leaves gradients untouched at the profiled optimum.
    """
    spec, g = _unpack(params, ctx)
    n = ctx.xu.shape[0]
    counts = ctx.counts

    k, ls_grads = _kernel_with_grads(spec, ctx.diffsq)
    noise = ctx.fixed_noise if ctx.fixed_noise is not None else np.full(n, g)
    kb = k.copy()
    kb[np.diag_indices_from(kb)] += noise / counts + _BASE_JITTER
    try:
        c, lower = cho_factor(kb, lower=True)
    except np.linalg.LinAlgError:
        return 1e25, np.zeros_like(params)

    ones = np.ones(n)
    kinv_y = cho_solve((c, lower), ctx.y_means)
    kinv_1 = cho_solve((c, lower), ones)
    mean = float(ones @ kinv_y) / float(ones @ kinv_1)
    resid = ctx.y_means - mean
    alpha = kinv_y - mean * kinv_1
    logdet = 2.0 * float(np.sum(np.log(np.diag(c))))

    nll = 0.5 * float(resid @ alpha) + 0.5 * logdet + 0.5 * n * math.log(2.0 * math.pi)
    rep = counts > 1
    if np.any(rep):
        nll += 0.5 * float(
            np.sum((counts[rep] - 1) * np.log(2.0 * math.pi * noise[rep]))
            + np.sum(ctx.ss_per_loc[rep] / noise[rep])
            + np.sum(np.log(counts[rep]))
        )

    kinv = cho_solve((c, lower), np.eye(n))
    w = np.outer(alpha, alpha) - kinv  # d loglik / dK = w / 2

    grad = np.empty_like(params)
    d = ctx.diffsq.shape[0]
    for j in range(d):
        grad[j] = -0.5 * float(np.sum(w * ls_grads[j]))
    grad[d] = -0.5 * float(np.sum(w * k))
    if ctx.estimate_nugget:
        grad_means = -0.5 * float(np.diag(w) @ (noise / counts))
        grad_within = 0.0
        if np.any(rep):
            grad_within = 0.5 * float(
                np.sum(counts[rep] - 1) - np.sum(ctx.ss_per_loc[rep]) / g
            )
        grad[d + 1] = grad_means + grad_within
    return nll, grad


def _make_context(train: TrainingSet, y_shift: float, y_scale: float, *,
                  fixed_noise=None, estimate_nugget=False, fixed_nugget=None,
                  family: str = "matern_5_2") -> _LikContext:
    xu = train.x_unique
    means = (train.means - y_shift) / y_scale
    ss = np.where(
        train.counts > 1,
        np.nan_to_num(train.variances) * np.maximum(train.counts - 1, 0),
        0.0,
    ) / y_scale**2
    diff = xu[:, None, :] - xu[None, :, :]
    diffsq = np.moveaxis(diff**2, 2, 0)
    return _LikContext(
        family=family,
        xu=xu,
        diffsq=diffsq,
        y_means=means,
        counts=train.counts.astype(float),
        ss_per_loc=ss,
        n_total=len(train.y),
        fixed_noise=fixed_noise,
        estimate_nugget=estimate_nugget,
        fixed_nugget=fixed_nugget,
    )


def _optimize(ctx: _LikContext, d: int):
    """Multi-start bounded quasi-Newton ascent of the log likelihood.

    Five seeded starts; convergence requires the projected-gradient infinity
    norm below 1e-5 within 500 iterations.  Returns the best converged
    solution (ties to the lowest start index) plus per-start diagnostics.
    """
    bounds = [_LOG_LS_BOUNDS] * d + [_LOG_SV_BOUNDS]
    if ctx.estimate_nugget:
        bounds = bounds + [_LOG_NUGGET_BOUNDS]

    starts = [np.array([math.log(0.3)] * d + [0.0] + ([math.log(1e-2)] if ctx.estimate_nugget else []))]
    gen = rng.stream(0, rng.TAG_GP_STARTS, len(ctx.y_means), d)
    for _ in range(_N_STARTS - 1):
        s = np.array([gen.uniform(lo, hi) for lo, hi in bounds])
        starts.append(s)

    best = None
    diagnostics = []
    for idx, x0 in enumerate(starts):
        nll_at_start, _ = _neg_log_lik_and_grad(x0, ctx)
        res = minimize(
            _neg_log_lik_and_grad,
            x0,
            args=(ctx,),
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options={"maxiter": _MAX_ITER, "gtol": _GRAD_TOL, "ftol": 1e-15},
        )
        converged = bool(res.success)
        diagnostics.append(
            {"start": idx, "converged": converged, "nll": float(res.fun),
             "nll_at_start": float(nll_at_start), "message": str(res.message)}
        )
        if best is None or (converged and not best[2]) or (
            converged == best[2] and res.fun < best[1].fun
        ):
            best = (idx, res, converged)

    _, res, converged = best
    return res, converged, diagnostics


def _profiled_mean(kernel, xu, counts, tau2, y_means) -> float:
    k = kernel_cross(kernel, xu, xu)
    k[np.diag_indices_from(k)] += tau2 / counts + _BASE_JITTER
    c, lower = cho_factor(k, lower=True)
    ones = np.ones(len(y_means))
    kinv_y = cho_solve((c, lower), y_means)
    kinv_1 = cho_solve((c, lower), ones)
    return float(ones @ kinv_y) / float(ones @ kinv_1)


def _finalize_fit(train: TrainingSet, ctx: _LikContext, res, *, smoother,
                  y_shift, y_scale, diagnostics) -> HetGpFit:
    spec, g = _unpack(res.x, ctx)
    if ctx.fixed_noise is not None:
        tau2, nugget = ctx.fixed_noise, None
    else:
        tau2, nugget = np.full(train.n_unique, g), g
    counts = ctx.counts
    mean = _profiled_mean(spec, train.x_unique, counts, tau2, ctx.y_means)
    chol, alpha = _factorize(spec, train.x_unique, counts, tau2, ctx.y_means, mean)
    return HetGpFit(
        kernel=spec,
        mean_const=mean,
        x_unique=train.x_unique,
        counts=counts.astype(int),
        y_means_std=ctx.y_means,
        noise_tau2=tau2,
        nugget=nugget,
        noise_smoother=smoother,
        chol=chol,
        alpha=alpha,
        y_shift=y_shift,
        y_scale=y_scale,
        log_lik=-float(res.fun),
        diagnostics=diagnostics,
    )


def _standardization(y: np.ndarray) -> tuple[float, float]:
    shift = float(np.mean(y))
    scale = float(np.std(y))
    return shift, (scale if scale > 0 else 1.0)


def fit_gp(train: TrainingSet, nugget="estimated", family: str = "matern_5_2") -> HetGpFit:
    """Homoskedastic constant-mean GP fit by maximum likelihood.

    ``nugget`` is either ``"estimated"`` (noise variance optimized with the
    kernel) or a fixed value in native output-variance units.  Replicated
    observations are handled exactly through their means and within-replicate
    sums of squares.

    Raises
    ------
    FitFailedError
        If no optimizer start converges; the error carries the best-effort
        fit and per-start diagnostics.
    """
    d = train.d
    if train.n_unique < d + 2:
        raise ValueError(
            f"need at least d + 2 = {d + 2} unique locations, got {train.n_unique}"
        )
    y_shift, y_scale = _standardization(train.y)
    if nugget == "estimated":
        ctx = _make_context(train, y_shift, y_scale, estimate_nugget=True, family=family)
    else:
        fixed = max(float(nugget) / y_scale**2, _NOISE_FLOOR)
        ctx = _make_context(train, y_shift, y_scale, fixed_nugget=fixed, family=family)
    res, converged, diag = _optimize(ctx, d)
    diagnostics = {"starts": diag, "het": False, "fallback": False,
                   "converged": converged}
    fit = _finalize_fit(train, ctx, res, smoother=None, y_shift=y_shift,
                        y_scale=y_scale, diagnostics=diagnostics)
    if not converged:
        raise FitFailedError("fit failed: no optimizer start converged",
                             fit=fit, diagnostics=diagnostics)
    return fit


def _smooth_log_variance(train: TrainingSet, variances_std: np.ndarray,
                         mask: np.ndarray, family: str) -> tuple[HetGpFit, np.ndarray]:
    """Secondary GP on log empirical variances; returns it plus the field.

    The smoothed field is evaluated at every unique location and floored at
    the standardized noise floor.
    """
    log_v = np.log(np.maximum(variances_std[mask], 1e-300))
    sub = TrainingSet(train.x_unique[mask], log_v)
    try:
        smoother = fit_gp(sub, nugget="estimated", family=family)
    except FitFailedError as exc:
        smoother = exc.fit  # best effort: a rough noise field beats none
    field = predict(smoother, train.x_unique).mean
    return smoother, np.maximum(np.exp(field), _NOISE_FLOOR)


def fit_hetgp(train: TrainingSet, family: str = "matern_5_2") -> HetGpFit:
    """Replicate-based heteroskedastic GP (stochastic-kriging construction).

    Per-location empirical variances are smoothed on the log scale by a
    secondary GP; the mean-process GP is fit by maximum likelihood with the
    per-location noise fixed to the smoothed field (replicate means weighted
    by counts).  The noise-smooth/mean-fit cycle runs twice, the second pass
    re-estimating local variances from residuals against the first mean fit.

    With fewer than 5 locations carrying at least 2 replicates this falls
    back to :func:`fit_gp` with an estimated nugget (flagged in
    ``diagnostics["fallback"]``), which is the documented behaviour rather
    than an error.
    """
    d = train.d
    rep_mask = train.counts >= 2
    if int(rep_mask.sum()) < 5:
        fit = fit_gp(train, nugget="estimated", family=family)
        fit.diagnostics["fallback"] = True
        return fit
    if train.n_unique < d + 2:
        raise ValueError(
            f"need at least d + 2 = {d + 2} unique locations, got {train.n_unique}"
        )

    y_shift, y_scale = _standardization(train.y)
    var_std = train.variances / y_scale**2

    # Pass 1: smooth raw empirical variances, fit the mean process.
    smoother, tau2 = _smooth_log_variance(train, var_std, rep_mask, family)
    ctx = _make_context(train, y_shift, y_scale, fixed_noise=tau2, family=family)
    res, converged1, diag1 = _optimize(ctx, d)
    interim = _finalize_fit(train, ctx, res, smoother=smoother, y_shift=y_shift,
                            y_scale=y_scale, diagnostics={})

    # Pass 2: variances re-estimated around the interim predictive mean at
    # replicated locations (captures noise the sample mean absorbs), then
    # smoothed and fed back into a fresh mean fit.
    mu_hat = predict(interim, train.x_unique).mean
    resid_sq = (train.y - mu_hat[train.inverse]) ** 2
    ss = np.bincount(train.inverse, weights=resid_sq, minlength=train.n_unique)
    var2 = np.where(rep_mask, ss / np.maximum(train.counts, 1), np.nan) / y_scale**2
    smoother2, tau2_2 = _smooth_log_variance(train, var2, rep_mask, family)
    ctx2 = _make_context(train, y_shift, y_scale, fixed_noise=tau2_2, family=family)
    res2, converged2, diag2 = _optimize(ctx2, d)
    diagnostics = {
        "starts": diag2,
        "pass1_starts": diag1,
        "het": True,
        "fallback": False,
        "converged": converged2,
    }
    fit = _finalize_fit(train, ctx2, res2, smoother=smoother2, y_shift=y_shift,
                        y_scale=y_scale, diagnostics=diagnostics)
    if not (converged1 or converged2):
        raise FitFailedError("fit failed: no optimizer start converged",
                             fit=fit, diagnostics=diagnostics)
    return fit


def predict(fit: HetGpFit, x_new: np.ndarray) -> Prediction:
    """Posterior mean and variances at new scaled inputs.

    ``var_mean`` is the epistemic (mean-process) variance; ``var_obs`` adds
    the local observation noise, interpolated by the noise smoother for
    heteroskedastic fits.  Rows outside the unit cube are flagged as
    extrapolation but still predicted.
    """
    x_new = np.asarray(x_new, dtype=float)
    if x_new.ndim == 1:
        x_new = x_new.reshape(-1, fit.x_unique.shape[1])
    if x_new.shape[0] == 0:
        empty = np.empty(0)
        return Prediction(empty, empty.copy(), empty.copy(),
                          np.empty(0, dtype=bool))
    extrapolated = np.any((x_new < -1e-9) | (x_new > 1 + 1e-9), axis=1)

    k_star = kernel_cross(fit.kernel, x_new, fit.x_unique)
    mean_std = fit.mean_const + k_star @ fit.alpha
    v = cho_solve((fit.chol, True), k_star.T)
    var_mean = fit.kernel.signal_var - np.einsum("ij,ji->i", k_star, v)
    var_mean = np.maximum(var_mean, 0.0)

    if fit.noise_smoother is not None:
        noise = np.maximum(np.exp(predict(fit.noise_smoother, x_new).mean), _NOISE_FLOOR)
    else:
        noise = np.full(x_new.shape[0], fit.nugget)
    var_obs = var_mean + noise

    scale2 = fit.y_scale**2
    return Prediction(
        mean=fit.y_shift + fit.y_scale * mean_std,
        var_mean=scale2 * var_mean,
        var_obs=scale2 * var_obs,
        extrapolated=extrapolated,
    )


def coverage(fit: HetGpFit, holdout: TrainingSet, level: float = 0.95) -> float:
    """Fraction of holdout observations inside the predictive interval."""
    if len(holdout.y) == 0:
        raise ValueError("holdout is empty")
    pred = predict(fit, holdout.X)
    lo, hi = pred.interval(level)
    inside = (holdout.y >= lo) & (holdout.y <= hi)
    return float(np.mean(inside))
