"""Hierarchical linear model marginal likelihoods and Bayes factors.

Two models for grouped (school-style) data: per-group slopes and intercepts
(p = 2) versus per-group means only (p = 1).  Group effects carry a fixed-g
prior centered at a population mean with a normal hyperprior, and the error
precision carries a gamma prior.  Integrating group effects and the
population mean analytically reduces each marginal likelihood to a 1-D
integral over the error precision, evaluated by the trapezoid rule on the
log-precision scale.

Also here: CSV ingestion, data-driven default hyperparameters (including the
moment-matched g), 1-D hyperparameter slices of the log Bayes factor
surface, and a seeded synthetic dataset generator with the same shape as the
math-score study (100 groups, ~20 students each).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gammaln

from . import numerics, rng
from .errors import (
    CalibrationError,
    CsvFormatError,
    DegenerateGroupDesignError,
    GroupTooSmallError,
)
from .reg import LogBf

__all__ = [
    "HlmGroup",
    "HlmDataset",
    "HlmHypers",
    "HlmModelKind",
    "SLOPES_AND_INTERCEPTS",
    "MEANS_ONLY",
    "SliceResult",
    "load_hlm_csv",
    "log_marginal_hlm",
    "log_bf_hlm",
    "default_hlm_hypers",
    "hlm_slices",
    "synthetic_hlm",
    "SLICE_NAMES",
]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class HlmGroup:
    """One group's outcomes and its within-group-centered predictor."""

    group_id: str
    y: np.ndarray
    x_centered: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.x_centered, dtype=float)
        if len(y) != len(x) or y.ndim != 1:
            raise ValueError("y and x_centered must be 1-D vectors of equal length")
        if len(y) < 2:
            raise GroupTooSmallError(f"group too small: {self.group_id} has {len(y)} row(s)")
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x_centered", x - np.mean(x))

    @property
    def n(self) -> int:
        return len(self.y)


@dataclass(frozen=True)
class HlmDataset:
    """Grouped data; group order is preserved from ingestion."""

    groups: tuple[HlmGroup, ...]

    def __post_init__(self):
        if not self.groups:
            raise ValueError("dataset needs at least one group")
        object.__setattr__(self, "groups", tuple(self.groups))

    @property
    def m(self) -> int:
        return len(self.groups)

    @property
    def total_n(self) -> int:
        return sum(g.n for g in self.groups)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["school", "ses", "mathscore"])
        for g in self.groups:
            for x, y in zip(g.x_centered, g.y):
                writer.writerow([g.group_id, format(x, ".17g"), format(y, ".17g")])
        return buf.getvalue()

    def to_json_dict(self) -> dict:
        return {
            "groups": [
                {"school": g.group_id, "ses": g.x_centered.tolist(), "mathscore": g.y.tolist()}
                for g in self.groups
            ]
        }


@dataclass(frozen=True)
class HlmHypers:
    """Hyperparameter point of the 8-dimensional surface.

    ``mu0``/``lambda0`` are stored for the slopes-and-intercepts model
    (length 2 / 2x2); the means-only model reads their intercept components,
    which keeps the two models' priors comparable on the shared group-mean
    quantity.
    """

    g: float
    mu0: np.ndarray
    lambda0: np.ndarray
    nu0: float
    sigma0_sq: float

    def __post_init__(self):
        mu0 = np.atleast_1d(np.asarray(self.mu0, dtype=float))
        lam = np.atleast_2d(np.asarray(self.lambda0, dtype=float))
        if lam.shape != (len(mu0), len(mu0)):
            raise ValueError(f"lambda0 shape {lam.shape} incompatible with mu0 length {len(mu0)}")
        if not np.allclose(lam, lam.T, rtol=1e-10, atol=1e-12):
            raise ValueError("lambda0 must be symmetric")
        if np.any(np.linalg.eigvalsh(lam) <= 0):
            raise ValueError("lambda0 must be positive definite")
        if not (self.g > 0 and self.nu0 > 0 and self.sigma0_sq > 0):
            raise ValueError("g, nu0, sigma0_sq must be positive")
        object.__setattr__(self, "mu0", mu0)
        object.__setattr__(self, "lambda0", lam)

    def reduced(self, p: int) -> tuple[np.ndarray, np.ndarray]:
        """Prior mean/covariance blocks for a p-dimensional group effect."""
        if len(self.mu0) == p:
            return self.mu0, self.lambda0
        if len(self.mu0) == 2 and p == 1:
            return self.mu0[:1], self.lambda0[:1, :1]
        raise ValueError(f"hypers of dimension {len(self.mu0)} cannot serve p={p}")


@dataclass(frozen=True)
class HlmModelKind:
    kind: str

    def __post_init__(self):
        if self.kind not in ("slopes_and_intercepts", "means_only"):
            raise ValueError(f"unknown model kind {self.kind!r}")

    @property
    def p(self) -> int:
        return 2 if self.kind == "slopes_and_intercepts" else 1


SLOPES_AND_INTERCEPTS = HlmModelKind("slopes_and_intercepts")
MEANS_ONLY = HlmModelKind("means_only")


def load_hlm_csv(source) -> HlmDataset:
    """Read grouped data from CSV with header ``school,ses,mathscore``.

    Groups are assembled in order of first appearance and the predictor is
    centered within each group.  Malformed rows raise with their line
    number; groups with fewer than two rows are rejected.
    """
    if hasattr(source, "read"):
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()

    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or [h.strip().lower() for h in header] != ["school", "ses", "mathscore"]:
        raise CsvFormatError("expected header 'school,ses,mathscore'")
    by_school: dict[str, tuple[list, list]] = {}
    for line_no, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 3:
            raise CsvFormatError(f"line {line_no}: expected 3 fields, got {len(row)}")
        school = row[0].strip()
        if not school:
            raise CsvFormatError(f"line {line_no}: empty school id")
        try:
            ses, score = float(row[1]), float(row[2])
        except ValueError as exc:
            raise CsvFormatError(f"line {line_no}: non-numeric value ({exc})") from exc
        if not (math.isfinite(ses) and math.isfinite(score)):
            raise CsvFormatError(f"line {line_no}: missing or non-finite value")
        by_school.setdefault(school, ([], []))
        by_school[school][0].append(ses)
        by_school[school][1].append(score)

    groups = []
    for school, (ses, scores) in by_school.items():
        if len(scores) < 2:
            raise GroupTooSmallError(f"group too small: school {school!r} has {len(scores)} row(s)")
        groups.append(HlmGroup(school, np.array(scores), np.array(ses)))
    return HlmDataset(tuple(groups))


# --- sufficient statistics ------------------------------------------------


@dataclass(frozen=True)
class _GroupStats:
    n: int
    xtx: np.ndarray        # X'X, diagonal because the predictor is centered
    ytx: np.ndarray        # y'X
    yty: float
    ytx_beta: float        # y'X (X'X)^{-1} X'y, the fitted sum of squares
    beta_hat: np.ndarray


def _group_stats(group: HlmGroup, p: int) -> _GroupStats:
    y, xc, n = group.y, group.x_centered, group.n
    if p == 1:
        xtx = np.array([[float(n)]])
        ytx = np.array([float(np.sum(y))])
    else:
        sxx = float(xc @ xc)
        if sxx <= 0.0:
            raise DegenerateGroupDesignError(
                f"degenerate group design: constant predictor in group {group.group_id!r}"
            )
        xtx = np.diag([float(n), sxx])
        ytx = np.array([float(np.sum(y)), float(y @ xc)])
    beta_hat = ytx / np.diag(xtx)
    return _GroupStats(
        n=n,
        xtx=xtx,
        ytx=ytx,
        yty=float(y @ y),
        ytx_beta=float(ytx @ beta_hat),
        beta_hat=beta_hat,
    )


def _aggregate_stats(data: HlmDataset, p: int):
    stats = [_group_stats(g, p) for g in data.groups]
    sum_xtx = sum(s.xtx for s in stats)
    sum_ytx = sum(s.ytx for s in stats)
    sum_yty = sum(s.yty for s in stats)
    sum_fit = sum(s.ytx_beta for s in stats)
    return stats, sum_xtx, sum_ytx, sum_yty, sum_fit


def log_marginal_hlm(
    data: HlmDataset,
    model: HlmModelKind,
    hypers: HlmHypers,
    quad: numerics.QuadratureSpec = numerics.DEFAULT_PRECISION_QUAD,
) -> float:
    """Log marginal likelihood of an HLM via 1-D log-precision quadrature.

    Group effects and the population mean integrate analytically; what
    remains is an integral over the error precision whose integrand couples
    the pooled statistics S1, S2, s3 with the population-mean prior.
    """
    p = model.p
    mu0, lam0 = hypers.reduced(p)
    g, nu0, s0sq = hypers.g, hypers.nu0, hypers.sigma0_sq
    _, sum_xtx, sum_ytx, sum_yty, sum_fit = _aggregate_stats(data, p)
    m, big_n = data.m, data.total_n

    logdet_lam0, lam0_inv = numerics.chol_logdet_solve(lam0, np.eye(p))
    shrink = g / (g + 1.0)
    s2 = sum_xtx / (g + 1.0)
    s3 = sum_yty - shrink * sum_fit
    lam0inv_mu0 = lam0_inv @ mu0

    const = (
        -0.5 * big_n * _LOG_2PI
        - 0.5 * logdet_lam0
        - 0.5 * m * p * math.log1p(g)
        + 0.5 * nu0 * math.log(0.5 * nu0 * s0sq)
        - gammaln(0.5 * nu0)
        - 0.5 * float(mu0 @ lam0inv_mu0)
    )

    def integrand(gamma):
        gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
        k = len(gamma)
        a_mats = gamma[:, None, None] * s2[None, :, :] + lam0_inv[None, :, :]
        h = (gamma[:, None] / (g + 1.0)) * sum_ytx[None, :] + lam0inv_mu0[None, :]
        logdets, x = numerics.chol_logdet_solve(a_mats, h[:, :, None])
        quad_term = 0.5 * np.einsum("kp,kp->k", h, x[:, :, 0])
        out = (
            (0.5 * big_n + 0.5 * nu0 - 1.0) * np.log(gamma)
            - 0.5 * logdets
            - 0.5 * gamma * s3
            - 0.5 * nu0 * s0sq * gamma
            + quad_term
        )
        return out if k > 1 else float(out[0])

    return const + numerics.log_trapezoid(integrand, quad)


def log_bf_hlm(
    data: HlmDataset,
    hypers: HlmHypers,
    quad: numerics.QuadratureSpec = numerics.DEFAULT_PRECISION_QUAD,
) -> LogBf:
    """Log Bayes factor of slopes-and-intercepts over means-only."""
    value = log_marginal_hlm(data, SLOPES_AND_INTERCEPTS, hypers, quad) - log_marginal_hlm(
        data, MEANS_ONLY, hypers, quad
    )
    return LogBf(value=value, method="closed_quadrature")


def default_hlm_hypers(data: HlmDataset) -> HlmHypers:
    """Data-driven default hyperparameters.

    The population mean and its covariance come from per-group least-squares
    estimates, the error-variance scale from pooled within-group residuals,
    and g from moment-matching the empirical covariance of the estimates
    against the prior covariance's data-dependent shape (Frobenius
    projection of C onto the average inverse Gram, scaled by the plug-in
    precision).
    """
    if data.m < 3:
        raise CalibrationError(f"too few groups to calibrate: m={data.m}")
    stats = [_group_stats(g, 2) for g in data.groups]
    betas = np.array([s.beta_hat for s in stats])
    mu0 = betas.mean(axis=0)
    cov = np.cov(betas.T, ddof=1)
    if np.any(np.linalg.eigvalsh(cov) <= 1e-12):
        raise CalibrationError("degenerate between-group covariance of LS estimates")
    rss = sum(s.yty - s.ytx_beta for s in stats)
    dof = data.total_n - 2 * data.m
    if dof <= 0 or rss <= 0:
        raise CalibrationError("no residual degrees of freedom for the pooled variance")
    sigma0_sq = rss / dof
    gamma_hat = 1.0 / sigma0_sq
    avg_inv_gram = np.mean([np.diag(1.0 / np.diag(s.xtx)) for s in stats], axis=0)
    g = gamma_hat * float(np.sum(cov * avg_inv_gram)) / float(np.sum(avg_inv_gram**2))
    if g <= 0:
        raise CalibrationError(f"moment match produced non-positive g ({g})")
    return HlmHypers(g=g, mu0=mu0, lambda0=cov, nu0=1.0, sigma0_sq=sigma0_sq)


SLICE_NAMES = (
    "g",
    "mu0_1",
    "mu0_2",
    "lambda0_11",
    "lambda0_22",
    "lambda0_12",
    "nu0",
    "sigma0_sq",
)


def hypers_with(center: HlmHypers, name: str, value: float) -> HlmHypers:
    """Center hypers with one scalar component replaced (validation applies)."""
    if name == "g":
        return replace(center, g=value)
    if name == "nu0":
        return replace(center, nu0=value)
    if name == "sigma0_sq":
        return replace(center, sigma0_sq=value)
    if name in ("mu0_1", "mu0_2"):
        mu0 = center.mu0.copy()
        mu0[0 if name == "mu0_1" else 1] = value
        return replace(center, mu0=mu0)
    if name in ("lambda0_11", "lambda0_22", "lambda0_12"):
        lam = center.lambda0.copy()
        if name == "lambda0_11":
            lam[0, 0] = value
        elif name == "lambda0_22":
            lam[1, 1] = value
        else:
            lam[0, 1] = lam[1, 0] = value
        return replace(center, lambda0=lam)
    raise ValueError(f"unknown hyperparameter {name!r}")


def hypers_to_dict(center: HlmHypers) -> dict:
    return {name: hyper_value(center, name) for name in SLICE_NAMES}


def hypers_from_dict(values: dict) -> HlmHypers:
    """Build hypers from the eight scalar components in one validation step."""
    missing = [k for k in SLICE_NAMES if k not in values]
    if missing:
        raise ValueError(f"missing hyperparameters {missing}")
    lam = np.array(
        [[values["lambda0_11"], values["lambda0_12"]],
         [values["lambda0_12"], values["lambda0_22"]]]
    )
    return HlmHypers(
        g=values["g"],
        mu0=np.array([values["mu0_1"], values["mu0_2"]]),
        lambda0=lam,
        nu0=values["nu0"],
        sigma0_sq=values["sigma0_sq"],
    )


def hyper_value(center: HlmHypers, name: str) -> float:
    getters = {
        "g": lambda h: h.g,
        "mu0_1": lambda h: h.mu0[0],
        "mu0_2": lambda h: h.mu0[1],
        "lambda0_11": lambda h: h.lambda0[0, 0],
        "lambda0_22": lambda h: h.lambda0[1, 1],
        "lambda0_12": lambda h: h.lambda0[0, 1],
        "nu0": lambda h: h.nu0,
        "sigma0_sq": lambda h: h.sigma0_sq,
    }
    return float(getters[name](center))


def _slice_grid(center: HlmHypers, name: str, k: int) -> np.ndarray:
    if k == 1:
        return np.array([hyper_value(center, name)])
    v = hyper_value(center, name)
    if name == "g":
        return np.logspace(-1.0, 4.0, k)
    if name in ("lambda0_11", "lambda0_22", "nu0", "sigma0_sq"):
        return np.logspace(math.log10(v / 100.0), math.log10(v * 100.0), k)
    if name in ("mu0_1", "mu0_2"):
        sd = math.sqrt(center.lambda0[0, 0] if name == "mu0_1" else center.lambda0[1, 1])
        half = 3.0 * sd if sd > 0 else max(abs(v), 1.0)
        return np.linspace(v - half, v + half, k)
    if name == "lambda0_12":
        rho_max = math.sqrt(center.lambda0[0, 0] * center.lambda0[1, 1])
        return np.linspace(-0.95 * rho_max, 0.95 * rho_max, k)
    raise ValueError(f"unknown hyperparameter {name!r}")


@dataclass(frozen=True)
class SliceResult:
    """One hyperparameter's 1-D slice of the log Bayes factor surface."""

    name: str
    grid: np.ndarray
    log_bf: np.ndarray          # NaN where skipped
    skipped: np.ndarray         # True where the point violated validity
    center_value: float


def hlm_slices(
    data: HlmDataset,
    center: HlmHypers,
    points_per_slice: int = 15,
    quad: numerics.QuadratureSpec = numerics.DEFAULT_PRECISION_QUAD,
    grids: dict[str, np.ndarray] | None = None,
) -> list[SliceResult]:
    """Evaluate the log-BF along each of the eight 1-D hyperparameter slices.

    Positive-constrained hyperparameters sweep log-spaced grids, the rest
    linear ones; off-diagonal prior-covariance values that would break
    positive definiteness are skipped and flagged rather than failing the
    sweep.  ``grids`` overrides the default grid per hyperparameter name.
    """
    if points_per_slice < 1:
        raise ValueError("points_per_slice must be >= 1")
    results = []
    for name in SLICE_NAMES:
        if grids is not None and name in grids:
            grid = np.asarray(grids[name], dtype=float)
        else:
            grid = _slice_grid(center, name, points_per_slice)
        values = np.full(len(grid), np.nan)
        skipped = np.zeros(len(grid), dtype=bool)
        for i, value in enumerate(grid):
            try:
                hypers_i = hypers_with(center, name, float(value))
            except ValueError:
                skipped[i] = True
                continue
            values[i] = log_bf_hlm(data, hypers_i, quad).value
        results.append(
            SliceResult(
                name=name,
                grid=grid,
                log_bf=values,
                skipped=skipped,
                center_value=hyper_value(center, name),
            )
        )
    return results


def slices_to_csv(slices: list[SliceResult]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["hyper", "grid_value", "log_bf"])
    for s in slices:
        for value, lbf in zip(s.grid, s.log_bf):
            writer.writerow([s.name, format(value, ".17g"),
                             "" if math.isnan(lbf) else format(lbf, ".17g")])
    return buf.getvalue()


def slices_to_json_dict(slices: list[SliceResult]) -> dict:
    return {
        "slices": [
            {
                "hyper": s.name,
                "grid": s.grid.tolist(),
                "log_bf": [None if math.isnan(v) else v for v in s.log_bf],
                "skipped": s.skipped.tolist(),
                "center_value": s.center_value,
            }
            for s in slices
        ]
    }


def default_hyperbox(center: HlmHypers):
    """8-D evaluation box around calibrated defaults, SPD-safe everywhere.

    The prior-covariance off-diagonal is bounded by the worst-case (lowest)
    diagonal values of its own box ranges, so every box point yields a valid
    positive-definite prior covariance.
    """
    from .design import Dim, HyperBox

    sd1 = math.sqrt(center.lambda0[0, 0])
    sd2 = math.sqrt(center.lambda0[1, 1])
    l11_lo, l11_hi = center.lambda0[0, 0] / 100.0, center.lambda0[0, 0] * 100.0
    l22_lo, l22_hi = center.lambda0[1, 1] / 100.0, center.lambda0[1, 1] * 100.0
    off_max = 0.9 * math.sqrt(l11_lo * l22_lo)
    return HyperBox((
        Dim("g", 0.1, 1e4, "log10"),
        Dim("mu0_1", center.mu0[0] - 3 * sd1, center.mu0[0] + 3 * sd1),
        Dim("mu0_2", center.mu0[1] - 3 * sd2, center.mu0[1] + 3 * sd2),
        Dim("lambda0_11", l11_lo, l11_hi, "log10"),
        Dim("lambda0_22", l22_lo, l22_hi, "log10"),
        Dim("lambda0_12", -off_max, off_max),
        Dim("nu0", 0.01, 100.0, "log10"),
        Dim("sigma0_sq", center.sigma0_sq / 100.0, center.sigma0_sq * 100.0, "log10"),
    ))


def synthetic_hlm(
    seed: int = 0,
    m: int = 100,
    min_students: int = 15,
    max_students: int = 25,
    theta: tuple[float, float] = (47.0, 2.3),
    g: float = 7.5,
    sigma2: float = 80.0,
) -> HlmDataset:
    """Seeded synthetic dataset with the math-score study's shape.

    Group effects are drawn from the slopes-and-intercepts model itself:
    per-group coefficients around ``theta`` with covariance (g/precision)
    times the inverse Gram of that group's design.
    """
    gen = rng.stream(seed, rng.TAG_HLM_SYNTH)
    sigma = math.sqrt(sigma2)
    groups = []
    for j in range(m):
        n_j = int(gen.integers(min_students, max_students + 1))
        x = gen.normal(0.0, 1.0, size=n_j)
        xc = x - x.mean()
        sxx = float(xc @ xc)
        scale = np.sqrt(g * sigma2 / np.array([n_j, sxx]))
        beta_j = np.asarray(theta) + scale * gen.normal(size=2)
        y = beta_j[0] + beta_j[1] * xc + sigma * gen.normal(size=n_j)
        groups.append(HlmGroup(f"school_{j + 1:03d}", y, xc))
    return HlmDataset(tuple(groups))


def mixed_model_bic_delta(data: HlmDataset):
    """BIC difference (means-only minus slopes-and-intercepts) from ML mixed fits.

    External-comparison utility: fits standard linear mixed models (random
    intercept vs random intercept+slope) by maximum likelihood and returns
    (bic_slopes, bic_means, delta).  Requires the optional statsmodels
    dependency.
    """
    try:
        import pandas as pd
        import statsmodels.formula.api as smf
    except ImportError as exc:  # pragma: no cover - optional extra
        raise ImportError("mixed_model_bic_delta requires statsmodels (extra 'mixedlm')") from exc

    rows = [
        {"school": grp.group_id, "ses": x, "mathscore": y}
        for grp in data.groups
        for x, y in zip(grp.x_centered, grp.y)
    ]
    frame = pd.DataFrame(rows)
    fit_slopes = smf.mixedlm(
        "mathscore ~ ses", frame, groups=frame["school"], re_formula="~ses"
    ).fit(reml=False)
    fit_means = smf.mixedlm("mathscore ~ 1", frame, groups=frame["school"]).fit(reml=False)

    def bic(result):
        k = result.params.shape[0]
        return -2.0 * result.llf + k * math.log(len(frame))

    bic_slopes, bic_means = bic(fit_slopes), bic(fit_means)
    return bic_slopes, bic_means, bic_means - bic_slopes
