"""Evaluation designs over hyperparameter boxes.

Dense factorial grids, replicated designs, and space-filling maximin Latin
hypercube samples.  Each box dimension carries its own linear or log10
scaling; designs are generated in the scaled unit cube and stored in native
units.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial.distance import cdist

from . import rng
from .errors import GridTooLargeError

__all__ = ["Dim", "HyperBox", "Design", "grid_design", "lhs_maximin", "with_replicates"]

GRID_SIZE_CAP = 1_000_000


@dataclass(frozen=True)
class Dim:
    """One box dimension: bounds plus the scale the design works on."""

    name: str
    lower: float
    upper: float
    scale: str = "linear"

    def __post_init__(self):
        if self.scale not in ("linear", "log10"):
            raise ValueError(f"unknown scale {self.scale!r}")
        if not self.upper > self.lower:
            raise ValueError(f"dim {self.name!r}: upper must exceed lower")
        if self.scale == "log10" and self.lower <= 0:
            raise ValueError(f"dim {self.name!r}: log10 scale requires lower > 0")


@dataclass(frozen=True)
class HyperBox:
    dims: tuple[Dim, ...]

    def __post_init__(self):
        dims = tuple(self.dims)
        if not dims:
            raise ValueError("box needs at least one dimension")
        names = [d.name for d in dims]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate dimension names in {names}")
        object.__setattr__(self, "dims", dims)

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.dims]

    def to_unit(self, points: np.ndarray) -> np.ndarray:
        """Map native-unit points (n, d) into the scaled unit cube."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.empty_like(points)
        for k, dim in enumerate(self.dims):
            if dim.scale == "log10":
                lo, hi = math.log10(dim.lower), math.log10(dim.upper)
                out[:, k] = (np.log10(points[:, k]) - lo) / (hi - lo)
            else:
                out[:, k] = (points[:, k] - dim.lower) / (dim.upper - dim.lower)
        return out

    def from_unit(self, unit: np.ndarray) -> np.ndarray:
        """Map scaled unit-cube points (n, d) back to native units."""
        unit = np.atleast_2d(np.asarray(unit, dtype=float))
        out = np.empty_like(unit)
        for k, dim in enumerate(self.dims):
            if dim.scale == "log10":
                lo, hi = math.log10(dim.lower), math.log10(dim.upper)
                out[:, k] = 10.0 ** (lo + unit[:, k] * (hi - lo))
            else:
                out[:, k] = dim.lower + unit[:, k] * (dim.upper - dim.lower)
        return out

    def to_json_dict(self) -> dict:
        return {
            "dims": [
                {"name": d.name, "lower": d.lower, "upper": d.upper, "scale": d.scale}
                for d in self.dims
            ]
        }

    @classmethod
    def from_json_dict(cls, payload: dict) -> "HyperBox":
        return cls(tuple(Dim(e["name"], e["lower"], e["upper"], e["scale"])
                         for e in payload["dims"]))


@dataclass(frozen=True)
class Design:
    """Evaluation locations in native units plus a replicate count."""

    box: HyperBox
    points: np.ndarray
    replicates: int = 1

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[1] != self.box.d:
            raise ValueError(f"points have {pts.shape[1]} columns for a {self.box.d}-D box")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        unit = self.box.to_unit(pts)
        if np.any(unit < -1e-9) or np.any(unit > 1 + 1e-9):
            raise ValueError("design points must lie inside the box")
        object.__setattr__(self, "points", pts)

    @property
    def n_locations(self) -> int:
        return self.points.shape[0]

    @property
    def n_evaluations(self) -> int:
        return self.points.shape[0] * self.replicates

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.box.names + ["replicate"])
        for row in self.points:
            for rep in range(self.replicates):
                writer.writerow([format(v, ".17g") for v in row] + [rep])
        return buf.getvalue()

    def to_json_dict(self) -> dict:
        return {
            "box": self.box.to_json_dict(),
            "points": self.points.tolist(),
            "replicates": self.replicates,
        }


def grid_design(box: HyperBox, counts: list[int]) -> Design:
    """Full factorial design, equispaced on each dimension's scaled axis.

    A count of 1 degenerates to the scaled midpoint.  The first dimension
    varies slowest.
    """
    if len(counts) != box.d:
        raise ValueError(f"need {box.d} counts, got {len(counts)}")
    if any(c < 1 for c in counts):
        raise ValueError("counts must be >= 1")
    total = math.prod(counts)
    if total > GRID_SIZE_CAP:
        raise GridTooLargeError(f"grid too large: {total} > {GRID_SIZE_CAP}")
    axes = [np.linspace(0.0, 1.0, c) if c > 1 else np.array([0.5]) for c in counts]
    mesh = np.meshgrid(*axes, indexing="ij")
    unit = np.column_stack([m.ravel() for m in mesh])
    return Design(box=box, points=box.from_unit(unit), replicates=1)


def _plain_lhs(n: int, d: int, gen: np.random.Generator) -> np.ndarray:
    """Stratified Latin hypercube in the unit cube, one point per bin."""
    u = np.empty((n, d))
    for k in range(d):
        perm = gen.permutation(n)
        u[:, k] = (perm + gen.uniform(0.0, 1.0, size=n)) / n
    return u


def _refresh_row(d2: np.ndarray, x: np.ndarray, r: int) -> None:
    diff = x - x[r]
    row = np.einsum("nd,nd->n", diff, diff)
    row[r] = np.inf
    d2[r, :] = row
    d2[:, r] = row


def _maximin_swap_optimize(
    x: np.ndarray,
    gen: np.random.Generator,
    sweeps: int,
    batch: int | None = None,
) -> tuple[np.ndarray, list[float]]:
    """Greedy swap ascent of the minimum pairwise distance of an LHS.

    Proposes within-column value swaps (preserving the Latin property),
    accepting only swaps that strictly increase the minimum squared pairwise
    distance.  One sweep is a batch of proposals evaluated against the
    current design, of which the best improving swap (if any) is applied.
    Proposals focus on rows attaining the current minimum, the only swaps
    that can improve it.  Returns the improved design and the (strictly
    increasing) history of the objective at each accepted swap.
    """
    n, d = x.shape
    history: list[float] = []
    if n < 3 or sweeps <= 0:
        return x, history
    b = min(n, 256) if batch is None else batch

    d2 = cdist(x, x, "sqeuclidean")
    np.fill_diagonal(d2, np.inf)
    row_min = d2.min(axis=1)
    row_arg = d2.argmin(axis=1)
    gmin = float(row_min.min())
    history.append(math.sqrt(gmin))

    since_accept = 0
    for _ in range(sweeps):
        if since_accept * b >= n:  # a full pass without improvement: plateau
            break

        min_rows = np.flatnonzero(row_min <= gmin * (1.0 + 1e-12))
        i_b = min_rows[gen.integers(0, len(min_rows), size=b)]
        j_b = gen.integers(0, n - 1, size=b)
        j_b = np.where(j_b >= i_b, j_b + 1, j_b)  # uniform over rows != i
        d_b = gen.integers(0, d, size=b)

        xs = x[:, d_b].T                       # (b, n) column d_b for all rows
        xi = x[i_b, d_b][:, None]
        xj = x[j_b, d_b][:, None]
        rows_i = d2[i_b, :] + (xj - xs) ** 2 - (xi - xs) ** 2
        rows_j = d2[j_b, :] + (xi - xs) ** 2 - (xj - xs) ** 2
        ar = np.arange(b)
        pair_val = d2[i_b, j_b]                # distance i-j is swap-invariant
        rows_i[ar, i_b] = np.inf
        rows_i[ar, j_b] = pair_val
        rows_j[ar, j_b] = np.inf
        rows_j[ar, i_b] = pair_val
        new_pair_min = np.minimum(rows_i.min(axis=1), rows_j.min(axis=1))

        cand = np.flatnonzero(new_pair_min > gmin)
        if cand.size == 0:
            since_accept += 1
            continue

        # Exact objective for surviving candidates: min over pairs not
        # touching rows i or j, then combined with the fresh rows.  Scanning
        # in descending order of the fresh-row bound lets us stop as soon as
        # the bound cannot beat the best objective found (exact argmax).
        cand = cand[np.argsort(-new_pair_min[cand], kind="stable")]
        best_k = -1
        best_obj = gmin
        for k in cand:
            if new_pair_min[k] <= best_obj:
                break
            i, j = int(i_b[k]), int(j_b[k])
            stale = (row_arg == i) | (row_arg == j)
            stale[i] = stale[j] = False
            keep = row_min.copy()
            keep[i] = keep[j] = np.inf
            if np.any(stale):
                sub = d2[stale].copy()
                sub[:, i] = np.inf
                sub[:, j] = np.inf
                keep[stale] = sub.min(axis=1)
            min_excl = float(keep.min())
            obj = min(min_excl, float(new_pair_min[k]))
            if obj > best_obj:
                best_obj = obj
                best_k = int(k)

        if best_k < 0:
            since_accept += 1
            continue

        i, j, dim = int(i_b[best_k]), int(j_b[best_k]), int(d_b[best_k])
        x[i, dim], x[j, dim] = x[j, dim], x[i, dim]
        _refresh_row(d2, x, i)
        _refresh_row(d2, x, j)
        # Per-row minima: rows i/j recompute; stale argmins recompute; the
        # rest can only improve through the two refreshed columns.
        stale = (row_arg == i) | (row_arg == j)
        stale[i] = stale[j] = True
        row_min[stale] = d2[stale].min(axis=1)
        row_arg[stale] = d2[stale].argmin(axis=1)
        fresh = np.minimum(d2[:, i], d2[:, j])
        better = ~stale & (fresh < row_min)
        row_min[better] = fresh[better]
        row_arg[better] = np.where(d2[better, i] <= d2[better, j], i, j)
        gmin = float(row_min.min())
        history.append(math.sqrt(gmin))
        since_accept = 0

    return x, history


def lhs_maximin(
    box: HyperBox,
    n: int,
    seed: int,
    restarts: int = 20,
    sweeps: int = 50,
) -> Design:
    """Space-filling maximin Latin hypercube design.

    Builds a stratified (bin-jittered) LHS per restart and improves it by
    swap ascent on the minimum pairwise distance in the scaled unit cube;
    the best restart wins, ties broken by the lowest restart index.
    With ``sweeps=0`` the plain (un-optimized) LHS of restart 0 is returned.
    Deterministic given the seed.
    """
    if n < 2:
        raise ValueError("need n >= 2 design points")
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    d = box.d
    best_u, best_obj = None, -np.inf
    for r in range(restarts):
        gen = rng.stream(seed, rng.TAG_LHS, r)
        u = _plain_lhs(n, d, gen)
        u, _ = _maximin_swap_optimize(u, gen, sweeps=sweeps)
        obj = _min_pairwise_distance(u)
        if obj > best_obj:
            best_obj, best_u = obj, u
    return Design(box=box, points=box.from_unit(best_u), replicates=1)


def _min_pairwise_distance(u: np.ndarray) -> float:
    d2 = cdist(u, u, "sqeuclidean")
    np.fill_diagonal(d2, np.inf)
    return float(math.sqrt(d2.min()))


def with_replicates(design: Design, r: int) -> Design:
    """Same locations with the replicate count set."""
    if r < 1:
        raise ValueError("replicates must be >= 1")
    return replace(design, replicates=r)
