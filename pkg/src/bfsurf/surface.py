"""Bayes factor surface sweeps.

Binds an evaluator (deterministic regression, noisy regression, or HLM) to a
design, runs the sweep with per-point derived seeds so parallel and serial
execution agree bit for bit, classifies evidence on the conventional
log-scale thresholds, and emits stable CSV/JSON exports.
"""

from __future__ import annotations

import csv
import io
import json
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__, hlm, reg, rng
from .design import Design
from .errors import BfsurfError, SweepFailedError
from .surrogate import TrainingSet

__all__ = [
    "EVALUATOR_KINDS",
    "EvaluatorSpec",
    "SurfaceSample",
    "EvidenceClass",
    "evaluate_surface",
    "classify",
    "export_surface",
    "import_surface_csv",
    "training_set_from_samples",
    "sweep_manifest",
]

EVALUATOR_KINDS = ("reg_closed", "reg_zs", "reg_bic", "reg_fractional", "reg_noisy", "hlm")

_REG_HYPERS = ("mu", "phi", "a", "b")


@dataclass(frozen=True)
class EvaluatorSpec:
    """An evaluator bound to its dataset and non-swept hyperparameter defaults.

    ``mapping`` sends design dimension names to hyperparameter names
    (identity by default); unmapped hyperparameters take the values in
    ``base``.
    """

    kind: str
    data: object
    base: dict | None = None
    mapping: dict | None = None
    n_draws: int = 10_000

    def __post_init__(self):
        if self.kind not in EVALUATOR_KINDS:
            raise ValueError(f"unknown evaluator kind {self.kind!r}")
        if self.kind == "hlm":
            if not isinstance(self.data, hlm.HlmDataset):
                raise ValueError("hlm evaluator requires an HlmDataset")
        elif not isinstance(self.data, reg.RegressionData):
            raise ValueError(f"{self.kind} evaluator requires RegressionData")

    @property
    def accepted_hypers(self) -> tuple[str, ...]:
        if self.kind in ("reg_closed", "reg_noisy"):
            return _REG_HYPERS
        if self.kind == "hlm":
            return hlm.SLICE_NAMES
        return ()

    def resolve_mapping(self, dim_names: list[str]) -> dict:
        accepted = self.accepted_hypers
        mapping = dict(self.mapping) if self.mapping else {}
        resolved = {}
        for name in dim_names:
            hyper = mapping.get(name, name)
            if hyper not in accepted:
                raise ValueError(
                    f"design dim {name!r} maps to {hyper!r}, not a hyperparameter "
                    f"of evaluator {self.kind!r} (accepts {list(accepted)})"
                )
            if hyper in resolved.values():
                raise ValueError(f"two design dims map to hyperparameter {hyper!r}")
            resolved[name] = hyper
        return resolved

    def base_hlm_hypers(self) -> hlm.HlmHypers:
        return hlm.hypers_from_dict(dict(self.base or {}))


@dataclass(frozen=True)
class SurfaceSample:
    """One evaluation at one design location/replicate."""

    location: tuple
    replicate: int
    log_bf: float
    std_err: float
    eval_seconds: float
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


_STRENGTHS = ("negligible", "positive", "strong", "very_strong")


@dataclass(frozen=True)
class EvidenceClass:
    """Evidence strength class and direction on the natural-log scale."""

    strength: str
    direction: str

    @property
    def label(self) -> str:
        return f"{self.strength}:{self.direction}"

    @property
    def rank(self) -> int:
        return _STRENGTHS.index(self.strength)


def classify(log_bf: float) -> EvidenceClass:
    """Strength thresholds 1/3/5 on |log BF|, boundaries to the lower class.

    Direction follows the sign, with 0 assigned to favors_M1.
    """
    if not math.isfinite(log_bf):
        raise ValueError(f"cannot classify non-finite log BF ({log_bf})")
    v = abs(log_bf)
    if v <= 1.0:
        strength = "negligible"
    elif v <= 3.0:
        strength = "positive"
    elif v <= 5.0:
        strength = "strong"
    else:
        strength = "very_strong"
    return EvidenceClass(strength, "favors_M1" if log_bf >= 0 else "favors_M2")


def _make_point_evaluator(spec: EvaluatorSpec, resolved: dict, dim_names: list[str],
                          seed: int):
    """Return a pure callable (loc_idx, rep_idx, point) -> (log_bf, std_err)."""
    kind = spec.kind
    base = dict(spec.base or {})

    if kind in ("reg_closed", "reg_noisy"):
        defaults = {"mu": 0.0, "phi": 1.0, "a": 1.0, "b": 1.0}
        defaults.update({k: v for k, v in base.items() if k in _REG_HYPERS})

        def evaluate(loc_idx, rep_idx, point):
            hy = dict(defaults)
            for name, value in zip(dim_names, point):
                hy[resolved[name]] = float(value)
            hypers = reg.RegressionHypers(**hy)
            if kind == "reg_closed":
                out = reg.log_bf_12(spec.data, hypers)
            else:
                child = rng.derive_seed(seed, loc_idx, rep_idx)
                out = reg.noisy_log_bf(spec.data, hypers, spec.n_draws, child)
            return out.value, out.std_err

        return evaluate

    if kind == "hlm":
        center_values = hlm.hypers_to_dict(spec.base_hlm_hypers())

        def evaluate(loc_idx, rep_idx, point):
            values = dict(center_values)
            for name, value in zip(dim_names, point):
                values[resolved[name]] = float(value)
            out = hlm.log_bf_hlm(spec.data, hlm.hypers_from_dict(values))
            return out.value, out.std_err

        return evaluate

    constant = {
        "reg_zs": reg.log_bf_zellner_siow,
        "reg_bic": reg.log_bf_bic,
        "reg_fractional": reg.log_bf_fractional,
    }[kind]

    def evaluate(loc_idx, rep_idx, point):
        out = constant(spec.data)
        return out.value, out.std_err

    return evaluate


def evaluate_surface(
    spec: EvaluatorSpec,
    design: Design,
    seed: int,
    workers: int = 1,
    on_progress=None,
) -> list[SurfaceSample]:
    """Run the sweep: one sample per (location, replicate), canonical order.

    Noisy evaluators are seeded per (seed, location index, replicate index),
    so the result is independent of the execution schedule; a failing point
    records an error-marker sample instead of aborting, and the sweep fails
    only if every point does.  ``on_progress`` receives completed fractions.
    """
    dim_names = design.box.names
    resolved = spec.resolve_mapping(dim_names)
    evaluate = _make_point_evaluator(spec, resolved, dim_names, seed)
    tasks = [
        (loc_idx, rep_idx)
        for loc_idx in range(design.n_locations)
        for rep_idx in range(design.replicates)
    ]
    total = len(tasks)
    done = 0
    done_lock = threading.Lock()

    def note_done():
        nonlocal done
        if on_progress is None:
            return
        with done_lock:
            done += 1
            current = done
        if current % max(total // 50, 1) == 0 or current == total:
            on_progress(current / total)

    def run(task):
        loc_idx, rep_idx = task
        point = tuple(float(v) for v in design.points[loc_idx])
        started = time.perf_counter()
        try:
            value, std_err = evaluate(loc_idx, rep_idx, point)
            sample = SurfaceSample(point, rep_idx, value, std_err,
                                   time.perf_counter() - started)
        except (BfsurfError, ValueError) as exc:
            sample = SurfaceSample(point, rep_idx, math.nan, math.nan,
                                   time.perf_counter() - started, error=str(exc))
        note_done()
        return sample

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            samples = list(pool.map(run, tasks))
    else:
        samples = [run(t) for t in tasks]

    if all(not s.ok for s in samples):
        raise SweepFailedError(
            f"all {len(samples)} points failed; first error: {samples[0].error}"
        )
    return samples


def _fmt(value: float) -> str:
    return format(value, ".17g")


def export_surface(samples: list[SurfaceSample], dim_names: list[str],
                   fmt: str = "csv") -> str:
    """Stable export with evidence classes; 17 significant digits round-trip."""
    if not samples:
        raise ValueError("cannot export an empty sample list")
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    rows = []
    for s in samples:
        label = classify(s.log_bf).label if s.ok else "error"
        rows.append((s, label))
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(list(dim_names) + ["replicate", "log_bf", "std_err", "class"])
        for s, label in rows:
            writer.writerow(
                [_fmt(v) for v in s.location]
                + [s.replicate]
                + ([_fmt(s.log_bf), _fmt(s.std_err)] if s.ok else ["", ""])
                + [label]
            )
        return buf.getvalue()
    payload = {
        "columns": list(dim_names) + ["replicate", "log_bf", "std_err", "class"],
        "samples": [
            {
                **{name: v for name, v in zip(dim_names, s.location)},
                "replicate": s.replicate,
                "log_bf": s.log_bf if s.ok else None,
                "std_err": s.std_err if s.ok else None,
                "class": label,
                **({"error": s.error} if s.error else {}),
            }
            for s, label in rows
        ],
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"


def import_surface_csv(text: str) -> tuple[list[str], list[SurfaceSample]]:
    """Parse a surface CSV export back into samples (full precision)."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or header[-3:] != ["log_bf", "std_err", "class"] or \
            "replicate" not in header:
        raise ValueError("not a surface export: unexpected header")
    rep_col = header.index("replicate")
    dim_names = header[:rep_col]
    samples = []
    for row in reader:
        if not row:
            continue
        location = tuple(float(v) for v in row[:rep_col])
        replicate = int(row[rep_col])
        if row[rep_col + 1] == "":
            samples.append(
                SurfaceSample(location, replicate, math.nan, math.nan, 0.0,
                              error="imported error marker")
            )
        else:
            samples.append(
                SurfaceSample(location, replicate, float(row[rep_col + 1]),
                              float(row[rep_col + 2]), 0.0)
            )
    return dim_names, samples


def export_predictions(dim_names: list[str], points: np.ndarray, pred) -> str:
    """Prediction CSV: input columns plus mean, sd_mean, sd_obs."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(dim_names) + ["mean", "sd_mean", "sd_obs"])
    for row, m, sm, so in zip(points, pred.mean, pred.sd_mean, pred.sd_obs):
        writer.writerow([_fmt(v) for v in row] + [_fmt(m), _fmt(sm), _fmt(so)])
    return buf.getvalue()


def training_set_from_samples(samples: list[SurfaceSample], design_box) -> TrainingSet:
    """Scale sample locations into the unit cube and pair with log-BF values."""
    good = [s for s in samples if s.ok]
    if not good:
        raise ValueError("no successful samples to train on")
    locations = np.array([s.location for s in good], dtype=float)
    y = np.array([s.log_bf for s in good], dtype=float)
    return TrainingSet(design_box.to_unit(locations), y)


def sweep_manifest(spec: EvaluatorSpec, design: Design, seed: int) -> dict:
    """Provenance record for a sweep (inputs, seed, software version)."""
    return {
        "version": __version__,
        "evaluator": {
            "kind": spec.kind,
            "base": spec.base or {},
            "mapping": spec.mapping or {},
            "n_draws": spec.n_draws if spec.kind == "reg_noisy" else None,
        },
        "design": design.to_json_dict(),
        "seed": seed,
    }
