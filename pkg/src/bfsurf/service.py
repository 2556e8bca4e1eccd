"""HTTP JSON API powering the interactive explorer.

Synchronous endpoints for cheap evaluations (single Bayes factors, prior
densities, HLM slices, surrogate prediction) and content-addressed
asynchronous jobs for sweeps and surrogate fits.  Results are the same
CSV/JSON artifacts the CLI writes, so API and CLI outputs are byte-identical
for identical inputs and seeds.

Validation failures return 400 with field-level messages; computation errors
surface as 422 with the originating module's error text.
"""

from __future__ import annotations

import json
import math
import os
from pathlib import Path
from typing import Literal

import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field, model_validator
from scipy import stats

from . import __version__, design, hlm, reg, surface, surrogate
from .errors import BfsurfError
from .jobs import JobStore

__all__ = ["create_app"]

DEFAULT_WORKERS = 2
PREDICT_MESH_CAP = 60 * 60


# --- payload models --------------------------------------------------------


class XYData(BaseModel):
    x: list[float]
    y: list[float]

    @model_validator(mode="after")
    def _check(self):
        if len(self.x) != len(self.y):
            raise ValueError("x and y must have equal length")
        if len(self.x) < 2:
            raise ValueError("need at least two observations")
        return self

    def to_data(self) -> reg.RegressionData:
        return reg.RegressionData(np.array(self.x), np.array(self.y))


class RegHypers(BaseModel):
    mu: float = 0.0
    phi: float = Field(default=1.0, gt=0)
    a: float = Field(default=1.0, gt=0)
    b: float = Field(default=1.0, gt=0)

    def to_hypers(self) -> reg.RegressionHypers:
        return reg.RegressionHypers(mu=self.mu, phi=self.phi, a=self.a, b=self.b)


class SimulateRequest(BaseModel):
    n: int = Field(default=30, ge=3)
    alpha: float = 0.0
    beta: float = 2.5
    sigma2: float = Field(default=1.0, ge=0)
    seed: int = 1


class BfRequest(BaseModel):
    data: XYData
    hypers: RegHypers = RegHypers()
    fractional_m: int = Field(default=3, ge=1)


class GridDim(BaseModel):
    """One mesh dimension; for log10 scale, lower/upper are base-10 exponents."""

    name: str
    scale: Literal["linear", "log10"] = "linear"
    lower: float
    upper: float
    count: int = Field(default=15, ge=1)

    def to_dim(self) -> design.Dim:
        if self.scale == "log10":
            return design.Dim(self.name, 10.0**self.lower, 10.0**self.upper, "log10")
        return design.Dim(self.name, self.lower, self.upper, "linear")


class BoxDim(BaseModel):
    name: str
    scale: Literal["linear", "log10"] = "linear"
    lower: float
    upper: float

    def to_dim(self) -> design.Dim:
        if self.scale == "log10":
            return design.Dim(self.name, 10.0**self.lower, 10.0**self.upper, "log10")
        return design.Dim(self.name, self.lower, self.upper, "linear")


class HlmSource(BaseModel):
    csv: str | None = None
    synthetic_seed: int = 0

    def to_dataset(self) -> hlm.HlmDataset:
        if self.csv is not None:
            import io

            return hlm.load_hlm_csv(io.StringIO(self.csv))
        return hlm.synthetic_hlm(seed=self.synthetic_seed)


class SurfaceRequest(BaseModel):
    evaluator: Literal[
        "reg_closed", "reg_zs", "reg_bic", "reg_fractional", "reg_noisy", "hlm"
    ] = "reg_closed"
    data: XYData | None = None
    hlm_source: HlmSource | None = None
    base: dict[str, float] = {}
    grid: list[GridDim] = Field(min_length=1)
    replicates: int = Field(default=1, ge=1)
    seed: int = 0
    n_draws: int = Field(default=10_000, ge=1_000)


class SlicesRequest(BaseModel):
    source: HlmSource = HlmSource()
    points_per_slice: int = Field(default=15, ge=1)
    center: dict[str, float] = {}
    with_gp: bool = True
    gp_mesh: int = Field(default=60, ge=8, le=400)


class SurrogateFitRequest(BaseModel):
    surface_csv: str | None = None
    job_id: str | None = None
    box: list[BoxDim] | None = None
    het: bool = True

    @model_validator(mode="after")
    def _check(self):
        if (self.surface_csv is None) == (self.job_id is None):
            raise ValueError("provide exactly one of surface_csv or job_id")
        if self.surface_csv is not None and self.box is None:
            raise ValueError("box is required with surface_csv")
        return self


class PredictRequest(BaseModel):
    fit: dict | None = None
    fit_job_id: str | None = None
    grid: list[GridDim] = Field(min_length=1)

    @model_validator(mode="after")
    def _check(self):
        if (self.fit is None) == (self.fit_job_id is None):
            raise ValueError("provide exactly one of fit or fit_job_id")
        return self


# --- helpers ---------------------------------------------------------------


def _job_payload(record) -> dict:
    return {
        "job_id": record.job_id,
        "kind": record.kind,
        "status": record.status,
        "progress": record.progress,
        "result_locator": record.result_locator,
        "error": record.error,
    }


def _build_surface_inputs(req: SurfaceRequest):
    if req.evaluator == "hlm":
        if req.hlm_source is None:
            raise ValueError("hlm evaluator requires hlm_source")
        dataset = req.hlm_source.to_dataset()
        base = _hlm_base_dict(dataset, req.base)
    else:
        if req.data is None:
            raise ValueError(f"{req.evaluator} evaluator requires data")
        dataset = req.data.to_data()
        base = dict(req.base)
    box = design.HyperBox(tuple(d.to_dim() for d in req.grid))
    grid = design.grid_design(box, [d.count for d in req.grid])
    grid = design.with_replicates(grid, req.replicates)
    spec = surface.EvaluatorSpec(req.evaluator, dataset, base=base, n_draws=req.n_draws)
    return spec, grid


def _hlm_base_dict(dataset: hlm.HlmDataset, overrides: dict) -> dict:
    center = hlm.default_hlm_hypers(dataset)
    base = {name: hlm.hyper_value(center, name) for name in hlm.SLICE_NAMES}
    unknown = set(overrides) - set(hlm.SLICE_NAMES)
    if unknown:
        raise ValueError(f"unknown hlm hyperparameters {sorted(unknown)}")
    base.update(overrides)
    return base


def _run_surface_job(req: SurfaceRequest, job_dir: Path, progress) -> None:
    spec, grid = _build_surface_inputs(req)
    samples = surface.evaluate_surface(spec, grid, req.seed, on_progress=progress)
    names = grid.box.names
    (job_dir / "result.csv").write_text(surface.export_surface(samples, names, "csv"))
    (job_dir / "result.json").write_text(surface.export_surface(samples, names, "json"))
    manifest = surface.sweep_manifest(spec, grid, req.seed)
    (job_dir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=1)
    )


def _load_fit_inputs(store: JobStore, req: SurrogateFitRequest):
    if req.surface_csv is not None:
        names, samples = surface.import_surface_csv(req.surface_csv)
        box = design.HyperBox(tuple(d.to_dim() for d in req.box))
        if box.names != names:
            raise ValueError(f"box dims {box.names} do not match surface dims {names}")
        return samples, box
    record = store.get(req.job_id)
    if record is None or record.status != "done":
        raise ValueError(f"job {req.job_id!r} is not a completed sweep")
    job_dir = store.result_dir(req.job_id)
    _, samples = surface.import_surface_csv((job_dir / "result.csv").read_text())
    manifest = json.loads((job_dir / "manifest.json").read_text())
    box = design.HyperBox.from_json_dict(manifest["design"]["box"])
    return samples, box


def _run_fit_job(store: JobStore, req: SurrogateFitRequest, job_dir: Path, progress) -> None:
    samples, box = _load_fit_inputs(store, req)
    train = surface.training_set_from_samples(samples, box)
    progress(0.1)
    fit = surrogate.fit_hetgp(train) if req.het else surrogate.fit_gp(train, "estimated")
    payload = {"fit": fit.to_json_dict(), "box": box.to_json_dict(), "het": req.het}
    (job_dir / "fit.json").write_text(json.dumps(payload, sort_keys=True))


def _predictions_payload(fit: surrogate.HetGpFit, box: design.HyperBox,
                         grid_dims: list[GridDim]) -> dict:
    mesh_box = design.HyperBox(tuple(d.to_dim() for d in grid_dims))
    if mesh_box.names != box.names:
        raise ValueError(f"grid dims {mesh_box.names} do not match fit dims {box.names}")
    total = math.prod(d.count for d in grid_dims)
    if total > PREDICT_MESH_CAP:
        raise ValueError(f"prediction mesh too large: {total} > {PREDICT_MESH_CAP}")
    mesh = design.grid_design(mesh_box, [d.count for d in grid_dims])
    pred = surrogate.predict(fit, box.to_unit(mesh.points))
    csv_text = surface.export_predictions(box.names, mesh.points, pred)
    z95 = float(stats.norm.ppf(0.975))
    return {
        "columns": box.names + ["mean", "sd_mean", "sd_obs"],
        "points": mesh.points.tolist(),
        "counts": [d.count for d in grid_dims],
        "mean": pred.mean.tolist(),
        "sd_mean": pred.sd_mean.tolist(),
        "sd_obs": pred.sd_obs.tolist(),
        "band95_lo": (pred.mean - z95 * pred.sd_obs).tolist(),
        "band95_hi": (pred.mean + z95 * pred.sd_obs).tolist(),
        "class": [surface.classify(v).label for v in pred.mean],
        "csv": csv_text,
    }


def _slice_gp_payload(slice_result: hlm.SliceResult, mesh_points: int) -> dict | None:
    mask = ~slice_result.skipped & np.isfinite(slice_result.log_bf)
    grid = slice_result.grid[mask]
    values = slice_result.log_bf[mask]
    if len(grid) < 3 or float(grid.max()) <= float(grid.min()):
        return None
    log_scaled = bool(np.all(grid > 0) and grid.max() / max(grid.min(), 1e-300) > 50.0)
    dim = design.Dim(slice_result.name, float(grid.min()), float(grid.max()),
                     "log10" if log_scaled else "linear")
    box = design.HyperBox((dim,))
    train = surrogate.TrainingSet(box.to_unit(grid.reshape(-1, 1)), values)
    try:
        fit = surrogate.fit_gp(train, nugget="estimated")
    except (BfsurfError, ValueError):
        return None
    if log_scaled:
        mesh = np.logspace(math.log10(grid.min()), math.log10(grid.max()), mesh_points)
    else:
        mesh = np.linspace(grid.min(), grid.max(), mesh_points)
    pred = surrogate.predict(fit, box.to_unit(mesh.reshape(-1, 1)))
    z90 = float(stats.norm.ppf(0.95))
    sd = pred.sd_obs
    return {
        "mesh": mesh.tolist(),
        "mean": pred.mean.tolist(),
        "sd_obs": sd.tolist(),
        "band90_lo": (pred.mean - z90 * sd).tolist(),
        "band90_hi": (pred.mean + z90 * sd).tolist(),
    }


def _location_summary(result: dict) -> list[dict]:
    """Replicate-averaged observations per design location.

    Computed server-side so the explorer overprints payload numbers verbatim
    instead of averaging in the browser.
    """
    dim_names = [c for c in result["columns"]
                 if c not in ("replicate", "log_bf", "std_err", "class")]
    grouped: dict[tuple, list[float]] = {}
    order: list[tuple] = []
    for row in result["samples"]:
        if row["log_bf"] is None:
            continue
        key = tuple(row[name] for name in dim_names)
        if key not in grouped:
            grouped[key] = []
            order.append(key)
        grouped[key].append(row["log_bf"])
    return [
        {
            **{name: value for name, value in zip(dim_names, key)},
            "mean_log_bf": float(np.mean(grouped[key])),
            "sd_log_bf": float(np.std(grouped[key], ddof=1)) if len(grouped[key]) > 1 else 0.0,
            "n_replicates": len(grouped[key]),
            "class": surface.classify(float(np.mean(grouped[key]))).label,
        }
        for key in order
    ]


# --- application -----------------------------------------------------------


def create_app(data_dir: str | None = None, workers: int | None = None,
               ui_dir: str | None = None) -> FastAPI:
    """Build the service; falls back to BFSURF_* environment configuration."""
    data_dir = data_dir or os.environ.get("BFSURF_DATA_DIR", "bfsurf_data")
    workers = workers or int(os.environ.get("BFSURF_WORKERS", DEFAULT_WORKERS))
    ui_dir = ui_dir or os.environ.get("BFSURF_UI_DIR", "frontend/dist")

    app = FastAPI(title="bfsurf", version=__version__)
    store = JobStore(Path(data_dir) / "jobs", workers=workers)
    app.state.store = store

    @app.exception_handler(RequestValidationError)
    async def validation_handler(_: Request, exc: RequestValidationError):
        fields = [
            {"loc": ".".join(str(p) for p in err["loc"] if p != "body"),
             "msg": err["msg"]}
            for err in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"error": "validation", "fields": fields})

    @app.exception_handler(BfsurfError)
    async def bfsurf_handler(_: Request, exc: BfsurfError):
        return JSONResponse(status_code=422, content={"error": str(exc)})

    @app.exception_handler(ValueError)
    async def value_handler(_: Request, exc: ValueError):
        return JSONResponse(status_code=422, content={"error": str(exc)})

    @app.get("/v1/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/v1/simulate")
    def simulate(req: SimulateRequest):
        data = reg.simulate_regression(req.n, req.alpha, req.beta, req.sigma2, req.seed)
        fit = stats.linregress(data.x, data.y)
        return {
            "x": data.x.tolist(),
            "y": data.y.tolist(),
            "csv": data.to_csv(),
            "ls_slope": fit.slope,
            "ls_stderr": fit.stderr,
            "p_value": fit.pvalue,
        }

    @app.post("/v1/bf")
    def bayes_factors(req: BfRequest):
        data = req.data.to_data()
        results = {
            "closed_quadrature": reg.log_bf_12(data, req.hypers.to_hypers()).to_json_dict(),
            "zellner_siow": reg.log_bf_zellner_siow(data).to_json_dict(),
            "bic": reg.log_bf_bic(data).to_json_dict(),
            "fractional": reg.log_bf_fractional(data, req.fractional_m).to_json_dict(),
        }
        return {"results": results, "ls_slope": data.ls_slope()}

    @app.post("/v1/surface", status_code=202)
    def surface_job(req: SurfaceRequest):
        _build_surface_inputs(req)  # validate before queueing
        payload = req.model_dump()
        record = store.submit("surface", payload,
                              lambda job_dir, progress: _run_surface_job(req, job_dir, progress))
        return _job_payload(record)

    @app.get("/v1/jobs/{job_id}")
    def job_status(job_id: str):
        record = store.get(job_id)
        if record is None:
            return JSONResponse(status_code=404, content={"error": f"unknown job {job_id!r}"})
        return _job_payload(record)

    @app.get("/v1/jobs/{job_id}/result")
    def job_result(job_id: str, format: str = Query(default="json")):
        record = store.get(job_id)
        if record is None:
            return JSONResponse(status_code=404, content={"error": f"unknown job {job_id!r}"})
        if record.status != "done":
            return JSONResponse(
                status_code=409,
                content={"error": f"job {job_id!r} is {record.status}", "status": record.status},
            )
        job_dir = store.result_dir(job_id)
        if record.kind == "surface":
            if format == "csv":
                return PlainTextResponse((job_dir / "result.csv").read_text(),
                                         media_type="text/csv")
            result = json.loads((job_dir / "result.json").read_text())
            return {
                "result": result,
                "location_summary": _location_summary(result),
                "csv": (job_dir / "result.csv").read_text(),
                "manifest": json.loads((job_dir / "manifest.json").read_text()),
            }
        return json.loads((job_dir / "fit.json").read_text())

    @app.post("/v1/hlm/slices")
    def hlm_slices_endpoint(req: SlicesRequest):
        dataset = req.source.to_dataset()
        center = hlm.default_hlm_hypers(dataset)
        for name, value in req.center.items():
            center = hlm.hypers_with(center, name, value)
        slices = hlm.hlm_slices(dataset, center, req.points_per_slice)
        payload = hlm.slices_to_json_dict(slices)
        payload["center"] = {name: hlm.hyper_value(center, name) for name in hlm.SLICE_NAMES}
        payload["csv"] = hlm.slices_to_csv(slices)
        if req.with_gp:
            for entry, slc in zip(payload["slices"], slices):
                entry["gp"] = _slice_gp_payload(slc, req.gp_mesh)
        return payload

    @app.post("/v1/surrogate/fit", status_code=202)
    def surrogate_fit_job(req: SurrogateFitRequest):
        _load_fit_inputs(store, req)  # validate before queueing
        payload = req.model_dump()
        record = store.submit("surrogate_fit", payload,
                              lambda job_dir, progress: _run_fit_job(store, req, job_dir, progress))
        return _job_payload(record)

    @app.post("/v1/surrogate/predict")
    def surrogate_predict(req: PredictRequest):
        if req.fit_job_id is not None:
            record = store.get(req.fit_job_id)
            if record is None or record.status != "done":
                raise ValueError(f"job {req.fit_job_id!r} is not a completed fit")
            payload = json.loads((store.result_dir(req.fit_job_id) / "fit.json").read_text())
        else:
            payload = req.fit
        fit = surrogate.HetGpFit.from_json_dict(payload["fit"])
        box = design.HyperBox.from_json_dict(payload["box"])
        return _predictions_payload(fit, box, req.grid)

    @app.get("/v1/priors/density")
    def priors_density(
        mu: float = Query(default=0.0),
        phi: float = Query(default=1.0, gt=0),
        a: float = Query(default=1.0, gt=0),
        b: float = Query(default=1.0, gt=0),
        points: int = Query(default=201, ge=16, le=2001),
    ):
        sd = 1.0 / math.sqrt(phi)
        beta_x = np.linspace(mu - 4 * sd, mu + 4 * sd, points)
        beta_pdf = stats.norm.pdf(beta_x, loc=mu, scale=sd)
        gamma_hi = float(stats.gamma.ppf(0.9999, a, scale=1.0 / b))
        gamma_x = np.linspace(0.0, gamma_hi, points)
        gamma_pdf = stats.gamma.pdf(gamma_x, a, scale=1.0 / b)
        return {
            "beta": {"x": beta_x.tolist(), "density": beta_pdf.tolist()},
            "gamma": {"x": gamma_x.tolist(), "density": gamma_pdf.tolist()},
        }

    ui_path = Path(ui_dir)
    if ui_path.is_dir():
        app.mount("/", StaticFiles(directory=str(ui_path), html=True), name="ui")

    return app
