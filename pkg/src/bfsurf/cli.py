"""Command-line interface: every pipeline stage as a subcommand.

Exit codes: 0 success, 2 usage error, 1 computation error.  Grid
specifications use ``name:scale:lower:upper:count`` segments joined by
commas, e.g. ``phi:log10:-3:3:30,mu:linear:-3:3:30``; log10 bounds are
base-10 exponents.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__, design, hlm, reg, surface, surrogate
from .errors import BfsurfError


def parse_grid_spec(spec: str) -> tuple[design.HyperBox, list[int]]:
    """Parse ``name:scale:lower:upper:count`` comma-joined segments."""
    dims, counts = [], []
    for part in spec.split(","):
        fields = part.strip().split(":")
        if len(fields) != 5:
            raise click.UsageError(
                f"bad grid segment {part!r}: expecting name:scale:lower:upper:count"
            )
        name, scale, lower, upper, count = fields
        if scale not in ("linear", "log10"):
            raise click.UsageError(f"bad grid scale {scale!r} (linear or log10)")
        try:
            lo, hi, k = float(lower), float(upper), int(count)
        except ValueError as exc:
            raise click.UsageError(f"bad grid segment {part!r}: {exc}") from exc
        if scale == "log10":
            dims.append(design.Dim(name, 10.0**lo, 10.0**hi, "log10"))
        else:
            dims.append(design.Dim(name, lo, hi, "linear"))
        counts.append(k)
    return design.HyperBox(tuple(dims)), counts


def computation_errors(fn):
    """Translate package errors into exit code 1 with the module's text."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (BfsurfError, ValueError) as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


def _load_regression(path: str) -> reg.RegressionData:
    return reg.RegressionData.from_csv(Path(path).read_text())


def _load_hlm(data_path: str | None, synthetic_seed: int | None) -> hlm.HlmDataset:
    if data_path is not None:
        return hlm.load_hlm_csv(data_path)
    return hlm.synthetic_hlm(seed=synthetic_seed if synthetic_seed is not None else 0)


@click.group()
@click.version_option(version=__version__)
def main():
    """Log Bayes factor surfaces: simulate, evaluate, design, emulate, serve."""


@main.command()
@click.option("--n", type=int, required=True, help="Sample size (>= 3).")
@click.option("--alpha", type=float, default=0.0, show_default=True)
@click.option("--beta", type=float, default=2.5, show_default=True)
@click.option("--sigma2", type=float, default=1.0, show_default=True)
@click.option("--seed", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@computation_errors
def simulate(n, alpha, beta, sigma2, seed, out):
    """Simulate a regression dataset and write it as CSV (header x,y)."""
    data = reg.simulate_regression(n, alpha, beta, sigma2, seed)
    Path(out).write_text(data.to_csv())
    click.echo(f"wrote {n} rows to {out} (ls slope {data.ls_slope():.4f})")


@main.command()
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="Regression CSV with header x,y.")
@click.option("--mu", type=float, default=0.0, show_default=True)
@click.option("--phi", type=float, default=1.0, show_default=True)
@click.option("--a", type=float, default=1.0, show_default=True)
@click.option("--b", type=float, default=1.0, show_default=True)
@click.option("--fractional-m", type=int, default=3, show_default=True)
@click.option("--json-out", type=click.Path(dir_okay=False), default=None,
              help="Also write the four results as JSON.")
@computation_errors
def bf(data_path, mu, phi, a, b, fractional_m, json_out):
    """Print all four regression log Bayes factors side by side."""
    data = _load_regression(data_path)
    hypers = reg.RegressionHypers(mu=mu, phi=phi, a=a, b=b)
    results = {
        "closed_quadrature": reg.log_bf_12(data, hypers),
        "zellner_siow": reg.log_bf_zellner_siow(data),
        "bic": reg.log_bf_bic(data),
        "fractional": reg.log_bf_fractional(data, fractional_m),
    }
    for name, out in results.items():
        click.echo(f"{name:18s} log_bf={out.value: .6f}  std_err={out.std_err:.6f}")
    if json_out:
        payload = {name: out.to_json_dict() for name, out in results.items()}
        Path(json_out).write_text(json.dumps(payload, sort_keys=True, indent=1))


@main.command(name="surface")
@click.option("--evaluator", type=click.Choice(surface.EVALUATOR_KINDS),
              default="reg_closed", show_default=True)
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Regression CSV (reg_* evaluators).")
@click.option("--hlm-data", type=click.Path(exists=True, dir_okay=False), default=None,
              help="HLM CSV (hlm evaluator); omit to use the bundled synthetic data.")
@click.option("--synthetic-seed", type=int, default=0, show_default=True)
@click.option("--grid", "grid_spec", required=True,
              help="name:scale:lower:upper:count, comma separated.")
@click.option("--base", "base_json", default="{}",
              help="JSON object of non-swept hyperparameter values.")
@click.option("--replicates", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--n-draws", type=int, default=10_000, show_default=True,
              help="Draw budget per noisy evaluation (reg_noisy).")
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--json-out", type=click.Path(dir_okay=False), default=None)
@computation_errors
def surface_cmd(evaluator, data_path, hlm_data, synthetic_seed, grid_spec, base_json,
                replicates, seed, n_draws, workers, out, json_out):
    """Sweep an evaluator over a grid; write samples plus a manifest sidecar."""
    box, counts = parse_grid_spec(grid_spec)
    base = json.loads(base_json)
    if evaluator == "hlm":
        dataset = _load_hlm(hlm_data, synthetic_seed)
        center = hlm.default_hlm_hypers(dataset)
        full_base = {name: hlm.hyper_value(center, name) for name in hlm.SLICE_NAMES}
        full_base.update(base)
        base = full_base
    else:
        if data_path is None:
            raise click.UsageError("--data is required for regression evaluators")
        dataset = _load_regression(data_path)
    grid = design.with_replicates(design.grid_design(box, counts), replicates)
    spec = surface.EvaluatorSpec(evaluator, dataset, base=base, n_draws=n_draws)
    samples = surface.evaluate_surface(spec, grid, seed, workers=workers)
    Path(out).write_text(surface.export_surface(samples, box.names, "csv"))
    if json_out:
        Path(json_out).write_text(surface.export_surface(samples, box.names, "json"))
    manifest_path = Path(str(out) + ".manifest.json")
    manifest_path.write_text(
        json.dumps(surface.sweep_manifest(spec, grid, seed), sort_keys=True, indent=1)
    )
    failed = sum(1 for s in samples if not s.ok)
    click.echo(f"wrote {len(samples)} samples to {out} ({failed} failed); "
               f"manifest {manifest_path}")



@main.command()
@click.option("--data", "data_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="HLM CSV; omit to use the bundled synthetic data.")
@click.option("--synthetic-seed", type=int, default=0, show_default=True)
@click.option("--points", type=int, default=15, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--json-out", type=click.Path(dir_okay=False), default=None)
@computation_errors
def slices(data_path, synthetic_seed, points, out, json_out):
    """Evaluate the eight 1-D HLM hyperparameter slices at calibrated defaults."""
    dataset = _load_hlm(data_path, synthetic_seed)
    center = hlm.default_hlm_hypers(dataset)
    results = hlm.hlm_slices(dataset, center, points)
    Path(out).write_text(hlm.slices_to_csv(results))
    if json_out:
        payload = hlm.slices_to_json_dict(results)
        payload["center"] = {name: hlm.hyper_value(center, name) for name in hlm.SLICE_NAMES}
        Path(json_out).write_text(json.dumps(payload, sort_keys=True, indent=1))
    click.echo(f"wrote {len(results)} slices x {points} points to {out} "
               f"(calibrated g={center.g:.4f})")


@main.command(name="design")
@click.option("--grid", "grid_spec", default=None,
              help="Factorial grid: name:scale:lower:upper:count segments.")
@click.option("--lhs", "lhs_spec", default=None,
              help="LHS box: name:scale:lower:upper segments (no count).")
@click.option("--n", type=int, default=None, help="LHS size.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--restarts", type=int, default=20, show_default=True)
@click.option("--sweeps", type=int, default=50, show_default=True)
@click.option("--replicates", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--json-out", type=click.Path(dir_okay=False), default=None)
@computation_errors
def design_cmd(grid_spec, lhs_spec, n, seed, restarts, sweeps, replicates, out, json_out):
    """Generate a factorial grid or a maximin Latin hypercube design."""
    if (grid_spec is None) == (lhs_spec is None):
        raise click.UsageError("provide exactly one of --grid or --lhs")
    if grid_spec is not None:
        box, counts = parse_grid_spec(grid_spec)
        result = design.grid_design(box, counts)
    else:
        if n is None:
            raise click.UsageError("--n is required with --lhs")
        segments = [f"{part.strip()}:2" for part in lhs_spec.split(",")]
        box, _ = parse_grid_spec(",".join(segments))
        result = design.lhs_maximin(box, n, seed, restarts=restarts, sweeps=sweeps)
    result = design.with_replicates(result, replicates)
    Path(out).write_text(result.to_csv())
    if json_out:
        Path(json_out).write_text(json.dumps(result.to_json_dict(), sort_keys=True))
    click.echo(f"wrote {result.n_locations} locations x {result.replicates} replicates to {out}")


@main.command()
@click.option("--in", "in_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Surface CSV export.")
@click.option("--manifest", "manifest_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Sweep manifest (defaults to <in>.manifest.json).")
@click.option("--het/--hom", default=True, show_default=True,
              help="Heteroskedastic (replicate-based) or homoskedastic GP.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@computation_errors
def fit(in_path, manifest_path, het, out):
    """Fit a GP surrogate to exported surface samples."""
    names, samples = surface.import_surface_csv(Path(in_path).read_text())
    manifest_file = Path(manifest_path) if manifest_path else Path(in_path + ".manifest.json")
    if manifest_file.exists():
        manifest = json.loads(manifest_file.read_text())
        box = design.HyperBox.from_json_dict(manifest["design"]["box"])
        if box.names != names:
            raise ValueError(f"manifest box {box.names} does not match CSV dims {names}")
    else:
        locations = np.array([s.location for s in samples if s.ok])
        box = design.HyperBox(tuple(
            design.Dim(name, float(locations[:, k].min()), float(locations[:, k].max()))
            for k, name in enumerate(names)
        ))
        click.echo("no manifest found; inferring a linear box from the data range")
    train = surface.training_set_from_samples(samples, box)
    fitted = surrogate.fit_hetgp(train) if het else surrogate.fit_gp(train, "estimated")
    payload = {"fit": fitted.to_json_dict(), "box": box.to_json_dict(), "het": het}
    Path(out).write_text(json.dumps(payload, sort_keys=True))
    click.echo(f"fit {train.n_unique} unique locations "
               f"(log likelihood {fitted.log_lik:.3f}) -> {out}")


@main.command()
@click.option("--fit", "fit_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--grid", "grid_spec", required=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@computation_errors
def predict(fit_path, grid_spec, out):
    """Predict surrogate mean and standard deviations on a grid."""
    payload = json.loads(Path(fit_path).read_text())
    fitted = surrogate.HetGpFit.from_json_dict(payload["fit"])
    box = design.HyperBox.from_json_dict(payload["box"])
    mesh_box, counts = parse_grid_spec(grid_spec)
    if mesh_box.names != box.names:
        raise ValueError(f"grid dims {mesh_box.names} do not match fit dims {box.names}")
    mesh = design.grid_design(mesh_box, counts)
    pred = surrogate.predict(fitted, box.to_unit(mesh.points))
    Path(out).write_text(surface.export_predictions(box.names, mesh.points, pred))
    click.echo(f"wrote {mesh.n_locations} predictions to {out}")


@main.command()
@click.option("--fit", "fit_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--holdout", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Surface CSV export of holdout evaluations.")
@click.option("--level", type=float, default=0.95, show_default=True)
@computation_errors
def coverage(fit_path, holdout, level):
    """Holdout coverage of the surrogate's predictive intervals."""
    payload = json.loads(Path(fit_path).read_text())
    fitted = surrogate.HetGpFit.from_json_dict(payload["fit"])
    box = design.HyperBox.from_json_dict(payload["box"])
    _, samples = surface.import_surface_csv(Path(holdout).read_text())
    holdout_set = surface.training_set_from_samples(samples, box)
    frac = surrogate.coverage(fitted, holdout_set, level)
    click.echo(f"coverage at level {level:.2f}: {frac:.4f} ({len(holdout_set.y)} points)")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8337, show_default=True, envvar="BFSURF_PORT")
@click.option("--data-dir", default="bfsurf_data", show_default=True, envvar="BFSURF_DATA_DIR")
@click.option("--workers", type=int, default=2, show_default=True, envvar="BFSURF_WORKERS")
@click.option("--ui-dir", default="frontend/dist", show_default=True, envvar="BFSURF_UI_DIR")
def serve(host, port, data_dir, workers, ui_dir):
    """Start the HTTP JSON service (and static explorer UI when built)."""
    import uvicorn

    from .service import create_app

    app = create_app(data_dir=data_dir, workers=workers, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
