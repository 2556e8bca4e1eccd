"""Record live API payloads as frontend test fixtures.

Runs the service in-process (no network) and captures the payloads the
explorer consumes, so the UI contract tests assert against real responses.
Regenerate with:  python3 scripts/make_fixtures.py  (from frontend/)
"""

import json
import sys
import tempfile
import time
from pathlib import Path

from fastapi.testclient import TestClient

from bfsurf.service import create_app

OUT = Path(__file__).resolve().parent.parent / "fixtures"


def wait_done(client, job_id):
    while True:
        record = client.get(f"/v1/jobs/{job_id}").json()
        if record["status"] == "done":
            return
        if record["status"] == "failed":
            raise RuntimeError(f"job failed: {record['error']}")
        time.sleep(0.05)


def dump(name, payload):
    path = OUT / f"{name}.json"
    path.write_text(json.dumps(payload, sort_keys=True, indent=1))
    print(f"wrote {path}")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        app = create_app(data_dir=tmp, workers=2, ui_dir="/nonexistent")
        client = TestClient(app)

        sim = client.post("/v1/simulate",
                          json={"n": 30, "beta": 2.5, "sigma2": 1.0, "seed": 1}).json()
        dump("simulate", sim)
        data = {"x": sim["x"], "y": sim["y"]}

        bf = client.post("/v1/bf", json={"data": data,
                                         "hypers": {"mu": 0, "phi": 1, "a": 1, "b": 1}}).json()
        dump("bf", bf)

        priors = client.get("/v1/priors/density",
                            params={"mu": 0, "phi": 1, "a": 1, "b": 1, "points": 101}).json()
        dump("priors", priors)

        grid = [{"name": "phi", "scale": "log10", "lower": -3, "upper": 3, "count": 30},
                {"name": "mu", "scale": "linear", "lower": -3, "upper": 3, "count": 30}]
        job = client.post("/v1/surface", json={"evaluator": "reg_closed", "data": data,
                                               "grid": grid, "seed": 0}).json()
        wait_done(client, job["job_id"])
        surf = client.get(f"/v1/jobs/{job['job_id']}/result").json()
        dump("regression_surface", surf)

        slices = client.post("/v1/hlm/slices",
                             json={"source": {"synthetic_seed": 0}, "points_per_slice": 15,
                                   "with_gp": True, "gp_mesh": 40}).json()
        dump("hlm_slices", slices)

        # 1-D noisy sweep (precision axis), its fit, and band predictions
        grid1 = [{"name": "phi", "scale": "log10", "lower": -3, "upper": 1, "count": 20}]
        sweep1 = client.post("/v1/surface", json={
            "evaluator": "reg_noisy", "data": data, "grid": grid1,
            "replicates": 10, "n_draws": 2000, "seed": 3}).json()
        wait_done(client, sweep1["job_id"])
        sweep1_result = client.get(f"/v1/jobs/{sweep1['job_id']}/result").json()
        dump("noisy_sweep_1d", sweep1_result)

        fit1 = client.post("/v1/surrogate/fit",
                           json={"job_id": sweep1["job_id"], "het": True}).json()
        wait_done(client, fit1["job_id"])
        pred1 = client.post("/v1/surrogate/predict", json={
            "fit_job_id": fit1["job_id"],
            "grid": [{"name": "phi", "scale": "log10", "lower": -3, "upper": 1,
                      "count": 60}]}).json()
        dump("predict_1d", pred1)

        # 2-D noisy sweep over (phi, mu) and its mean/sd mesh (Fig.-4 shape)
        grid2 = [{"name": "phi", "scale": "log10", "lower": -3, "upper": 1, "count": 8},
                 {"name": "mu", "scale": "linear", "lower": -3, "upper": 3, "count": 5}]
        sweep2 = client.post("/v1/surface", json={
            "evaluator": "reg_noisy", "data": data, "grid": grid2,
            "replicates": 5, "n_draws": 2000, "seed": 6}).json()
        wait_done(client, sweep2["job_id"])
        sweep2_result = client.get(f"/v1/jobs/{sweep2['job_id']}/result").json()
        dump("noisy_sweep_2d", sweep2_result)

        fit2 = client.post("/v1/surrogate/fit",
                           json={"job_id": sweep2["job_id"], "het": True}).json()
        wait_done(client, fit2["job_id"])
        pred2 = client.post("/v1/surrogate/predict", json={
            "fit_job_id": fit2["job_id"],
            "grid": [{"name": "phi", "scale": "log10", "lower": -3, "upper": 1, "count": 30},
                     {"name": "mu", "scale": "linear", "lower": -3, "upper": 3,
                      "count": 20}]}).json()
        dump("predict_2d", pred2)


if __name__ == "__main__":
    sys.exit(main())
