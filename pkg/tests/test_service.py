import time

import numpy as np
import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from bfsurf.cli import main as cli_main
from bfsurf.jobs import JobStore
from bfsurf.service import create_app


@pytest.fixture()
def client(tmp_path):
    app = create_app(data_dir=str(tmp_path / "data"), workers=2,
                     ui_dir=str(tmp_path / "no-ui"))
    with TestClient(app) as c:
        yield c


def wait_done(client, job_id, timeout=60.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        record = client.get(f"/v1/jobs/{job_id}").json()
        if record["status"] in ("done", "failed"):
            return record
        time.sleep(0.05)
    raise TimeoutError(f"job {job_id} did not finish")


def simulate_payload(client, seed=1):
    r = client.post("/v1/simulate", json={"n": 30, "beta": 2.5, "sigma2": 1.0, "seed": seed})
    assert r.status_code == 200
    return r.json()


GRID = [
    {"name": "phi", "scale": "log10", "lower": -3, "upper": 3, "count": 10},
    {"name": "mu", "scale": "linear", "lower": -3, "upper": 3, "count": 10},
]


class TestSyncEndpoints:
    def test_simulate_reports_fit_stats(self, client):
        payload = simulate_payload(client)
        assert len(payload["x"]) == 30
        assert payload["p_value"] < 0.01
        assert payload["csv"].startswith("x,y\n")

    def test_bf_four_methods(self, client):
        data = simulate_payload(client)
        r = client.post("/v1/bf", json={"data": {"x": data["x"], "y": data["y"]},
                                        "hypers": {"mu": 0, "phi": 1, "a": 1, "b": 1}})
        assert r.status_code == 200
        results = r.json()["results"]
        assert set(results) == {"closed_quadrature", "zellner_siow", "bic", "fractional"}
        for entry in results.values():
            assert set(entry) == {"value", "std_err", "method"}

    def test_validation_names_field(self, client):
        data = simulate_payload(client)
        r = client.post("/v1/bf", json={"data": {"x": data["x"], "y": data["y"]},
                                        "hypers": {"phi": -2}})
        assert r.status_code == 400
        assert any("phi" in f["loc"] for f in r.json()["fields"])

    def test_computation_error_is_422(self, client):
        csv = "school,ses,mathscore\nA,0.1,50\nA,0.2,51\nB,0.3,49\nB,0.4,52\n"
        r = client.post("/v1/hlm/slices", json={"source": {"csv": csv}})
        assert r.status_code == 422
        assert "too few groups" in r.json()["error"]

    def test_priors_density(self, client):
        r = client.get("/v1/priors/density",
                       params={"mu": 0.5, "phi": 4.0, "a": 2.0, "b": 3.0, "points": 401})
        assert r.status_code == 200
        beta = r.json()["beta"]
        x, pdf = np.array(beta["x"]), np.array(beta["density"])
        assert np.trapezoid(pdf, x) == pytest.approx(1.0, abs=1e-3)
        gamma = r.json()["gamma"]
        assert np.all(np.array(gamma["density"]) >= 0)

    def test_hlm_slices_payload(self, client):
        r = client.post("/v1/hlm/slices",
                        json={"source": {"synthetic_seed": 0}, "points_per_slice": 5,
                              "with_gp": True, "gp_mesh": 20})
        assert r.status_code == 200
        payload = r.json()
        assert len(payload["slices"]) == 8
        assert payload["center"]["g"] > 0
        g_slice = next(s for s in payload["slices"] if s["hyper"] == "g")
        assert g_slice["gp"] is not None
        assert len(g_slice["gp"]["mesh"]) == 20
        assert len(g_slice["gp"]["band90_lo"]) == 20
        assert payload["csv"].startswith("hyper,grid_value,log_bf\n")


class TestJobs:
    def test_surface_job_lifecycle(self, client):
        data = simulate_payload(client)
        req = {"evaluator": "reg_closed", "data": {"x": data["x"], "y": data["y"]},
               "grid": GRID, "seed": 0}
        r = client.post("/v1/surface", json=req)
        assert r.status_code == 202
        job_id = r.json()["job_id"]
        record = wait_done(client, job_id)
        assert record["status"] == "done"
        assert record["progress"] == 1.0

        result = client.get(f"/v1/jobs/{job_id}/result").json()
        assert len(result["result"]["samples"]) == 100
        assert len(result["csv"].splitlines()) == 101
        assert result["manifest"]["seed"] == 0
        summary = result["location_summary"]
        assert len(summary) == 100  # one replicate: mean equals the sample
        assert summary[0]["n_replicates"] == 1
        assert summary[0]["mean_log_bf"] == result["result"]["samples"][0]["log_bf"]

        csv_response = client.get(f"/v1/jobs/{job_id}/result", params={"format": "csv"})
        assert csv_response.headers["content-type"].startswith("text/csv")
        assert csv_response.text == result["csv"]

        # identical request is answered by the cached job
        again = client.post("/v1/surface", json=req)
        assert again.json()["job_id"] == job_id
        assert again.json()["status"] == "done"

    def test_unknown_job_404(self, client):
        assert client.get("/v1/jobs/feedfacedeadbeef").status_code == 404
        assert client.get("/v1/jobs/feedfacedeadbeef/result").status_code == 404

    def test_unfinished_result_409(self, client, tmp_path):
        data = simulate_payload(client)
        req = {"evaluator": "reg_noisy", "data": {"x": data["x"], "y": data["y"]},
               "grid": [{"name": "phi", "scale": "log10", "lower": -3, "upper": 1, "count": 30}],
               "replicates": 10, "n_draws": 40000, "seed": 0}
        job_id = client.post("/v1/surface", json=req).json()["job_id"]
        r = client.get(f"/v1/jobs/{job_id}/result")
        assert r.status_code in (200, 409)  # tiny race: may already be done
        wait_done(client, job_id)

    def test_fit_and_predict_roundtrip(self, client):
        data = simulate_payload(client)
        req = {"evaluator": "reg_noisy", "data": {"x": data["x"], "y": data["y"]},
               "grid": [{"name": "phi", "scale": "log10", "lower": -3, "upper": 1, "count": 15}],
               "replicates": 8, "n_draws": 2000, "seed": 4}
        sweep_id = client.post("/v1/surface", json=req).json()["job_id"]
        wait_done(client, sweep_id)

        fit_resp = client.post("/v1/surrogate/fit", json={"job_id": sweep_id, "het": True})
        assert fit_resp.status_code == 202
        fit_id = fit_resp.json()["job_id"]
        assert wait_done(client, fit_id)["status"] == "done"

        r = client.post("/v1/surrogate/predict", json={
            "fit_job_id": fit_id,
            "grid": [{"name": "phi", "scale": "log10", "lower": -3, "upper": 1, "count": 50}],
        })
        assert r.status_code == 200
        payload = r.json()
        assert len(payload["mean"]) == 50
        assert payload["columns"] == ["phi", "mean", "sd_mean", "sd_obs"]
        assert all(so >= sm for so, sm in zip(payload["sd_obs"], payload["sd_mean"]))
        assert len(payload["class"]) == 50
        assert payload["csv"].splitlines()[0] == "phi,mean,sd_mean,sd_obs"
        assert all(lo < m < hi for lo, m, hi in
                   zip(payload["band95_lo"], payload["mean"], payload["band95_hi"]))

        # mesh cap enforced
        r = client.post("/v1/surrogate/predict", json={
            "fit_job_id": fit_id,
            "grid": [{"name": "phi", "scale": "log10", "lower": -3, "upper": 1, "count": 4000}],
        })
        assert r.status_code == 422

    def test_store_rebuild_preserves_done_jobs(self, client, tmp_path):
        data = simulate_payload(client)
        req = {"evaluator": "reg_closed", "data": {"x": data["x"], "y": data["y"]},
               "grid": GRID, "seed": 1}
        job_id = client.post("/v1/surface", json=req).json()["job_id"]
        wait_done(client, job_id)

        rebuilt = JobStore(tmp_path / "data" / "jobs", workers=1)
        record = rebuilt.get(job_id)
        assert record is not None and record.status == "done"
        assert (rebuilt.result_dir(job_id) / "result.csv").exists()


class TestCliParity:
    def test_surface_csv_bytes_match_cli(self, client, tmp_path):
        data = simulate_payload(client)
        req = {"evaluator": "reg_closed", "data": {"x": data["x"], "y": data["y"]},
               "grid": GRID, "seed": 0}
        job_id = client.post("/v1/surface", json=req).json()["job_id"]
        wait_done(client, job_id)
        api_csv = client.get(f"/v1/jobs/{job_id}/result", params={"format": "csv"}).text

        runner = CliRunner()
        data_file = tmp_path / "data.csv"
        runner.invoke(cli_main, ["simulate", "--n", "30", "--beta", "2.5", "--sigma2", "1",
                                 "--seed", "1", "--out", str(data_file)],
                      catch_exceptions=False)
        out = tmp_path / "surf.csv"
        runner.invoke(cli_main, ["surface", "--evaluator", "reg_closed",
                                 "--data", str(data_file),
                                 "--grid", "phi:log10:-3:3:10,mu:linear:-3:3:10",
                                 "--seed", "0", "--out", str(out)],
                      catch_exceptions=False)
        assert out.read_text() == api_csv


class TestStaticUi:
    def test_ui_served_when_built(self, tmp_path):
        ui = tmp_path / "dist"
        ui.mkdir()
        (ui / "index.html").write_text("<html><body>explorer</body></html>")
        app = create_app(data_dir=str(tmp_path / "data"), workers=1, ui_dir=str(ui))
        with TestClient(app) as c:
            r = c.get("/")
            assert r.status_code == 200
            assert "explorer" in r.text
            assert c.get("/v1/health").status_code == 200
