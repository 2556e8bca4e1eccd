/** Browser glue: controls, URL-synced state, data fetching, view mounting. */

import { ApiClient, ApiError, type GridDimRequest } from "./api.js";
import { renderToString, type VNode } from "./svg.js";
import {
  decodeState,
  defaultState,
  encodeState,
  validateState,
  type ExplorerState,
  type ViewName,
} from "./state.js";
import { buildRegressionView } from "./views/regression.js";
import { buildHlmSlicesView } from "./views/hlm.js";
import { buildSurrogateLab1d, buildSurrogateLab2d } from "./views/surrogate.js";
import type { SimulatePayload } from "./types.js";

const api = new ApiClient("");

interface AppContext {
  state: ExplorerState;
  simulated?: SimulatePayload;
  pollAbort?: AbortController;
}

const ctx: AppContext = { state: defaultState() };

function mount(node: VNode): void {
  const root = document.getElementById("app")!;
  root.innerHTML = renderToString(node);
}

function setStatus(text: string): void {
  document.getElementById("status")!.textContent = text;
}

function showErrors(errors: { field: string; message: string }[]): void {
  const box = document.getElementById("errors")!;
  box.innerHTML = errors.map((e) => `<div class="error">${e.field}: ${e.message}</div>`).join("");
}

function pushState(): void {
  history.replaceState(null, "", `?${encodeState(ctx.state)}`);
}

function regressionGrid(state: ExplorerState): GridDimRequest[] {
  return [
    { name: "phi", scale: "log10", lower: state.sweep.phiLo, upper: state.sweep.phiHi,
      count: state.sweep.phiCount },
    { name: "mu", scale: "linear", lower: state.sweep.muLo, upper: state.sweep.muHi,
      count: state.sweep.muCount },
  ];
}

async function renderRegression(): Promise<void> {
  const state = ctx.state;
  const simulated = await api.simulate(state.sim);
  ctx.simulated = simulated;
  const data = { x: simulated.x, y: simulated.y };
  const [bf, priors] = await Promise.all([
    api.bayesFactors({ data, hypers: state.hypers }),
    api.priors(state.hypers),
  ]);
  const job = await api.startSurfaceJob({
    evaluator: "reg_closed",
    data,
    base: { a: state.hypers.a, b: state.hypers.b },
    grid: regressionGrid(state),
    seed: 0,
  });
  ctx.state.jobs.sweep = job.job_id;
  pushState();
  ctx.pollAbort?.abort();
  ctx.pollAbort = new AbortController();
  const finished = await api.pollJob(job.job_id, {
    signal: ctx.pollAbort.signal,
    onProgress: (f) => setStatus(`sweep ${(f * 100).toFixed(0)}%`),
  });
  if (finished.status === "failed") {
    setStatus(`sweep failed: ${finished.error}`);
    return;
  }
  const surface = await api.surfaceResult(job.job_id);
  const { node } = buildRegressionView({
    surface,
    bf,
    priors,
    simulated,
    overlays: state.overlays,
  });
  mount(node);
  setStatus("ready");
}

async function renderHlm(): Promise<void> {
  const state = ctx.state;
  setStatus("evaluating slices...");
  const payload = await api.hlmSlices({
    source: { synthetic_seed: state.hlm.syntheticSeed },
    points_per_slice: state.hlm.pointsPerSlice,
    with_gp: true,
  });
  mount(buildHlmSlicesView(payload).node);
  setStatus("ready");
}

async function renderLab(): Promise<void> {
  const state = ctx.state;
  const simulated = ctx.simulated ?? (await api.simulate(state.sim));
  ctx.simulated = simulated;
  const data = { x: simulated.x, y: simulated.y };
  const grid: GridDimRequest[] =
    state.lab.mode === "1d"
      ? [{ name: "phi", scale: "log10", lower: -3, upper: 1, count: 20 }]
      : [
          { name: "phi", scale: "log10", lower: -3, upper: 1, count: 8 },
          { name: "mu", scale: "linear", lower: -3, upper: 3, count: 5 },
        ];
  const sweepJob = await api.startSurfaceJob({
    evaluator: "reg_noisy",
    data,
    grid,
    replicates: state.lab.replicates,
    n_draws: state.lab.nDraws,
    seed: state.lab.seed,
  });
  ctx.state.jobs.sweep = sweepJob.job_id;
  pushState();
  ctx.pollAbort?.abort();
  ctx.pollAbort = new AbortController();
  const signal = ctx.pollAbort.signal;
  const sweepDone = await api.pollJob(sweepJob.job_id, {
    signal,
    onProgress: (f) => setStatus(`noisy sweep ${(f * 100).toFixed(0)}%`),
  });
  if (sweepDone.status === "failed") {
    setStatus(`sweep failed: ${sweepDone.error}`);
    return;
  }
  const sweep = await api.surfaceResult(sweepJob.job_id);
  const fitJob = await api.startFitJob({ job_id: sweepJob.job_id, het: true });
  ctx.state.jobs.fit = fitJob.job_id;
  pushState();
  const fitDone = await api.pollJob(fitJob.job_id, {
    signal,
    onProgress: () => setStatus("fitting surrogate..."),
  });
  if (fitDone.status === "failed") {
    setStatus(`fit failed: ${fitDone.error}`);
    return;
  }
  if (state.lab.mode === "1d") {
    const pred = await api.predict({
      fit_job_id: fitJob.job_id,
      grid: [{ name: "phi", scale: "log10", lower: -3, upper: 1, count: 60 }],
    });
    mount(buildSurrogateLab1d(sweep, pred).node);
  } else {
    const pred = await api.predict({
      fit_job_id: fitJob.job_id,
      grid: [
        { name: "phi", scale: "log10", lower: -3, upper: 1, count: 40 },
        { name: "mu", scale: "linear", lower: -3, upper: 3, count: 30 },
      ],
    });
    mount(buildSurrogateLab2d(pred, sweep.location_summary).node);
  }
  setStatus("ready");
}

async function rerender(): Promise<void> {
  const errors = validateState(ctx.state);
  showErrors(errors);
  if (errors.length > 0) {
    setStatus("fix the highlighted controls");
    return;
  }
  setStatus("loading...");
  try {
    if (ctx.state.view === "regression_surface") {
      await renderRegression();
    } else if (ctx.state.view === "hlm_slices") {
      await renderHlm();
    } else {
      await renderLab();
    }
  } catch (error) {
    if (error instanceof DOMException && error.name === "AbortError") {
      return; // superseded by a newer request
    }
    if (error instanceof ApiError) {
      setStatus(`request failed (${error.status}): ${JSON.stringify(error.payload)}`);
      return;
    }
    setStatus(`error: ${String(error)}`);
  }
}

function bindControls(): void {
  const byId = (id: string) => document.getElementById(id) as HTMLInputElement;
  const bindings: Array<[string, () => void]> = [
    ["ctl-n", () => (ctx.state.sim.n = Number(byId("ctl-n").value))],
    ["ctl-beta", () => (ctx.state.sim.beta = Number(byId("ctl-beta").value))],
    ["ctl-sigma2", () => (ctx.state.sim.sigma2 = Number(byId("ctl-sigma2").value))],
    ["ctl-seed", () => (ctx.state.sim.seed = Number(byId("ctl-seed").value))],
    ["ctl-mu", () => (ctx.state.hypers.mu = Number(byId("ctl-mu").value))],
    ["ctl-phi", () => (ctx.state.hypers.phi = Number(byId("ctl-phi").value))],
    ["ctl-a", () => (ctx.state.hypers.a = Number(byId("ctl-a").value))],
    ["ctl-b", () => (ctx.state.hypers.b = Number(byId("ctl-b").value))],
    ["ctl-ov-zs", () => (ctx.state.overlays.zs = byId("ctl-ov-zs").checked)],
    ["ctl-ov-bic", () => (ctx.state.overlays.bic = byId("ctl-ov-bic").checked)],
    ["ctl-ov-frac", () => (ctx.state.overlays.fractional = byId("ctl-ov-frac").checked)],
    ["ctl-hlm-seed", () => (ctx.state.hlm.syntheticSeed = Number(byId("ctl-hlm-seed").value))],
    ["ctl-hlm-pts", () => (ctx.state.hlm.pointsPerSlice = Number(byId("ctl-hlm-pts").value))],
    ["ctl-lab-mode", () => (ctx.state.lab.mode = byId("ctl-lab-mode").value === "2d" ? "2d" : "1d")],
    ["ctl-lab-draws", () => (ctx.state.lab.nDraws = Number(byId("ctl-lab-draws").value))],
    ["ctl-lab-reps", () => (ctx.state.lab.replicates = Number(byId("ctl-lab-reps").value))],
  ];
  for (const [id, apply] of bindings) {
    const el = document.getElementById(id);
    el?.addEventListener("change", () => {
      apply();
      pushState();
      void rerender();
    });
  }
  for (const view of ["regression_surface", "hlm_slices", "surrogate_lab"] as ViewName[]) {
    document.getElementById(`tab-${view}`)?.addEventListener("click", () => {
      ctx.state.view = view;
      pushState();
      void rerender();
    });
  }
}

function hydrateControls(): void {
  const set = (id: string, value: string) => {
    const el = document.getElementById(id) as HTMLInputElement | null;
    if (el) {
      if (el.type === "checkbox") el.checked = value === "1";
      else el.value = value;
    }
  };
  const s = ctx.state;
  set("ctl-n", String(s.sim.n));
  set("ctl-beta", String(s.sim.beta));
  set("ctl-sigma2", String(s.sim.sigma2));
  set("ctl-seed", String(s.sim.seed));
  set("ctl-mu", String(s.hypers.mu));
  set("ctl-phi", String(s.hypers.phi));
  set("ctl-a", String(s.hypers.a));
  set("ctl-b", String(s.hypers.b));
  set("ctl-ov-zs", s.overlays.zs ? "1" : "0");
  set("ctl-ov-bic", s.overlays.bic ? "1" : "0");
  set("ctl-ov-frac", s.overlays.fractional ? "1" : "0");
  set("ctl-hlm-seed", String(s.hlm.syntheticSeed));
  set("ctl-hlm-pts", String(s.hlm.pointsPerSlice));
  set("ctl-lab-mode", s.lab.mode);
  set("ctl-lab-draws", String(s.lab.nDraws));
  set("ctl-lab-reps", String(s.lab.replicates));
}

window.addEventListener("DOMContentLoaded", () => {
  ctx.state = decodeState(window.location.search.replace(/^\?/, ""));
  hydrateControls();
  bindControls();
  void rerender();
});
