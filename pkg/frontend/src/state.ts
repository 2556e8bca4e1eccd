/** Explorer state: control values, overlays, pending jobs, URL round-trip.
 *
 * Control validation mirrors the API's constraints so invalid values never
 * produce a request; the URL encoding is lossless for every finite control
 * value (String(n) -> Number(s) round-trips doubles exactly).
 */

export type ViewName = "regression_surface" | "hlm_slices" | "surrogate_lab";

export interface ExplorerState {
  view: ViewName;
  sim: { n: number; alpha: number; beta: number; sigma2: number; seed: number };
  hypers: { mu: number; phi: number; a: number; b: number };
  sweep: {
    phiLo: number; // base-10 exponents for the precision axis
    phiHi: number;
    phiCount: number;
    muLo: number;
    muHi: number;
    muCount: number;
  };
  overlays: { zs: boolean; bic: boolean; fractional: boolean };
  hlm: { syntheticSeed: number; pointsPerSlice: number };
  lab: { mode: "1d" | "2d"; nDraws: number; replicates: number; seed: number };
  jobs: { sweep: string; fit: string };
}

export function defaultState(): ExplorerState {
  return {
    view: "regression_surface",
    sim: { n: 30, alpha: 0, beta: 2.5, sigma2: 1, seed: 1 },
    hypers: { mu: 0, phi: 1, a: 1, b: 1 },
    sweep: { phiLo: -3, phiHi: 3, phiCount: 30, muLo: -3, muHi: 3, muCount: 30 },
    overlays: { zs: false, bic: false, fractional: false },
    hlm: { syntheticSeed: 0, pointsPerSlice: 15 },
    lab: { mode: "1d", nDraws: 2000, replicates: 10, seed: 3 },
    jobs: { sweep: "", fit: "" },
  };
}

export interface FieldError {
  field: string;
  message: string;
}

/** Client-side mirror of the API validation rules. */
export function validateState(state: ExplorerState): FieldError[] {
  const errors: FieldError[] = [];
  const need = (ok: boolean, field: string, message: string) => {
    if (!ok) errors.push({ field, message });
  };
  need(Number.isInteger(state.sim.n) && state.sim.n >= 3, "sim.n", "sample size must be >= 3");
  need(state.sim.sigma2 >= 0, "sim.sigma2", "error variance must be >= 0");
  need(state.hypers.phi > 0, "hypers.phi", "prior precision must be > 0");
  need(state.hypers.a > 0, "hypers.a", "shape must be > 0");
  need(state.hypers.b > 0, "hypers.b", "rate must be > 0");
  need(state.sweep.phiHi > state.sweep.phiLo, "sweep.phi", "upper exponent must exceed lower");
  need(state.sweep.muHi > state.sweep.muLo, "sweep.mu", "upper bound must exceed lower");
  need(
    state.sweep.phiCount >= 2 && state.sweep.phiCount <= 60,
    "sweep.phiCount",
    "grid count must be in [2, 60]",
  );
  need(
    state.sweep.muCount >= 2 && state.sweep.muCount <= 60,
    "sweep.muCount",
    "grid count must be in [2, 60]",
  );
  need(
    Number.isInteger(state.hlm.pointsPerSlice) && state.hlm.pointsPerSlice >= 1,
    "hlm.pointsPerSlice",
    "points per slice must be >= 1",
  );
  need(state.lab.nDraws >= 1000, "lab.nDraws", "draw budget must be >= 1000");
  need(
    Number.isInteger(state.lab.replicates) && state.lab.replicates >= 1,
    "lab.replicates",
    "replicates must be >= 1",
  );
  return errors;
}

type Flat = Record<string, string>;

function flatten(state: ExplorerState): Flat {
  return {
    view: state.view,
    n: String(state.sim.n),
    alpha: String(state.sim.alpha),
    beta: String(state.sim.beta),
    sigma2: String(state.sim.sigma2),
    seed: String(state.sim.seed),
    mu: String(state.hypers.mu),
    phi: String(state.hypers.phi),
    a: String(state.hypers.a),
    b: String(state.hypers.b),
    plo: String(state.sweep.phiLo),
    phi_: String(state.sweep.phiHi),
    pc: String(state.sweep.phiCount),
    mlo: String(state.sweep.muLo),
    mhi: String(state.sweep.muHi),
    mc: String(state.sweep.muCount),
    ov: [state.overlays.zs, state.overlays.bic, state.overlays.fractional]
      .map((b) => (b ? "1" : "0"))
      .join(""),
    hseed: String(state.hlm.syntheticSeed),
    hpts: String(state.hlm.pointsPerSlice),
    lmode: state.lab.mode,
    ldraws: String(state.lab.nDraws),
    lreps: String(state.lab.replicates),
    lseed: String(state.lab.seed),
    jsweep: state.jobs.sweep,
    jfit: state.jobs.fit,
  };
}

export function encodeState(state: ExplorerState): string {
  const params = new URLSearchParams();
  for (const [key, value] of Object.entries(flatten(state))) {
    if (value !== "") params.set(key, value);
  }
  return params.toString();
}

export function decodeState(query: string): ExplorerState {
  const params = new URLSearchParams(query);
  const state = defaultState();
  const num = (key: string, fallback: number) => {
    const raw = params.get(key);
    if (raw === null) return fallback;
    const value = Number(raw);
    return Number.isNaN(value) ? fallback : value;
  };
  const view = params.get("view");
  if (view === "regression_surface" || view === "hlm_slices" || view === "surrogate_lab") {
    state.view = view;
  }
  state.sim = {
    n: num("n", state.sim.n),
    alpha: num("alpha", state.sim.alpha),
    beta: num("beta", state.sim.beta),
    sigma2: num("sigma2", state.sim.sigma2),
    seed: num("seed", state.sim.seed),
  };
  state.hypers = {
    mu: num("mu", state.hypers.mu),
    phi: num("phi", state.hypers.phi),
    a: num("a", state.hypers.a),
    b: num("b", state.hypers.b),
  };
  state.sweep = {
    phiLo: num("plo", state.sweep.phiLo),
    phiHi: num("phi_", state.sweep.phiHi),
    phiCount: num("pc", state.sweep.phiCount),
    muLo: num("mlo", state.sweep.muLo),
    muHi: num("mhi", state.sweep.muHi),
    muCount: num("mc", state.sweep.muCount),
  };
  const ov = params.get("ov") ?? "";
  state.overlays = {
    zs: ov[0] === "1",
    bic: ov[1] === "1",
    fractional: ov[2] === "1",
  };
  state.hlm = {
    syntheticSeed: num("hseed", state.hlm.syntheticSeed),
    pointsPerSlice: num("hpts", state.hlm.pointsPerSlice),
  };
  const lmode = params.get("lmode");
  state.lab = {
    mode: lmode === "2d" ? "2d" : "1d",
    nDraws: num("ldraws", state.lab.nDraws),
    replicates: num("lreps", state.lab.replicates),
    seed: num("lseed", state.lab.seed),
  };
  state.jobs = { sweep: params.get("jsweep") ?? "", fit: params.get("jfit") ?? "" };
  return state;
}
