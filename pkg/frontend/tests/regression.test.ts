import { describe, expect, it } from "vitest";

import { renderToString, walkText } from "../src/svg.js";
import { fmt } from "../src/format.js";
import {
  buildRegressionView,
  classGridArt,
  surfaceToGrid,
} from "../src/views/regression.js";
import type {
  BfPayload,
  PriorsPayload,
  SimulatePayload,
  SurfaceResultPayload,
} from "../src/types.js";
import { loadFixture } from "./helpers.js";

const surface = loadFixture<SurfaceResultPayload>("regression_surface");
const bf = loadFixture<BfPayload>("bf");
const priors = loadFixture<PriorsPayload>("priors");
const simulated = loadFixture<SimulatePayload>("simulate");

function build(overlays = { zs: false, bic: false, fractional: false }) {
  return buildRegressionView({ surface, bf, priors, simulated, overlays });
}

describe("regression surface view", () => {
  it("regrids the 30x30 sweep faithfully", () => {
    const grid = surfaceToGrid(surface);
    expect(grid.phiValues).toHaveLength(30);
    expect(grid.muValues).toHaveLength(30);
    expect(grid.logBf.flat().every((v) => v !== null)).toBe(true);
  });

  it("reproduces the blue/red evidence structure", () => {
    const art = classGridArt(surfaceToGrid(surface));
    const rows = art.split("\n");
    // bottom row is the smallest slope-prior mean; rightmost column the
    // tightest precision: the very-strong null corner must sit there
    expect(rows[rows.length - 1].endsWith("R")).toBe(true);
    // strong/very-strong slope evidence appears near the top rows (prior
    // mean close to the data slope) at moderate-to-high precision
    const upper = rows.slice(0, 10).join("");
    expect(/[bB]/.test(upper)).toBe(true);
    expect(art).toMatchSnapshot();
  });

  it("marks class-boundary cells so contour bands are visible", () => {
    const { node } = build();
    const html = renderToString(node);
    expect(html).toContain('stroke="#222"');
    expect(html).toContain('data-class="very_strong:favors_M2"');
  });

  it("overlay legend equals the bayes-factor endpoint values exactly", () => {
    const { node } = build({ zs: false, bic: true, fractional: false });
    const texts = [...walkText(node)];
    const bicEntry = texts.find((t) => t.raw === bf.results.bic.value);
    expect(bicEntry).toBeDefined();
    expect(bicEntry!.text).toBe(fmt(bf.results.bic.value));
    // untoggled planes are absent
    expect(texts.some((t) => t.raw === bf.results.zellner_siow.value)).toBe(false);
  });

  it("shows the least-squares readouts from the simulate payload", () => {
    const { node } = build();
    const raws = new Set([...walkText(node)].map((t) => t.raw));
    expect(raws.has(simulated.ls_slope)).toBe(true);
    expect(raws.has(simulated.p_value)).toBe(true);
  });
});
