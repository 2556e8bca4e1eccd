/** Regression surface view: data scatter, log-BF contour map over the
 * (precision, slope-mean) plane, automatic-baseline overlays, and the two
 * prior density side panels.  Everything numeric on screen is a payload
 * value passed through fmt(). */

import { divergingColor, classGlyph } from "../color.js";
import { fmt } from "../format.js";
import { h, txt, type VNode } from "../svg.js";
import type { BfPayload, PriorsPayload, SimulatePayload, SurfaceResultPayload } from "../types.js";

export interface OverlayToggles {
  zs: boolean;
  bic: boolean;
  fractional: boolean;
}

export interface RegressionViewInput {
  surface: SurfaceResultPayload;
  bf: BfPayload;
  priors: PriorsPayload;
  simulated: SimulatePayload;
  overlays: OverlayToggles;
}

export interface SurfaceGrid {
  phiValues: number[];
  muValues: number[];
  logBf: (number | null)[][]; // [phiIndex][muIndex]
  classes: string[][];
}

/** Regrid the sample rows (location-major export order) by their two dims. */
export function surfaceToGrid(surface: SurfaceResultPayload): SurfaceGrid {
  const columns = surface.result.columns;
  const dims = columns.filter(
    (c) => !["replicate", "log_bf", "std_err", "class"].includes(c),
  );
  if (dims.length !== 2) {
    throw new Error(`regression surface expects 2 dims, got ${dims.length}`);
  }
  const [phiName, muName] = dims;
  const phiValues = [...new Set(surface.result.samples.map((s) => s[phiName] as number))];
  const muValues = [...new Set(surface.result.samples.map((s) => s[muName] as number))];
  const logBf: (number | null)[][] = phiValues.map(() => muValues.map(() => null));
  const classes: string[][] = phiValues.map(() => muValues.map(() => "error"));
  const phiIndex = new Map(phiValues.map((v, i) => [v, i]));
  const muIndex = new Map(muValues.map((v, i) => [v, i]));
  for (const row of surface.result.samples) {
    const i = phiIndex.get(row[phiName] as number)!;
    const j = muIndex.get(row[muName] as number)!;
    logBf[i][j] = row.log_bf;
    classes[i][j] = row.class;
  }
  return { phiValues, muValues, logBf, classes };
}

/** Compact class-grid string art used by the structure snapshot test. */
export function classGridArt(grid: SurfaceGrid): string {
  // rows: mu descending (top = large mu); columns: phi ascending
  const lines: string[] = [];
  for (let j = grid.muValues.length - 1; j >= 0; j--) {
    let line = "";
    for (let i = 0; i < grid.phiValues.length; i++) {
      line += classGlyph(grid.classes[i][j]);
    }
    lines.push(line);
  }
  return lines.join("\n");
}

const PLOT = { w: 420, h: 340, left: 56, top: 12, bottom: 36 };

function axisTicks(values: number[], count: number): number[] {
  if (values.length <= count) return values;
  const step = (values.length - 1) / (count - 1);
  const picked: number[] = [];
  for (let k = 0; k < count; k++) {
    picked.push(values[Math.round(k * step)]);
  }
  return picked;
}

function contourPanel(grid: SurfaceGrid): VNode {
  const { phiValues, muValues, logBf, classes } = grid;
  const innerW = PLOT.w - PLOT.left - 8;
  const innerH = PLOT.h - PLOT.top - PLOT.bottom;
  const cellW = innerW / phiValues.length;
  const cellH = innerH / muValues.length;
  const finite = logBf.flat().filter((v): v is number => v !== null);
  const limit = Math.max(...finite.map(Math.abs));

  const cells: VNode[] = [];
  for (let i = 0; i < phiValues.length; i++) {
    for (let j = 0; j < muValues.length; j++) {
      const value = logBf[i][j];
      const x = PLOT.left + i * cellW;
      const y = PLOT.top + (muValues.length - 1 - j) * cellH;
      const fill = value === null ? "#999" : divergingColor(value, limit);
      // class-boundary contours: outline cells whose class differs rightward/upward
      const boundary =
        (i + 1 < phiValues.length && classes[i + 1][j] !== classes[i][j]) ||
        (j + 1 < muValues.length && classes[i][j + 1] !== classes[i][j]);
      cells.push(
        h("rect", {
          x: x.toFixed(2),
          y: y.toFixed(2),
          width: cellW.toFixed(2),
          height: cellH.toFixed(2),
          fill,
          stroke: boundary ? "#222" : "none",
          "stroke-width": boundary ? "0.6" : "0",
          "data-class": value === null ? "error" : classes[i][j],
        }),
      );
    }
  }

  const ticks: VNode[] = [];
  for (const value of axisTicks(phiValues, 5)) {
    const i = phiValues.indexOf(value);
    ticks.push(
      h(
        "text",
        {
          x: (PLOT.left + (i + 0.5) * cellW).toFixed(2),
          y: PLOT.h - 18,
          "text-anchor": "middle",
          class: "tick",
        },
        txt(fmt(value), value),
      ),
    );
  }
  for (const value of axisTicks(muValues, 5)) {
    const j = muValues.indexOf(value);
    ticks.push(
      h(
        "text",
        {
          x: PLOT.left - 6,
          y: (PLOT.top + (muValues.length - 0.5 - j) * cellH).toFixed(2),
          "text-anchor": "end",
          class: "tick",
        },
        txt(fmt(value), value),
      ),
    );
  }

  return h(
    "svg",
    { viewBox: `0 0 ${PLOT.w} ${PLOT.h}`, class: "contour" },
    ...cells,
    ...ticks,
    h("text", { x: PLOT.w / 2, y: PLOT.h - 2, "text-anchor": "middle", class: "label" },
      txt("prior precision of the slope (log axis)")),
    h("text", {
      x: 12, y: PLOT.h / 2, "text-anchor": "middle", class: "label",
      transform: `rotate(-90 12 ${PLOT.h / 2})`,
    }, txt("prior mean of the slope")),
  );
}

function legendPanel(grid: SurfaceGrid, bf: BfPayload, overlays: OverlayToggles): VNode {
  const finite = grid.logBf.flat().filter((v): v is number => v !== null);
  const lo = Math.min(...finite);
  const hi = Math.max(...finite);
  const entries: VNode[] = [
    h("div", { class: "legend-row" },
      txt("log BF range "),
      h("span", { class: "value" }, txt(fmt(lo), lo)),
      txt(" to "),
      h("span", { class: "value" }, txt(fmt(hi), hi)),
    ),
    h("div", { class: "legend-row" },
      txt("class boundaries at one, three, five (absolute log BF)")),
  ];
  const overlayDefs: Array<[keyof OverlayToggles, string, number]> = [
    ["zs", "mixture g-prior plane", bf.results.zellner_siow.value],
    ["bic", "BIC plane", bf.results.bic.value],
    ["fractional", "fractional plane", bf.results.fractional.value],
  ];
  for (const [key, label, value] of overlayDefs) {
    if (overlays[key]) {
      entries.push(
        h("div", { class: "legend-row overlay", "data-overlay": key },
          txt(`${label}: `),
          h("span", { class: "value" }, txt(fmt(value), value)),
        ),
      );
    }
  }
  return h("div", { class: "legend" }, ...entries);
}

function scatterPanel(simulated: SimulatePayload): VNode {
  const { x, y } = simulated;
  const w = 300;
  const hgt = 240;
  const xLo = Math.min(...x);
  const xHi = Math.max(...x);
  const yLo = Math.min(...y);
  const yHi = Math.max(...y);
  const sx = (v: number) => 34 + ((v - xLo) / (xHi - xLo || 1)) * (w - 44);
  const sy = (v: number) => 10 + (1 - (v - yLo) / (yHi - yLo || 1)) * (hgt - 40);
  const dots = x.map((xi, i) =>
    h("circle", { cx: sx(xi).toFixed(2), cy: sy(y[i]).toFixed(2), r: 2.4, class: "dot" }),
  );
  return h(
    "div",
    { class: "scatter" },
    h("svg", { viewBox: `0 0 ${w} ${hgt}` }, ...dots),
    h("div", { class: "fit-readout" },
      txt("least-squares slope "),
      h("span", { class: "value" }, txt(fmt(simulated.ls_slope), simulated.ls_slope)),
      txt(" (se "),
      h("span", { class: "value" }, txt(fmt(simulated.ls_stderr), simulated.ls_stderr)),
      txt("), p-value "),
      h("span", { class: "value" }, txt(fmt(simulated.p_value), simulated.p_value)),
    ),
  );
}

function densityPanel(title: string, curve: { x: number[]; density: number[] }): VNode {
  const w = 220;
  const hgt = 120;
  const xLo = curve.x[0];
  const xHi = curve.x[curve.x.length - 1];
  const dHi = Math.max(...curve.density);
  const points = curve.x
    .map((xv, i) => {
      const px = 8 + ((xv - xLo) / (xHi - xLo || 1)) * (w - 16);
      const py = 8 + (1 - curve.density[i] / (dHi || 1)) * (hgt - 30);
      return `${px.toFixed(2)},${py.toFixed(2)}`;
    })
    .join(" ");
  return h(
    "div",
    { class: "density" },
    h("div", { class: "density-title" }, txt(title)),
    h("svg", { viewBox: `0 0 ${w} ${hgt}` },
      h("polyline", { points, fill: "none", stroke: "#246", "stroke-width": "1.5" }),
      h("text", { x: 8, y: hgt - 4, class: "tick" }, txt(fmt(xLo), xLo)),
      h("text", { x: w - 8, y: hgt - 4, "text-anchor": "end", class: "tick" },
        txt(fmt(xHi), xHi)),
    ),
  );
}

export function buildRegressionView(input: RegressionViewInput): {
  node: VNode;
  grid: SurfaceGrid;
} {
  const grid = surfaceToGrid(input.surface);
  const node = h(
    "div",
    { class: "view regression-view" },
    scatterPanel(input.simulated),
    contourPanel(grid),
    legendPanel(grid, input.bf, input.overlays),
    h("div", { class: "densities" },
      densityPanel("slope prior density", input.priors.beta),
      densityPanel("precision prior density", input.priors.gamma),
    ),
  );
  return { node, grid };
}
