/** Surrogate lab: replicated noisy evaluations with the fitted emulator.
 *
 * The 1-D mode shows the replicate scatter with the predictive mean and its
 * 95% band; the 2-D mode shows side-by-side mean and standard-deviation
 * heatmaps with the replicate-averaged observations overprinted at the
 * design locations (all averaging done server-side).
 */

import { divergingColor, sequentialColor } from "../color.js";
import { fmt } from "../format.js";
import { h, txt, type VNode } from "../svg.js";
import type { PredictPayload, SurfaceResultPayload } from "../types.js";

const W = 430;
const H = 300;
const PAD = { left: 52, right: 10, top: 12, bottom: 34 };

function dimColumns(payload: PredictPayload): string[] {
  return payload.columns.filter((c) => !["mean", "sd_mean", "sd_obs"].includes(c));
}

export function buildSurrogateLab1d(
  sweep: SurfaceResultPayload,
  pred: PredictPayload,
): { node: VNode } {
  const dims = dimColumns(pred);
  if (dims.length !== 1) {
    throw new Error(`1-D lab expects one dim, got ${dims.length}`);
  }
  const dimName = dims[0];
  const xs = pred.points.map((p) => Math.log10(p[0]));
  const samples = sweep.result.samples.filter((s) => s.log_bf !== null);
  const sampleXs = samples.map((s) => Math.log10(s[dimName] as number));
  const xLo = Math.min(...xs, ...sampleXs);
  const xHi = Math.max(...xs, ...sampleXs);
  const yLo = Math.min(...pred.band95_lo, ...samples.map((s) => s.log_bf as number));
  const yHi = Math.max(...pred.band95_hi, ...samples.map((s) => s.log_bf as number));
  const sx = (v: number) => PAD.left + ((v - xLo) / (xHi - xLo || 1)) * (W - PAD.left - PAD.right);
  const sy = (v: number) => PAD.top + (1 - (v - yLo) / (yHi - yLo || 1)) * (H - PAD.top - PAD.bottom);

  const band = xs
    .map((x, i) => `${sx(x).toFixed(2)},${sy(pred.band95_hi[i]).toFixed(2)}`)
    .concat([...xs.keys()].reverse().map((i) => `${sx(xs[i]).toFixed(2)},${sy(pred.band95_lo[i]).toFixed(2)}`))
    .join(" ");
  const meanLine = xs.map((x, i) => `${sx(x).toFixed(2)},${sy(pred.mean[i]).toFixed(2)}`).join(" ");
  const dots = samples.map((s) =>
    h("circle", {
      cx: sx(Math.log10(s[dimName] as number)).toFixed(2),
      cy: sy(s.log_bf as number).toFixed(2),
      r: 2.5,
      class: "rep-dot",
      "data-tooltip": `${dimName} = ${fmt(s[dimName] as number)}, log BF = ${fmt(s.log_bf as number)}`,
    }),
  );

  const xTickValues = [pred.points[0][0], pred.points[pred.points.length - 1][0]];
  const yTickValues = [yLo, yHi];
  const node = h(
    "div",
    { class: "view lab-view lab-1d" },
    h("svg", { viewBox: `0 0 ${W} ${H}` },
      h("polygon", { points: band, class: "gp-band" }),
      h("polyline", { points: meanLine, fill: "none", class: "gp-mean" }),
      ...dots,
      ...xTickValues.map((v) =>
        h("text", { x: sx(Math.log10(v)).toFixed(2), y: H - 12, "text-anchor": "middle", class: "tick" },
          txt(fmt(v), v)),
      ),
      ...yTickValues.map((v, i) =>
        h("text", { x: PAD.left - 5, y: (i === 0 ? sy(v) : sy(v) + 9).toFixed(2),
                    "text-anchor": "end", class: "tick" },
          txt(fmt(v), v)),
      ),
      h("text", { x: W / 2, y: H - 1, "text-anchor": "middle", class: "label" },
        txt("sweep axis (log scale); band covers new observations")),
    ),
    h("div", { class: "legend-row" }, txt("mean line with 95% band; dots are replicate runs")),
  );
  return { node };
}

export interface HeatCell {
  mean: number;
  sdObs: number;
  cls: string;
  tooltip: string;
}

export function buildSurrogateLab2d(
  pred: PredictPayload,
  summary: SurfaceResultPayload["location_summary"],
): { node: VNode; cells: HeatCell[] } {
  const dims = dimColumns(pred);
  if (dims.length !== 2) {
    throw new Error(`2-D lab expects two dims, got ${dims.length}`);
  }
  const [xName, yName] = dims;
  const [nx, ny] = pred.counts;
  const xVals = [...new Set(pred.points.map((p) => p[0]))];
  const yVals = [...new Set(pred.points.map((p) => p[1]))];
  const meanLimit = Math.max(...pred.mean.map(Math.abs));
  const sdLo = Math.min(...pred.sd_obs);
  const sdHi = Math.max(...pred.sd_obs);

  const panelW = 320;
  const panelH = 260;
  const inW = panelW - PAD.left - PAD.right;
  const inH = panelH - PAD.top - PAD.bottom;
  const cellW = inW / nx;
  const cellH = inH / ny;

  const xIsLog = xVals.every((v) => v > 0) && xVals[xVals.length - 1] / xVals[0] > 50;
  const xPos = (v: number) => (xIsLog ? Math.log10(v) : v);
  const xLo = xPos(xVals[0]);
  const xHi = xPos(xVals[xVals.length - 1]);
  const yLo = yVals[0];
  const yHi = yVals[yVals.length - 1];

  const cells: HeatCell[] = [];

  function heatPanel(kind: "mean" | "sd"): VNode {
    const rects: VNode[] = [];
    for (let k = 0; k < pred.points.length; k++) {
      const i = Math.floor(k / ny); // first dim varies slowest in grid exports
      const j = k % ny;
      const value = kind === "mean" ? pred.mean[k] : pred.sd_obs[k];
      const fill =
        kind === "mean" ? divergingColor(value, meanLimit) : sequentialColor(value, sdLo, sdHi);
      const tooltip = `${xName} = ${fmt(pred.points[k][0])}, ${yName} = ${fmt(
        pred.points[k][1],
      )}: mean ${fmt(pred.mean[k])}, sd ${fmt(pred.sd_obs[k])}, ${pred.class[k]}`;
      if (kind === "mean") {
        cells.push({ mean: pred.mean[k], sdObs: pred.sd_obs[k], cls: pred.class[k], tooltip });
      }
      rects.push(
        h("rect", {
          x: (PAD.left + i * cellW).toFixed(2),
          y: (PAD.top + (ny - 1 - j) * cellH).toFixed(2),
          width: cellW.toFixed(2),
          height: cellH.toFixed(2),
          fill,
          "data-tooltip": tooltip,
        }),
      );
    }
    const marks: VNode[] = [];
    if (kind === "mean") {
      for (const row of summary) {
        const px = PAD.left + ((xPos(row[xName] as number) - xLo) / (xHi - xLo || 1)) * inW;
        const py = PAD.top + (1 - ((row[yName] as number) - yLo) / (yHi - yLo || 1)) * inH;
        marks.push(
          h("text", {
            x: px.toFixed(2), y: py.toFixed(2), class: "obs-mark",
            "text-anchor": "middle",
          }, txt(fmt(row.mean_log_bf), row.mean_log_bf)),
        );
      }
    }
    return h(
      "div",
      { class: `heat-panel heat-${kind}` },
      h("div", { class: "panel-title" },
        txt(kind === "mean" ? "predictive mean" : "predictive standard deviation")),
      h("svg", { viewBox: `0 0 ${panelW} ${panelH}` },
        ...rects,
        ...marks,
        h("text", { x: PAD.left, y: panelH - 14, class: "tick" },
          txt(fmt(xVals[0]), xVals[0])),
        h("text", { x: panelW - PAD.right, y: panelH - 14, "text-anchor": "end", class: "tick" },
          txt(fmt(xVals[xVals.length - 1]), xVals[xVals.length - 1])),
        h("text", { x: PAD.left - 4, y: panelH - PAD.bottom, "text-anchor": "end", class: "tick" },
          txt(fmt(yLo), yLo)),
        h("text", { x: PAD.left - 4, y: PAD.top + 8, "text-anchor": "end", class: "tick" },
          txt(fmt(yHi), yHi)),
      ),
    );
  }

  const node = h(
    "div",
    { class: "view lab-view lab-2d" },
    heatPanel("mean"),
    heatPanel("sd"),
    h("div", { class: "legend-row" },
      txt("overprinted numbers are replicate-averaged observations at the design locations")),
  );
  return { node, cells };
}
