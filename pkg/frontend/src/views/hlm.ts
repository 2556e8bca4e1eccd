/** HLM slices view: one panel per hyperparameter with evaluated points,
 * the GP fit line with its 90% band, the calibrated-default triangle,
 * and gaps (plus a legend note) where points were skipped. */

import { fmt } from "../format.js";
import { h, txt, type TextNode, type VNode } from "../svg.js";
import type { SlicePayload, SlicesPayload } from "../types.js";

const W = 230;
const H = 170;
const PAD = { left: 44, right: 8, top: 10, bottom: 28 };

export interface PanelInfo {
  name: string;
  span: number; // vertical range of the evaluated values (payload numbers)
  skipped: number;
  tooltips: Array<{ label: string; gridValue: number; logBf: number }>;
}

function isLogScaled(grid: number[]): boolean {
  const positive = grid.every((v) => v > 0);
  return positive && grid[grid.length - 1] / Math.max(grid[0], 1e-300) > 50;
}

function panel(slice: SlicePayload): { node: VNode; info: PanelInfo } {
  const finite = slice.log_bf.filter((v): v is number => v !== null);
  const bandLo = slice.gp ? Math.min(...slice.gp.band90_lo) : Infinity;
  const bandHi = slice.gp ? Math.max(...slice.gp.band90_hi) : -Infinity;
  const yLo = Math.min(...finite, bandLo);
  const yHi = Math.max(...finite, bandHi);
  const log = isLogScaled(slice.grid);
  const xPos = (v: number) => (log ? Math.log10(v) : v);
  const xLo = xPos(slice.grid[0]);
  const xHi = xPos(slice.grid[slice.grid.length - 1]);
  const sx = (v: number) =>
    PAD.left + ((xPos(v) - xLo) / (xHi - xLo || 1)) * (W - PAD.left - PAD.right);
  const sy = (v: number) =>
    PAD.top + (1 - (v - yLo) / (yHi - yLo || 1)) * (H - PAD.top - PAD.bottom);

  const children: VNode[] = [];
  if (slice.gp) {
    const band = slice.gp.mesh
      .map((m, i) => `${sx(m).toFixed(2)},${sy(slice.gp!.band90_hi[i]).toFixed(2)}`)
      .concat(
        [...slice.gp.mesh.keys()]
          .reverse()
          .map((i) => `${sx(slice.gp!.mesh[i]).toFixed(2)},${sy(slice.gp!.band90_lo[i]).toFixed(2)}`),
      )
      .join(" ");
    children.push(h("polygon", { points: band, class: "gp-band" }));
    const line = slice.gp.mesh
      .map((m, i) => `${sx(m).toFixed(2)},${sy(slice.gp!.mean[i]).toFixed(2)}`)
      .join(" ");
    children.push(h("polyline", { points: line, fill: "none", class: "gp-mean" }));
  }

  const tooltips: PanelInfo["tooltips"] = [];
  slice.grid.forEach((g, i) => {
    const value = slice.log_bf[i];
    if (value === null || slice.skipped[i]) {
      return; // skipped points render as gaps
    }
    const label = `${slice.hyper} = ${fmt(g)}, log BF = ${fmt(value)}`;
    tooltips.push({ label, gridValue: g, logBf: value });
    children.push(
      h("circle", {
        cx: sx(g).toFixed(2),
        cy: sy(value).toFixed(2),
        r: 3,
        class: "slice-dot",
        "data-tooltip": label,
      }),
    );
  });

  // calibrated-default marker (triangle at the panel floor)
  const cx = sx(slice.center_value);
  children.push(
    h("path", {
      d: `M ${(cx - 5).toFixed(2)} ${H - PAD.bottom + 12} L ${(cx + 5).toFixed(2)} ${
        H - PAD.bottom + 12
      } L ${cx.toFixed(2)} ${H - PAD.bottom + 3} Z`,
      class: "default-marker",
    }),
  );

  const yTicks: VNode[] = [yLo, yHi].map((v, i) =>
    h(
      "text",
      { x: PAD.left - 4, y: (i === 0 ? sy(yLo) : sy(yHi) + 8).toFixed(2),
        "text-anchor": "end", class: "tick" },
      txt(fmt(v), v),
    ),
  );
  const xTickValues = [slice.grid[0], slice.grid[slice.grid.length - 1]];
  const xTicks: VNode[] = xTickValues.map((v) =>
    h(
      "text",
      { x: sx(v).toFixed(2), y: H - PAD.bottom + 24, "text-anchor": "middle", class: "tick" },
      txt(fmt(v), v),
    ),
  );

  const skippedCount = slice.skipped.filter(Boolean).length;
  const title: (VNode | TextNode)[] = [txt(slice.hyper)];
  const info: PanelInfo = {
    name: slice.hyper,
    span: finite.length ? Math.max(...finite) - Math.min(...finite) : 0,
    skipped: skippedCount,
    tooltips,
  };
  const node = h(
    "div",
    { class: "slice-panel", "data-hyper": slice.hyper },
    h("div", { class: "panel-title" }, ...title),
    h("svg", { viewBox: `0 0 ${W} ${H}` }, ...children, ...yTicks, ...xTicks),
  );
  return { node, info };
}

export function buildHlmSlicesView(payload: SlicesPayload): {
  node: VNode;
  panels: PanelInfo[];
} {
  const panels: PanelInfo[] = [];
  const nodes: VNode[] = [];
  let anySkipped = false;
  for (const slice of payload.slices) {
    const built = panel(slice);
    panels.push(built.info);
    nodes.push(built.node);
    anySkipped = anySkipped || built.info.skipped > 0;
  }
  const centerRows = Object.entries(payload.center).map(([name, value]) =>
    h("div", { class: "center-row" },
      txt(`${name}: `),
      h("span", { class: "value" }, txt(fmt(value), value)),
    ),
  );
  const node = h(
    "div",
    { class: "view hlm-view" },
    h("div", { class: "slice-grid" }, ...nodes),
    h("div", { class: "hlm-sidebar" },
      h("div", { class: "sidebar-title" }, txt("calibrated defaults (triangles)")),
      ...centerRows,
      anySkipped
        ? h("div", { class: "skip-note" },
            txt("gaps mark skipped points: the requested prior covariance is not positive definite"))
        : null,
    ),
  );
  return { node, panels };
}
