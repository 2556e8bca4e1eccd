/** Diverging color scale anchored at log BF = 0 (blue favors the slope model,
 * red the null), plus a sequential scale for standard-deviation heatmaps.
 * The evidence-class boundary levels are the fixed convention constants. */

export const CLASS_BOUNDARIES = [-5, -3, -1, 1, 3, 5];

function channel(a: number, b: number, t: number): number {
  return Math.round(a + (b - a) * t);
}

/** value in [-limit, limit] -> white-centered blue/red diverging rgb(). */
export function divergingColor(value: number, limit: number): string {
  const t = Math.max(-1, Math.min(1, limit > 0 ? value / limit : 0));
  if (t >= 0) {
    // white -> blue
    return `rgb(${channel(255, 33, t)},${channel(255, 102, t)},${channel(255, 172, t)})`;
  }
  // white -> red
  const s = -t;
  return `rgb(${channel(255, 178, s)},${channel(255, 24, s)},${channel(255, 43, s)})`;
}

/** value in [lo, hi] -> white-to-violet sequential rgb(). */
export function sequentialColor(value: number, lo: number, hi: number): string {
  const t = hi > lo ? Math.max(0, Math.min(1, (value - lo) / (hi - lo))) : 0;
  return `rgb(${channel(252, 84, t)},${channel(251, 39, t)},${channel(253, 143, t)})`;
}

/** Strength-only glyph for compact class-grid snapshots. */
export function classGlyph(label: string): string {
  switch (label) {
    case "very_strong:favors_M1":
      return "B";
    case "strong:favors_M1":
      return "b";
    case "positive:favors_M1":
      return "+";
    case "negligible:favors_M1":
    case "negligible:favors_M2":
      return ".";
    case "positive:favors_M2":
      return "-";
    case "strong:favors_M2":
      return "r";
    case "very_strong:favors_M2":
      return "R";
    default:
      return "X";
  }
}
