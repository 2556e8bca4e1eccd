/** The single number-to-text path of the explorer.
 *
 * All displayed numbers go through fmt(); the contract tests re-derive the
 * text from the raw payload value and require an exact match.
 */

export function fmt(value: number): string {
  if (!Number.isFinite(value)) {
    return String(value);
  }
  if (value === 0) {
    return "0";
  }
  const magnitude = Math.abs(value);
  if (magnitude >= 1e4 || magnitude < 1e-3) {
    return value.toExponential(2);
  }
  const text = value.toPrecision(4);
  // trim trailing zeros of plain decimals ("2.500" -> "2.5", "30.00" -> "30")
  return text.includes(".") && !text.includes("e")
    ? text.replace(/\.?0+$/, "")
    : text;
}

export function fmtSigned(value: number): string {
  const body = fmt(value);
  return value > 0 ? `+${body}` : body;
}
