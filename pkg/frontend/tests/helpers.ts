import { readFileSync } from "node:fs";

import { fmt } from "../src/format.js";
import { isText, walkText, type TextNode, type VNode } from "../src/svg.js";

export function loadFixture<T>(name: string): T {
  const url = new URL(`../fixtures/${name}.json`, import.meta.url);
  return JSON.parse(readFileSync(url, "utf-8")) as T;
}

/** Every number anywhere in a payload, for verbatim-membership checks. */
export function collectNumbers(value: unknown, into = new Set<number>()): Set<number> {
  if (typeof value === "number" && Number.isFinite(value)) {
    into.add(value);
  } else if (Array.isArray(value)) {
    for (const item of value) collectNumbers(item, into);
  } else if (value !== null && typeof value === "object") {
    for (const item of Object.values(value as Record<string, unknown>)) {
      collectNumbers(item, into);
    }
  }
  return into;
}

/** Every string and every key anywhere in a payload (labels, class names). */
export function collectStrings(value: unknown, into = new Set<string>()): Set<string> {
  if (typeof value === "string") {
    into.add(value);
  } else if (Array.isArray(value)) {
    for (const item of value) collectStrings(item, into);
  } else if (value !== null && typeof value === "object") {
    for (const [key, item] of Object.entries(value as Record<string, unknown>)) {
      into.add(key);
      collectStrings(item, into);
    }
  }
  return into;
}

// standalone numeric tokens only: digits inside identifiers (mu0_1) don't count
const NUMBER_TOKEN = /(?<![\w.])-?\d+(?:\.\d+)?(?:e[+-]?\d+)?(?![\w.])/gi;

export interface ContractViolation {
  kind: string;
  text: string;
}

/** Static digit-bearing strings the views are allowed to show. */
const STATIC_LABELS = new Set<string>([
  "mean line with 95% band; dots are replicate runs",
]);

/**
 * The UI-no-compute contract: every displayed number must be a payload value.
 *
 * Text nodes carrying `raw` must hold a payload number and render exactly as
 * fmt(raw); digit-bearing text without `raw` must be whitelisted static copy;
 * numeric tokens inside tooltip attributes must each be the fmt() image of a
 * payload number.
 */
export function contractViolations(
  root: VNode,
  payloadNumbers: Set<number>,
  payloadStrings: Set<string> = new Set(),
): ContractViolation[] {
  const violations: ContractViolation[] = [];
  const fmtImages = new Set<string>();
  for (const value of payloadNumbers) {
    fmtImages.add(fmt(value));
  }

  for (const node of walkText(root)) {
    checkText(node, violations, payloadNumbers, payloadStrings);
  }
  scanTooltips(root, violations, fmtImages);
  return violations;
}

function checkText(
  node: TextNode,
  violations: ContractViolation[],
  payloadNumbers: Set<number>,
  payloadStrings: Set<string>,
): void {
  if (node.raw !== undefined) {
    if (!payloadNumbers.has(node.raw)) {
      violations.push({ kind: "raw-not-in-payload", text: `${node.text} (${node.raw})` });
    }
    if (node.text !== fmt(node.raw)) {
      violations.push({ kind: "text-not-fmt-of-raw", text: node.text });
    }
    return;
  }
  if (STATIC_LABELS.has(node.text)) {
    return;
  }
  // digit-bearing labels are fine when they are payload strings themselves
  // (hyperparameter names like "mu0_1"), possibly used as "name: " prefixes
  const stripped = node.text.replace(/:\s*$/, "");
  if (payloadStrings.has(node.text) || payloadStrings.has(stripped)) {
    return;
  }
  if (/\d/.test(node.text)) {
    violations.push({ kind: "digits-without-raw", text: node.text });
  }
}

function scanTooltips(
  node: VNode,
  violations: ContractViolation[],
  fmtImages: Set<string>,
): void {
  const tooltip = node.attrs["data-tooltip"];
  if (tooltip) {
    for (const token of tooltip.match(NUMBER_TOKEN) ?? []) {
      if (!fmtImages.has(token)) {
        violations.push({ kind: "tooltip-token-not-from-payload", text: token });
      }
    }
  }
  for (const child of node.children) {
    if (!isText(child)) {
      scanTooltips(child, violations, fmtImages);
    }
  }
}
