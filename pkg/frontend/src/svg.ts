/** Minimal virtual-SVG layer.
 *
 * Views build plain node trees; the DOM glue serializes them, and the
 * contract tests walk them.  Every user-visible number is a TextNode whose
 * `raw` field carries the exact payload value behind the formatted text,
 * which is what lets the tests verify the UI never invents a number.
 */

export interface TextNode {
  text: string;
  raw?: number;
}

export interface VNode {
  tag: string;
  attrs: Record<string, string>;
  children: Array<VNode | TextNode>;
}

export function isText(node: VNode | TextNode): node is TextNode {
  return (node as TextNode).text !== undefined;
}

export function h(
  tag: string,
  attrs: Record<string, string | number> = {},
  ...children: Array<VNode | TextNode | null>
): VNode {
  const normalized: Record<string, string> = {};
  for (const [key, value] of Object.entries(attrs)) {
    normalized[key] = String(value);
  }
  return {
    tag,
    attrs: normalized,
    children: children.filter((c): c is VNode | TextNode => c !== null),
  };
}

export function txt(text: string, raw?: number): TextNode {
  return raw === undefined ? { text } : { text, raw };
}

const ESCAPES: Record<string, string> = {
  "&": "&amp;",
  "<": "&lt;",
  ">": "&gt;",
  '"': "&quot;",
};

function escapeXml(value: string): string {
  return value.replace(/[&<>"]/g, (c) => ESCAPES[c]);
}

export function renderToString(node: VNode | TextNode): string {
  if (isText(node)) {
    return escapeXml(node.text);
  }
  const attrs = Object.entries(node.attrs)
    .map(([k, v]) => ` ${k}="${escapeXml(v)}"`)
    .join("");
  const inner = node.children.map(renderToString).join("");
  return `<${node.tag}${attrs}>${inner}</${node.tag}>`;
}

/** Depth-first iterator over every text node of a view tree. */
export function* walkText(node: VNode | TextNode): Generator<TextNode> {
  if (isText(node)) {
    yield node;
    return;
  }
  for (const child of node.children) {
    yield* walkText(child);
  }
}
