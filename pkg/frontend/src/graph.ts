// Subgraph layout and SVG rendering. Layout is a pure function (testable
// without a DOM); drawing turns it into SVG elements with click handlers.

import type { SubgraphJson, UpgJson } from "./types.js";

export interface LaidOutNode {
  path: string;
  x: number;
  y: number;
  column: number;
  label: string;
  kind: string;
  unsafety: "safe" | "unsafe";
  external: boolean;
}

export interface LaidOutEdge {
  caller: string;
  callee: string;
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export interface Layout {
  width: number;
  height: number;
  nodes: LaidOutNode[];
  edges: LaidOutEdge[];
  columns: { index: number; title: string }[];
}

const COL_WIDTH = 210;
const ROW_HEIGHT = 64;
const MARGIN = 28;
export const NODE_W = 170;
export const NODE_H = 36;

function shortLabel(path: string): string {
  const parts = path.split("::");
  return parts.length > 2 ? `…::${parts.slice(-1)[0]}` : path;
}

/** Column assignment per subgraph kind:
 *  struct_audit: constructors | focus | other disruptive | unsafe callees,
 *  call:         caller | callee,
 *  unsafe_node:  the node alone. */
export function layoutSubgraph(sg: SubgraphJson, upg: UpgJson): Layout {
  const byPath = new Map(upg.nodes.map((n) => [n.function, n]));
  const group = upg.struct_groups.find(
    (g) =>
      g.dynamic_methods.includes(sg.focus) ||
      g.destructor === sg.focus ||
      g.constructors.includes(sg.focus),
  );

  const columns: { title: string; members: string[] }[] = [];
  if (sg.kind === "struct_audit" && group) {
    const callees = sg.edges.map((e) => e.callee);
    const disruptive = group.disruptive.filter((p) => p !== sg.focus);
    columns.push({ title: "constructors", members: group.constructors });
    columns.push({ title: "audited method", members: [sg.focus] });
    if (disruptive.length > 0) {
      columns.push({ title: "disruptive", members: disruptive });
    }
    columns.push({ title: "unsafe callees", members: [...new Set(callees)].sort() });
  } else if (sg.kind === "call_with_unsafe_callee") {
    const callees = sg.edges.map((e) => e.callee);
    columns.push({ title: "caller", members: [sg.focus] });
    columns.push({ title: "callee", members: [...new Set(callees)].sort() });
  } else {
    columns.push({ title: "unsafe function", members: [sg.focus] });
  }

  const placed = new Map<string, LaidOutNode>();
  const nodes: LaidOutNode[] = [];
  let maxRows = 1;
  columns.forEach((col, ci) => {
    maxRows = Math.max(maxRows, col.members.length);
    col.members.forEach((path, ri) => {
      if (placed.has(path)) return;
      const meta = byPath.get(path);
      const isFocusMethod = sg.kind === "struct_audit" && path !== sg.focus && group;
      const node: LaidOutNode = {
        path,
        x: MARGIN + ci * COL_WIDTH,
        y: MARGIN + 24 + ri * ROW_HEIGHT,
        column: ci,
        label: shortLabel(path),
        kind:
          meta?.kind ??
          (group?.constructors.includes(path)
            ? "constructor"
            : group?.destructor === path
              ? "destructor"
              : isFocusMethod
                ? "dynamic_method"
                : "static_fn"),
        unsafety: meta?.unsafety ?? "safe",
        external: meta?.external ?? false,
      };
      placed.set(path, node);
      nodes.push(node);
    });
  });

  const edges: LaidOutEdge[] = [];
  for (const e of sg.edges) {
    const from = placed.get(e.caller);
    const to = placed.get(e.callee);
    if (!from || !to) continue;
    edges.push({
      caller: e.caller,
      callee: e.callee,
      x1: from.x + NODE_W,
      y1: from.y + NODE_H / 2,
      x2: to.x,
      y2: to.y + NODE_H / 2,
    });
  }

  return {
    width: MARGIN * 2 + columns.length * COL_WIDTH,
    height: MARGIN * 2 + 24 + maxRows * ROW_HEIGHT,
    nodes,
    edges,
    columns: columns.map((c, i) => ({ index: i, title: c.title })),
  };
}

const SVG_NS = "http://www.w3.org/2000/svg";

export interface GraphCallbacks {
  onNodeClick(path: string): void;
  onEdgeClick(caller: string, callee: string): void;
}

export function renderSvg(layout: Layout, callbacks: GraphCallbacks): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${layout.width} ${layout.height}`);
  svg.setAttribute("width", String(layout.width));
  svg.setAttribute("height", String(layout.height));
  svg.classList.add("upg-graph");

  const defs = document.createElementNS(SVG_NS, "defs");
  defs.innerHTML =
    '<marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="7" markerHeight="7" orient="auto-start-reverse">' +
    '<path d="M 0 0 L 10 5 L 0 10 z" fill="currentColor"/></marker>';
  svg.appendChild(defs);

  for (const col of layout.columns) {
    const title = document.createElementNS(SVG_NS, "text");
    title.setAttribute("x", String(28 + col.index * 210));
    title.setAttribute("y", "20");
    title.classList.add("column-title");
    title.textContent = col.title;
    svg.appendChild(title);
  }

  for (const e of layout.edges) {
    const line = document.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", String(e.x1));
    line.setAttribute("y1", String(e.y1));
    line.setAttribute("x2", String(e.x2));
    line.setAttribute("y2", String(e.y2));
    line.setAttribute("marker-end", "url(#arrow)");
    line.classList.add("edge");
    line.addEventListener("click", () => callbacks.onEdgeClick(e.caller, e.callee));
    svg.appendChild(line);
  }

  for (const n of layout.nodes) {
    const g = document.createElementNS(SVG_NS, "g");
    g.classList.add("node", `kind-${n.kind}`, `unsafety-${n.unsafety}`);
    if (n.external) g.classList.add("external");
    const rect = document.createElementNS(SVG_NS, "rect");
    rect.setAttribute("x", String(n.x));
    rect.setAttribute("y", String(n.y));
    rect.setAttribute("width", String(NODE_W));
    rect.setAttribute("height", String(NODE_H));
    rect.setAttribute("rx", n.unsafety === "unsafe" ? "0" : "10");
    const text = document.createElementNS(SVG_NS, "text");
    text.setAttribute("x", String(n.x + NODE_W / 2));
    text.setAttribute("y", String(n.y + NODE_H / 2 + 4));
    text.setAttribute("text-anchor", "middle");
    text.textContent = n.label;
    const title = document.createElementNS(SVG_NS, "title");
    title.textContent = `${n.path} (${n.kind}, ${n.unsafety})`;
    g.append(rect, text, title);
    g.addEventListener("click", () => callbacks.onNodeClick(n.path));
    svg.appendChild(g);
  }

  return svg;
}
