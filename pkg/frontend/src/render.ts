/**
 * Result views: LaTeX line, SRT node-edge diagram over the ink, and the
 * inspection panel (dropped fragments + connection trace).
 *
 * The LaTeX string is displayed exactly as the service sent it; when a
 * KaTeX global is present it also typesets a pretty copy, falling back
 * to the raw string with a warning marker if typesetting fails.
 */

import { RecognitionResult } from "./types.js";

declare global {
  interface Window {
    katex?: { renderToString(tex: string, opts?: object): string };
  }
}

export function renderLatex(el: HTMLElement, result: RecognitionResult | null): void {
  el.textContent = result ? result.latex : "";
  el.classList.remove("latex-warning");
  const pretty = el.ownerDocument.getElementById(`${el.id}-pretty`);
  if (!pretty) return;
  pretty.innerHTML = "";
  if (!result || !result.latex) return;
  const katex = (el.ownerDocument.defaultView as Window | null)?.katex;
  if (!katex) return;
  try {
    pretty.innerHTML = katex.renderToString(result.latex, { throwOnError: true });
  } catch {
    el.classList.add("latex-warning");
  }
}

const SVG_NS = "http://www.w3.org/2000/svg";

interface ViewTransform {
  x(v: number): number;
  y(v: number): number;
}

function makeTransform(result: RecognitionResult, width: number, height: number): ViewTransform {
  const boxes = result.srt.nodes.map((n) => n.bbox);
  if (boxes.length === 0) {
    return { x: (v) => v, y: (v) => v };
  }
  const minX = Math.min(...boxes.map((b) => b[0]));
  const minY = Math.min(...boxes.map((b) => b[1]));
  const maxX = Math.max(...boxes.map((b) => b[2]));
  const maxY = Math.max(...boxes.map((b) => b[3]));
  const pad = 12;
  const scale = Math.min(
    (width - 2 * pad) / Math.max(maxX - minX, 1e-6),
    (height - 2 * pad) / Math.max(maxY - minY, 1e-6),
  );
  return {
    x: (v) => pad + (v - minX) * scale,
    y: (v) => pad + (v - minY) * scale,
  };
}

/** Node-edge diagram: nodes at bbox centers, labeled relation arrows, bbox outlines. */
export function renderSrtDiagram(
  svg: SVGSVGElement,
  result: RecognitionResult | null,
  width = 480,
  height = 240,
): void {
  const doc = svg.ownerDocument;
  while (svg.firstChild) svg.removeChild(svg.firstChild);
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  if (!result) return;
  const t = makeTransform(result, width, height);
  const centers = new Map<string, [number, number]>();
  for (const node of result.srt.nodes) {
    const [x0, y0, x1, y1] = node.bbox;
    centers.set(node.id, [t.x((x0 + x1) / 2), t.y((y0 + y1) / 2)]);
    const rect = doc.createElementNS(SVG_NS, "rect");
    rect.setAttribute("class", "node-bbox");
    rect.setAttribute("x", String(t.x(x0)));
    rect.setAttribute("y", String(t.y(y0)));
    rect.setAttribute("width", String(Math.max(t.x(x1) - t.x(x0), 2)));
    rect.setAttribute("height", String(Math.max(t.y(y1) - t.y(y0), 2)));
    svg.appendChild(rect);
  }
  for (const edge of result.srt.edges) {
    const from = centers.get(edge.parent);
    const to = centers.get(edge.child);
    if (!from || !to) continue;
    const line = doc.createElementNS(SVG_NS, "line");
    line.setAttribute("class", "srt-edge");
    line.setAttribute("x1", String(from[0]));
    line.setAttribute("y1", String(from[1]));
    line.setAttribute("x2", String(to[0]));
    line.setAttribute("y2", String(to[1]));
    line.setAttribute("marker-end", "url(#arrow)");
    svg.appendChild(line);
    const label = doc.createElementNS(SVG_NS, "text");
    label.setAttribute("class", "edge-label");
    label.setAttribute("x", String((from[0] + to[0]) / 2));
    label.setAttribute("y", String((from[1] + to[1]) / 2 - 4));
    label.textContent = edge.relation;
    svg.appendChild(label);
  }
  for (const node of result.srt.nodes) {
    const [cx, cy] = centers.get(node.id)!;
    const circle = doc.createElementNS(SVG_NS, "circle");
    circle.setAttribute("class", "srt-node");
    circle.setAttribute("cx", String(cx));
    circle.setAttribute("cy", String(cy));
    circle.setAttribute("r", "10");
    svg.appendChild(circle);
    const text = doc.createElementNS(SVG_NS, "text");
    text.setAttribute("class", "node-label");
    text.setAttribute("x", String(cx));
    text.setAttribute("y", String(cy + 4));
    text.setAttribute("text-anchor", "middle");
    text.textContent = node.label;
    svg.appendChild(text);
  }
}

/** Collapsible inspection panel: dropped fragments and connection scores. */
export function renderInspection(
  container: HTMLElement,
  badge: HTMLElement,
  result: RecognitionResult | null,
): void {
  container.innerHTML = "";
  badge.hidden = true;
  if (!result) return;
  const doc = container.ownerDocument;
  if (result.dropped_fragments.length > 0) {
    badge.hidden = false;
    badge.textContent = `${result.dropped_fragments.length} fragment(s) dropped`;
    const list = doc.createElement("ul");
    list.className = "dropped-list";
    for (const fragment of result.dropped_fragments) {
      const item = doc.createElement("li");
      item.textContent = `dropped: ${fragment.labels.join(" ")} (strokes ${fragment.strokes.join(",")})`;
      list.appendChild(item);
    }
    container.appendChild(list);
  }
  const trace = result.trace ?? [];
  if (trace.length > 0) {
    const table = doc.createElement("table");
    table.className = "trace-table";
    const head = doc.createElement("tr");
    for (const col of ["source", "target", "relation", "p"]) {
      const th = doc.createElement("th");
      th.textContent = col;
      head.appendChild(th);
    }
    table.appendChild(head);
    for (const entry of trace) {
      const row = doc.createElement("tr");
      for (const cell of [
        entry.source_node,
        String(entry.target),
        entry.relation,
        entry.probability.toFixed(3),
      ]) {
        const td = doc.createElement("td");
        td.textContent = cell;
        row.appendChild(td);
      }
      table.appendChild(row);
    }
    container.appendChild(table);
  }
}
