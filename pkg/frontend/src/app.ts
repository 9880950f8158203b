/** Browser wiring: graph view, arc-order slider, tree drill-down. */

import {
  BundleArc,
  ParsedBundle,
  RenderEdge,
  filterArcs,
  parseBundle,
  renderEdges,
} from "./model.js";
import { DEFAULT_LAYOUT, NodePosition, layoutGraph } from "./layout.js";
import { TreePanel, buildTreePanel, panelLeaves } from "./tree.js";

const SVG_NS = "http://www.w3.org/2000/svg";

interface ViewState {
  parsed: ParsedBundle;
  positions: Map<number, NodePosition>;
  sliderValue: number;
  twoArcMode: boolean;
  openNode: number | null;
}

let state: ViewState | null = null;

function el<K extends keyof HTMLElementTagNameMap>(tag: K, cls?: string): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  return node;
}

function svgEl(tag: string): SVGElement {
  return document.createElementNS(SVG_NS, tag);
}

function arrowPath(edge: RenderEdge, a: NodePosition, b: NodePosition): SVGElement {
  const line = svgEl("line");
  const dx = b.x - a.x;
  const dy = b.y - a.y;
  const d = Math.max(Math.hypot(dx, dy), 1e-3);
  const r = DEFAULT_LAYOUT.nodeRadius;
  line.setAttribute("x1", String(a.x + (dx / d) * r));
  line.setAttribute("y1", String(a.y + (dy / d) * r));
  line.setAttribute("x2", String(b.x - (dx / d) * r));
  line.setAttribute("y2", String(b.y - (dy / d) * r));
  line.setAttribute("class", "arc");
  line.setAttribute("marker-end", "url(#arrow)");
  if (edge.mutual) line.setAttribute("marker-start", "url(#arrow-back)");
  return line;
}

function renderGraph(): void {
  if (!state) return;
  const svg = document.getElementById("graph") as unknown as SVGSVGElement;
  while (svg.lastChild) svg.removeChild(svg.lastChild);

  const defs = svgEl("defs");
  defs.innerHTML =
    '<marker id="arrow" viewBox="0 0 10 10" refX="9" refY="5" markerWidth="7" ' +
    'markerHeight="7" orient="auto-start-reverse"><path d="M0,0 L10,5 L0,10 z"/></marker>' +
    '<marker id="arrow-back" viewBox="0 0 10 10" refX="1" refY="5" markerWidth="7" ' +
    'markerHeight="7" orient="auto"><path d="M10,0 L0,5 L10,10 z"/></marker>';
  svg.appendChild(defs);

  const visible: BundleArc[] = filterArcs(state.parsed.bundle, state.sliderValue);
  for (const edge of renderEdges(visible, state.twoArcMode)) {
    const a = state.positions.get(edge.from)!;
    const b = state.positions.get(edge.to)!;
    svg.appendChild(arrowPath(edge, a, b));
  }

  for (const node of state.parsed.bundle.nodes) {
    const pos = state.positions.get(node.index)!;
    const group = svgEl("g");
    group.setAttribute("class", "node");
    group.setAttribute("transform", `translate(${pos.x},${pos.y})`);
    const circle = svgEl("circle");
    circle.setAttribute("r", String(DEFAULT_LAYOUT.nodeRadius));
    const label = svgEl("text");
    label.textContent = node.title || `#${node.id}`;
    label.setAttribute("text-anchor", "middle");
    label.setAttribute("dy", "4");
    group.appendChild(circle);
    group.appendChild(label);
    const open = () => openTree(node.index);
    group.addEventListener("click", open);
    group.addEventListener("dblclick", open);
    svg.appendChild(group);
  }

  const counter = document.getElementById("arc-counter")!;
  counter.textContent = `${visible.length} / ${state.parsed.bundle.arcs.length} arcs`;
}

function renderLeafBars(panel: HTMLElement, leaves: ReturnType<typeof panelLeaves>): void {
  for (const leaf of leaves) {
    for (const bar of leaf.bars) {
      const row = el("div", "bar-row");
      const tag = el("span", "bar-label");
      tag.textContent = `state ${bar.state} (n=${bar.count})`;
      const track = el("div", "bar-track");
      const fill = el("div", "bar-fill");
      fill.style.width = `${(bar.fraction * 100).toFixed(2)}%`;
      const value = el("span", "bar-value");
      value.textContent = bar.posteriorLiteral;
      track.appendChild(fill);
      row.append(tag, track, value);
      panel.appendChild(row);
    }
  }
}

function renderTreeNode(node: TreePanel["root"], container: HTMLElement): void {
  if (node.kind === "leaf") {
    const box = el("div", "leaf-box");
    renderLeafBars(box, [node]);
    container.appendChild(box);
    return;
  }
  const box = el("div", "split-box");
  const head = el("div", "split-label");
  head.textContent = node.label;
  box.appendChild(head);
  const eq = el("div", "branch eq");
  const eqHead = el("div", "branch-label");
  eqHead.textContent = node.eqLabel;
  eq.appendChild(eqHead);
  renderTreeNode(node.eq, eq);
  const neq = el("div", "branch neq");
  const neqHead = el("div", "branch-label");
  neqHead.textContent = node.neqLabel;
  neq.appendChild(neqHead);
  renderTreeNode(node.neq, neq);
  box.append(eq, neq);
  container.appendChild(box);
}

function openTree(nodeIndex: number): void {
  if (!state) return;
  state.openNode = nodeIndex;
  const panel = buildTreePanel(state.parsed, nodeIndex);
  const host = document.getElementById("tree-panel")!;
  host.innerHTML = "";
  const crumb = el("button", "breadcrumb");
  crumb.textContent = "< back to graph";
  crumb.addEventListener("click", closeTree);
  const title = el("h2");
  title.textContent = `tree for ${panel.title}`;
  host.append(crumb, title);
  renderTreeNode(panel.root, host);
  document.getElementById("graph-view")!.classList.add("hidden");
  host.classList.remove("hidden");
}

function closeTree(): void {
  if (!state) return;
  state.openNode = null;
  document.getElementById("tree-panel")!.classList.add("hidden");
  // the graph view keeps its slider state untouched
  document.getElementById("graph-view")!.classList.remove("hidden");
}

function wireControls(): void {
  const slider = document.getElementById("arc-slider") as HTMLInputElement;
  slider.addEventListener("input", () => {
    if (!state) return;
    state.sliderValue = Number(slider.value);
    renderGraph();
  });
  const toggle = document.getElementById("two-arc-toggle") as HTMLInputElement;
  toggle.addEventListener("change", () => {
    if (!state) return;
    state.twoArcMode = toggle.checked;
    renderGraph();
  });
}

export function boot(text: string): void {
  const parsed = parseBundle(text);
  const positions = new Map<number, NodePosition>();
  for (const pos of layoutGraph(parsed.bundle)) positions.set(pos.index, pos);
  const slider = document.getElementById("arc-slider") as HTMLInputElement;
  slider.max = String(parsed.bundle.arcs.length);
  slider.value = slider.max; // start with every arc visible
  state = {
    parsed,
    positions,
    sliderValue: parsed.bundle.arcs.length,
    twoArcMode: false,
    openNode: null,
  };
  renderGraph();
}

async function loadFromServer(): Promise<void> {
  const status = document.getElementById("status")!;
  try {
    const resp = await fetch("/model.json");
    if (!resp.ok) throw new Error(`GET /model.json: ${resp.status}`);
    boot(await resp.text());
    status.textContent = "";
  } catch (err) {
    status.textContent = `could not fetch /model.json (${err}); open a bundle file instead`;
  }
}

function wireFilePicker(): void {
  const picker = document.getElementById("bundle-file") as HTMLInputElement;
  picker.addEventListener("change", async () => {
    const file = picker.files?.[0];
    if (file) boot(await file.text());
  });
}

if (typeof document !== "undefined" && document.getElementById("graph") !== null) {
  wireControls();
  wireFilePicker();
  void loadFromServer();
}
