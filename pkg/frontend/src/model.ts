/** Viewer bundle loading, validation, and the arc-reveal filter. */

export interface BundleNode {
  id: number;
  index: number;
  title: string;
}

export interface BundleArc {
  from: number;
  to: number;
  strength: number;
  order_index: number;
}

export interface SplitNode {
  split: { variable: number; value: number };
  eq: BundleTree;
  neq: BundleTree;
}

export interface LeafNode {
  leaf: { counts: number[]; posterior: number[] };
}

export type BundleTree = SplitNode | LeafNode;

export interface ViewerBundle {
  format: string;
  version: number;
  metadata: { kappa: number; dataset: { cases: number; items: number; checksum: string } };
  nodes: BundleNode[];
  arcs: BundleArc[];
  trees: BundleTree[];
}

export interface ParsedBundle {
  bundle: ViewerBundle;
  /** Raw posterior number literals per tree, leaf-preorder, straight from the
   *  bundle bytes; displayed text must not re-derive probabilities. */
  posteriorLiterals: string[][][];
}

export function isSplit(node: BundleTree): node is SplitNode {
  return (node as SplitNode).split !== undefined;
}

export class BundleFormatError extends Error {}

function countLeaves(node: BundleTree): number {
  return isSplit(node) ? countLeaves(node.eq) + countLeaves(node.neq) : 1;
}

/** Pull the posterior literals out of the bundle text in document order;
 *  document order equals tree order and leaf preorder by construction. */
function extractPosteriorLiterals(text: string, trees: BundleTree[]): string[][][] {
  const matches: string[][] = [];
  const re = /"posterior":\[([^\]]*)\]/g;
  let m: RegExpExecArray | null;
  while ((m = re.exec(text)) !== null) {
    matches.push(m[1].split(","));
  }
  const out: string[][][] = [];
  let cursor = 0;
  for (const tree of trees) {
    const take = countLeaves(tree);
    out.push(matches.slice(cursor, cursor + take));
    cursor += take;
  }
  if (cursor !== matches.length) {
    throw new BundleFormatError("posterior literal count does not match leaf count");
  }
  return out;
}

export function parseBundle(text: string): ParsedBundle {
  let bundle: ViewerBundle;
  try {
    bundle = JSON.parse(text) as ViewerBundle;
  } catch (err) {
    throw new BundleFormatError(`bundle is not valid JSON: ${err}`);
  }
  if (bundle.format !== "depnet-viewer") {
    throw new BundleFormatError(`not a viewer bundle: format=${bundle.format}`);
  }
  if (bundle.version !== 1) {
    throw new BundleFormatError(`unsupported bundle version ${bundle.version}`);
  }
  if (bundle.trees.length !== bundle.nodes.length) {
    throw new BundleFormatError("need exactly one tree per node");
  }
  const orders = bundle.arcs.map((a) => a.order_index).sort((a, b) => a - b);
  for (let i = 0; i < orders.length; i++) {
    if (orders[i] !== i) {
      throw new BundleFormatError("arc order_index values must be a permutation of 0..n-1");
    }
  }
  return { bundle, posteriorLiterals: extractPosteriorLiterals(text, bundle.trees) };
}

/** Exactly the arcs with order_index < sliderValue, strongest first. */
export function filterArcs(bundle: ViewerBundle, sliderValue: number): BundleArc[] {
  if (sliderValue < 0 || sliderValue > bundle.arcs.length) {
    throw new RangeError(`slider value ${sliderValue} outside 0..${bundle.arcs.length}`);
  }
  return bundle.arcs
    .filter((a) => a.order_index < sliderValue)
    .sort((a, b) => a.order_index - b.order_index);
}

/** Group visible arcs into render edges: mutual pairs collapse to one
 *  double-headed edge unless twoArcMode is set. */
export interface RenderEdge {
  from: number;
  to: number;
  mutual: boolean;
  strength: number;
}

export function renderEdges(visible: BundleArc[], twoArcMode = false): RenderEdge[] {
  if (twoArcMode) {
    return visible.map((a) => ({ from: a.from, to: a.to, mutual: false, strength: a.strength }));
  }
  const edges: RenderEdge[] = [];
  const byPair = new Map<string, number>();
  for (const arc of visible) {
    const key = `${Math.min(arc.from, arc.to)}-${Math.max(arc.from, arc.to)}`;
    const idx = byPair.get(key);
    if (idx !== undefined && edges[idx].from === arc.to && edges[idx].to === arc.from) {
      const e = edges[idx];
      edges[idx] = { ...e, mutual: true, strength: Math.max(e.strength, arc.strength) };
      continue;
    }
    byPair.set(key, edges.length);
    edges.push({ from: arc.from, to: arc.to, mutual: false, strength: arc.strength });
  }
  return edges;
}

/** Python '%.17g'-compatible formatting; fallback when no raw literal exists. */
export function formatG17(x: number): string {
  if (!isFinite(x)) throw new RangeError(`non-finite value ${x}`);
  if (x === 0) return "0";
  const exp = Math.floor(Math.log10(Math.abs(x)));
  let s: string;
  if (exp < -4 || exp >= 17) {
    s = x.toExponential(16);
    // trim trailing zeros in the mantissa, pad exponent to two digits
    s = s.replace(/\.?0+e/, "e").replace(/e([+-])(\d)$/, "e$10$2");
  } else {
    s = x.toPrecision(17);
    if (s.includes("e")) {
      s = Number(s).toString();
    } else if (s.includes(".")) {
      s = s.replace(/\.?0+$/, "");
    }
  }
  return s;
}
