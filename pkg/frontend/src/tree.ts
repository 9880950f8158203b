/** Per-node decision-tree drill-down: a render tree mirroring the bundle.
 *
 *  Numbers shown in the panel are the bundle's numbers: posterior strings
 *  are the raw literals from the bundle bytes, counts are the bundle
 *  integers.  Nothing is recomputed client-side.
 */

import { BundleTree, ParsedBundle, formatG17, isSplit } from "./model.js";

export interface LeafBar {
  state: number;
  count: number;
  posterior: number;
  /** exact bundle literal for this posterior entry */
  posteriorLiteral: string;
  /** bar width as a fraction of the panel, equals the posterior */
  fraction: number;
}

export interface RenderLeaf {
  kind: "leaf";
  bars: LeafBar[];
}

export interface RenderSplit {
  kind: "split";
  /** e.g. 'Home Page = 1' */
  label: string;
  eqLabel: string;
  neqLabel: string;
  eq: RenderNode;
  neq: RenderNode;
}

export type RenderNode = RenderLeaf | RenderSplit;

export interface TreePanel {
  nodeIndex: number;
  title: string;
  root: RenderNode;
  singleLeaf: boolean;
}

export function buildTreePanel(parsed: ParsedBundle, nodeIndex: number): TreePanel {
  const { bundle, posteriorLiterals } = parsed;
  if (nodeIndex < 0 || nodeIndex >= bundle.nodes.length) {
    throw new RangeError(`node ${nodeIndex} does not exist`);
  }
  const literals = posteriorLiterals[nodeIndex];
  let leafCursor = 0;

  const build = (node: BundleTree): RenderNode => {
    if (isSplit(node)) {
      const variable = bundle.nodes[node.split.variable];
      const label = `${variable.title} = ${node.split.value}`;
      return {
        kind: "split",
        label,
        eqLabel: label,
        neqLabel: "other",
        eq: build(node.eq),
        neq: build(node.neq),
      };
    }
    const raw = literals[leafCursor++];
    const bars = node.leaf.posterior.map((p, state) => ({
      state,
      count: node.leaf.counts[state],
      posterior: p,
      posteriorLiteral: raw !== undefined ? raw[state] : formatG17(p),
      fraction: p,
    }));
    return { kind: "leaf", bars };
  };

  const root = build(bundle.trees[nodeIndex]);
  return {
    nodeIndex,
    title: bundle.nodes[nodeIndex].title,
    root,
    singleLeaf: root.kind === "leaf",
  };
}

export function panelLeaves(node: RenderNode): RenderLeaf[] {
  if (node.kind === "leaf") return [node];
  return [...panelLeaves(node.eq), ...panelLeaves(node.neq)];
}

export function panelSplitLabels(node: RenderNode): string[] {
  if (node.kind === "leaf") return [];
  return [node.label, ...panelSplitLabels(node.eq), ...panelSplitLabels(node.neq)];
}
