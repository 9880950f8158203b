import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import {
  BundleFormatError,
  filterArcs,
  formatG17,
  parseBundle,
  renderEdges,
} from "../src/model.js";

const pairText = readFileSync(new URL("./fixtures/pair-bundle.json", import.meta.url), "utf8");
const webText = readFileSync(new URL("./fixtures/web-bundle.json", import.meta.url), "utf8");

describe("parseBundle", () => {
  it("accepts exporter output", () => {
    const parsed = parseBundle(pairText);
    expect(parsed.bundle.nodes).toHaveLength(2);
    expect(parsed.bundle.arcs).toHaveLength(2);
    expect(parsed.bundle.metadata.kappa).toBe(0.01);
  });

  it("rejects foreign formats and versions", () => {
    const doc = JSON.parse(pairText);
    expect(() => parseBundle(JSON.stringify({ ...doc, format: "other" }))).toThrow(
      BundleFormatError,
    );
    expect(() => parseBundle(JSON.stringify({ ...doc, version: 2 }))).toThrow(BundleFormatError);
    expect(() => parseBundle("not json")).toThrow(BundleFormatError);
  });

  it("rejects broken arc ordering", () => {
    const doc = JSON.parse(webText);
    doc.arcs[0].order_index = doc.arcs[1].order_index;
    expect(() => parseBundle(JSON.stringify(doc))).toThrow(BundleFormatError);
  });

  it("collects one posterior literal list per leaf", () => {
    const parsed = parseBundle(webText);
    parsed.bundle.trees.forEach((_, i) => {
      const literals = parsed.posteriorLiterals[i];
      for (const leaf of literals) {
        for (const lit of leaf) {
          expect(Number.isFinite(Number(lit))).toBe(true);
        }
      }
    });
  });
});

describe("filterArcs", () => {
  const { bundle } = parseBundle(webText);

  it("shows no arcs at zero and every arc at the top", () => {
    expect(filterArcs(bundle, 0)).toHaveLength(0);
    expect(filterArcs(bundle, bundle.arcs.length)).toHaveLength(bundle.arcs.length);
  });

  it("reveals exactly s arcs, strongest (lowest order_index) first", () => {
    for (let s = 0; s <= bundle.arcs.length; s++) {
      const visible = filterArcs(bundle, s);
      expect(visible).toHaveLength(s);
      expect(visible.map((a) => a.order_index)).toEqual([...Array(s).keys()]);
    }
  });

  it("grows monotonically with the slider", () => {
    for (let s = 0; s < bundle.arcs.length; s++) {
      const now = new Set(filterArcs(bundle, s).map((a) => a.order_index));
      const next = filterArcs(bundle, s + 1).map((a) => a.order_index);
      for (const o of now) expect(next).toContain(o);
    }
  });

  it("rejects out-of-range slider values", () => {
    expect(() => filterArcs(bundle, -1)).toThrow(RangeError);
    expect(() => filterArcs(bundle, bundle.arcs.length + 1)).toThrow(RangeError);
  });
});

describe("renderEdges", () => {
  it("collapses mutual pairs into one double-headed edge", () => {
    const { bundle } = parseBundle(pairText);
    const edges = renderEdges(filterArcs(bundle, 2));
    expect(edges).toHaveLength(1);
    expect(edges[0].mutual).toBe(true);
  });

  it("keeps two arcs when the toggle asks for them", () => {
    const { bundle } = parseBundle(pairText);
    const edges = renderEdges(filterArcs(bundle, 2), true);
    expect(edges).toHaveLength(2);
    expect(edges.every((e) => !e.mutual)).toBe(true);
  });

  it("keeps uni-directional arcs single-headed", () => {
    const { bundle } = parseBundle(pairText);
    const edges = renderEdges(filterArcs(bundle, 1));
    expect(edges).toHaveLength(1);
    expect(edges[0].mutual).toBe(false);
  });
});

describe("formatG17", () => {
  it("matches the exporter's float formatting", () => {
    expect(formatG17(0.5)).toBe("0.5");
    expect(formatG17(1 / 3)).toBe("0.33333333333333331");
    expect(formatG17(11 / 12)).toBe("0.91666666666666663");
    expect(formatG17(1 / 12)).toBe("0.083333333333333329");
    expect(formatG17(0)).toBe("0");
  });

  it("round-trips every bundle posterior exactly", () => {
    const parsed = parseBundle(webText);
    for (const tree of parsed.posteriorLiterals) {
      for (const leaf of tree) {
        for (const lit of leaf) {
          const x = Number(lit);
          expect(Number(formatG17(x))).toBe(x);
        }
      }
    }
  });
});
