/** Deterministic seeded graph layout: screenshots reproduce exactly. */

import type { ViewerBundle } from "./model.js";

export interface NodePosition {
  index: number;
  x: number;
  y: number;
}

export interface LayoutOptions {
  width: number;
  height: number;
  nodeRadius: number;
  seed: number;
  iterations: number;
}

export const DEFAULT_LAYOUT: LayoutOptions = {
  width: 900,
  height: 600,
  nodeRadius: 26,
  seed: 42,
  iterations: 250,
};

/** Mulberry32: tiny seedable PRNG, identical stream for identical seeds. */
export function mulberry32(seed: number): () => number {
  let t = seed >>> 0;
  return function () {
    t = (t + 0x6d2b79f5) >>> 0;
    let x = t;
    x = Math.imul(x ^ (x >>> 15), x | 1);
    x ^= x + Math.imul(x ^ (x >>> 7), x | 61);
    return ((x ^ (x >>> 14)) >>> 0) / 4294967296;
  };
}

export function layoutGraph(
  bundle: Pick<ViewerBundle, "nodes" | "arcs">,
  options: Partial<LayoutOptions> = {},
): NodePosition[] {
  const opt = { ...DEFAULT_LAYOUT, ...options };
  const n = bundle.nodes.length;
  const cx = opt.width / 2;
  const cy = opt.height / 2;
  if (n === 0) return [];
  if (n === 1) return [{ index: 0, x: cx, y: cy }];

  const rng = mulberry32(opt.seed);
  const ringRadius = Math.min(opt.width, opt.height) / 2 - 2 * opt.nodeRadius;
  const xs = new Float64Array(n);
  const ys = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    const angle = (2 * Math.PI * i) / n;
    xs[i] = cx + ringRadius * Math.cos(angle) + (rng() - 0.5) * opt.nodeRadius;
    ys[i] = cy + ringRadius * Math.sin(angle) + (rng() - 0.5) * opt.nodeRadius;
  }

  const springLength = Math.max(4 * opt.nodeRadius, ringRadius / 2);
  const repulsion = springLength * springLength;
  for (let iter = 0; iter < opt.iterations; iter++) {
    const cool = 1 - iter / opt.iterations;
    const step = 0.05 * springLength * cool + 0.5;
    const fx = new Float64Array(n);
    const fy = new Float64Array(n);
    for (let i = 0; i < n; i++) {
      for (let j = i + 1; j < n; j++) {
        let dx = xs[i] - xs[j];
        let dy = ys[i] - ys[j];
        let d2 = dx * dx + dy * dy;
        if (d2 < 1e-6) {
          // coincident nodes: separate along a deterministic angle
          const angle = (2 * Math.PI * (i * n + j)) / (n * n);
          dx = Math.cos(angle);
          dy = Math.sin(angle);
          d2 = 1;
        }
        const f = repulsion / d2;
        const d = Math.sqrt(d2);
        fx[i] += (dx / d) * f;
        fy[i] += (dy / d) * f;
        fx[j] -= (dx / d) * f;
        fy[j] -= (dy / d) * f;
      }
    }
    for (const arc of bundle.arcs) {
      const i = arc.from;
      const j = arc.to;
      if (i === j) continue;
      const dx = xs[j] - xs[i];
      const dy = ys[j] - ys[i];
      const d = Math.max(Math.sqrt(dx * dx + dy * dy), 1e-3);
      const f = (d - springLength) / d;
      fx[i] += dx * f * 0.5;
      fy[i] += dy * f * 0.5;
      fx[j] -= dx * f * 0.5;
      fy[j] -= dy * f * 0.5;
    }
    for (let i = 0; i < n; i++) {
      // gentle pull to the canvas center keeps components together
      fx[i] += (cx - xs[i]) * 0.02;
      fy[i] += (cy - ys[i]) * 0.02;
      const norm = Math.max(Math.sqrt(fx[i] * fx[i] + fy[i] * fy[i]), 1e-9);
      const clipped = Math.min(norm, step);
      xs[i] += (fx[i] / norm) * clipped;
      ys[i] += (fy[i] / norm) * clipped;
    }
  }

  separateOverlaps(xs, ys, n, 2 * opt.nodeRadius + 2, cx, cy);

  const out: NodePosition[] = [];
  for (let i = 0; i < n; i++) {
    out.push({ index: i, x: xs[i], y: ys[i] });
  }
  return out;
}

/** Push-apart sweeps with radial rescaling: ends with zero overlapping pairs. */
function separateOverlaps(
  xs: Float64Array,
  ys: Float64Array,
  n: number,
  minDist: number,
  cx: number,
  cy: number,
): void {
  for (let round = 0; round < 500; round++) {
    let worst = 0;
    for (let i = 0; i < n; i++) {
      for (let j = i + 1; j < n; j++) {
        let dx = xs[j] - xs[i];
        let dy = ys[j] - ys[i];
        let d = Math.sqrt(dx * dx + dy * dy);
        if (d < 1e-9) {
          const angle = (2 * Math.PI * (i * n + j)) / (n * n);
          dx = Math.cos(angle);
          dy = Math.sin(angle);
          d = 1e-9;
        }
        const overlap = minDist - d;
        if (overlap > 0) {
          worst = Math.max(worst, overlap);
          const push = overlap / 2 + 0.5;
          xs[i] -= (dx / Math.max(d, 1e-9)) * push;
          ys[i] -= (dy / Math.max(d, 1e-9)) * push;
          xs[j] += (dx / Math.max(d, 1e-9)) * push;
          ys[j] += (dy / Math.max(d, 1e-9)) * push;
        }
      }
    }
    if (worst === 0) return;
    if (round > 0 && round % 25 === 0) {
      // stubborn clusters: inflate everything away from the center
      for (let i = 0; i < n; i++) {
        xs[i] = cx + (xs[i] - cx) * 1.2;
        ys[i] = cy + (ys[i] - cy) * 1.2;
      }
    }
  }
}

export function overlappingPairs(positions: NodePosition[], nodeRadius: number): number {
  let count = 0;
  for (let i = 0; i < positions.length; i++) {
    for (let j = i + 1; j < positions.length; j++) {
      const dx = positions[i].x - positions[j].x;
      const dy = positions[i].y - positions[j].y;
      if (Math.sqrt(dx * dx + dy * dy) < 2 * nodeRadius) count++;
    }
  }
  return count;
}
