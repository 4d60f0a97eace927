/**
 * Rectangular grids from (x1, x2, value) columns and marching-squares level
 * curves, in data coordinates.
 */

import { contours } from "d3-contour";
import { ArtifactError } from "./artifacts.js";

export interface Grid {
  /** Unique sorted x1 sample positions. */
  xs: number[];
  /** Unique sorted x2 sample positions. */
  ys: number[];
  /** Row-major values: values[j * xs.length + i] sampled at (xs[i], ys[j]). */
  values: number[];
}

function uniqueSorted(v: number[]): number[] {
  return [...new Set(v)].sort((a, b) => a - b);
}

/**
 * Rebuild the rectangular grid behind (x1, x2, value) triples. Row order
 * does not matter, but every grid node must appear exactly once.
 */
export function gridFromTriples(
  x1: number[],
  x2: number[],
  v: number[],
  source: string,
): Grid {
  const xs = uniqueSorted(x1);
  const ys = uniqueSorted(x2);
  const xIndex = new Map(xs.map((x, i) => [x, i]));
  const yIndex = new Map(ys.map((y, j) => [y, j]));
  const values = new Array<number>(xs.length * ys.length).fill(NaN);
  const seen = new Set<number>();
  for (let k = 0; k < v.length; k += 1) {
    const flat = yIndex.get(x2[k]!)! * xs.length + xIndex.get(x1[k]!)!;
    if (seen.has(flat)) {
      throw new ArtifactError(
        `${source}: duplicate grid node (${x1[k]}, ${x2[k]})`,
      );
    }
    seen.add(flat);
    values[flat] = v[k]!;
  }
  if (seen.size !== values.length) {
    throw new ArtifactError(
      `${source}: rows do not fill a ${xs.length}x${ys.length} rectangular grid` +
        ` (${seen.size} of ${values.length} nodes present)`,
    );
  }
  return { xs, ys, values };
}

export interface LevelCurve {
  level: number;
  /** Open or closed polylines in data coordinates. */
  paths: Array<Array<[number, number]>>;
}

/** Evenly spaced interior levels between the finite min and max. */
export function interiorLevels(values: number[], count: number): number[] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (!Number.isFinite(v)) continue;
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  const levels: number[] = [];
  for (let k = 1; k <= count; k += 1) {
    levels.push(lo + (k * (hi - lo)) / (count + 1));
  }
  return levels;
}

/**
 * Marching-squares level curves of the grid. Ring segments that run along
 * the domain boundary are dropped so only genuine level crossings are drawn.
 *
 * d3-contour reports coordinates in grid units with the sample (i, j)
 * centred at (i + 0.5, j + 0.5); data coordinates recover the sample
 * positions through the grid steps.
 */
export function levelCurves(grid: Grid, levels: number[]): LevelCurve[] {
  const n = grid.xs.length;
  const m = grid.ys.length;
  const x0 = grid.xs[0]!;
  const y0 = grid.ys[0]!;
  const dx = n > 1 ? (grid.xs[n - 1]! - x0) / (n - 1) : 1;
  const dy = m > 1 ? (grid.ys[m - 1]! - y0) / (m - 1) : 1;
  const generate = contours().size([n, m]).thresholds(levels);
  const onBoundary = (gx: number, gy: number): boolean =>
    gx <= 1e-9 || gx >= n - 1e-9 || gy <= 1e-9 || gy >= m - 1e-9;

  const curves: LevelCurve[] = [];
  for (const multi of generate(grid.values)) {
    const paths: Array<Array<[number, number]>> = [];
    for (const polygon of multi.coordinates) {
      for (const ring of polygon) {
        let run: Array<[number, number]> = [];
        for (const point of ring) {
          const [gx, gy] = point as unknown as [number, number];
          if (onBoundary(gx, gy)) {
            if (run.length > 1) paths.push(run);
            run = [];
            continue;
          }
          run.push([x0 + (gx - 0.5) * dx, y0 + (gy - 0.5) * dy]);
        }
        if (run.length > 1) paths.push(run);
      }
    }
    curves.push({ level: multi.value, paths });
  }
  return curves;
}
