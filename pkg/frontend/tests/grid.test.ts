import { describe, expect, test } from "vitest";

import { ArtifactError } from "../src/artifacts.js";
import { gridFromTriples, interiorLevels, levelCurves } from "../src/grid.js";

function radialGrid(n: number, half: number) {
  const x1: number[] = [];
  const x2: number[] = [];
  const v: number[] = [];
  for (let j = 0; j < n; j += 1) {
    for (let i = 0; i < n; i += 1) {
      const x = -half + (2 * half * i) / (n - 1);
      const y = -half + (2 * half * j) / (n - 1);
      x1.push(x);
      x2.push(y);
      v.push(-(x * x + y * y));
    }
  }
  return { x1, x2, v };
}

describe("gridFromTriples", () => {
  test("rebuilds the grid regardless of row order", () => {
    const { x1, x2, v } = radialGrid(5, 2);
    const order = [...x1.keys()].reverse();
    const grid = gridFromTriples(
      order.map((k) => x1[k]!),
      order.map((k) => x2[k]!),
      order.map((k) => v[k]!),
      "t.csv",
    );
    expect(grid.xs).toEqual([-2, -1, 0, 1, 2]);
    expect(grid.ys).toEqual([-2, -1, 0, 1, 2]);
    expect(grid.values[2 * 5 + 2]).toBeCloseTo(0, 12);
    expect(grid.values[0]).toBe(-8);
  });

  test("rejects duplicate nodes", () => {
    expect(() => gridFromTriples([0, 0, 1, 1, 0], [0, 1, 0, 1, 0], [1, 2, 3, 4, 5], "t.csv")).toThrow(
      /duplicate grid node \(0, 0\)/,
    );
  });

  test("rejects incomplete grids", () => {
    expect(() => gridFromTriples([0, 0, 1], [0, 1, 0], [1, 2, 3], "t.csv")).toThrow(ArtifactError);
    expect(() => gridFromTriples([0, 0, 1], [0, 1, 0], [1, 2, 3], "t.csv")).toThrow(
      /3 of 4 nodes present/,
    );
  });
});

describe("interiorLevels", () => {
  test("levels are strictly inside the finite range", () => {
    const levels = interiorLevels([0, 1, 2, NaN, 10], 4);
    expect(levels).toHaveLength(4);
    expect(Math.min(...levels)).toBeGreaterThan(0);
    expect(Math.max(...levels)).toBeLessThan(10);
    expect(levels).toEqual([...levels].sort((a, b) => a - b));
  });
});

describe("levelCurves", () => {
  test("recovers circles of -(x^2+y^2) at the right radii", () => {
    const { x1, x2, v } = radialGrid(41, 2);
    const grid = gridFromTriples(x1, x2, v, "t.csv");
    const [curve] = levelCurves(grid, [-1]);
    expect(curve).toBeDefined();
    expect(curve!.paths.length).toBeGreaterThanOrEqual(1);
    let points = 0;
    for (const path of curve!.paths) {
      for (const [x, y] of path) {
        points += 1;
        expect(Math.hypot(x, y)).toBeCloseTo(1, 1);
      }
    }
    expect(points).toBeGreaterThan(20);
  });

  test("interior rings stay closed", () => {
    const { x1, x2, v } = radialGrid(41, 2);
    const grid = gridFromTriples(x1, x2, v, "t.csv");
    const [curve] = levelCurves(grid, [-1]);
    const ring = curve!.paths[0]!;
    const first = ring[0]!;
    const last = ring[ring.length - 1]!;
    expect(first[0]).toBeCloseTo(last[0], 9);
    expect(first[1]).toBeCloseTo(last[1], 9);
  });

  test("drops segments that only run along the domain boundary", () => {
    const { x1, x2, v } = radialGrid(21, 2);
    const grid = gridFromTriples(x1, x2, v, "t.csv");
    // Level below every interior value: the region covers the whole grid,
    // so its outline would simply trace the border.
    const [curve] = levelCurves(grid, [-100]);
    expect(curve!.paths).toEqual([]);
  });
});
