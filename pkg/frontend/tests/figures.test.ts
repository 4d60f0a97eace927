import { describe, expect, test } from "vitest";
import { fileURLToPath } from "node:url";

import { readArtifact } from "../src/artifacts.js";
import { FigureKey, renderFigure, UsageError } from "../src/figures.js";

const fixture = (name: string) =>
  readArtifact(fileURLToPath(new URL(`./fixtures/${name}`, import.meta.url)));

const count = (svg: string, needle: string) => svg.split(needle).length - 1;

describe("contours", () => {
  test("renders grey level curves with a legend", () => {
    const { svg, warnings } = renderFigure("contours", { contour: fixture("contour_mixture.csv") });
    expect(warnings).toEqual([]);
    expect(svg).toContain("<svg ");
    expect(svg).toContain("log-density contours");
    expect(count(svg, 'class="level-curve"')).toBeGreaterThan(10);
    expect(svg).toContain("log-density level curves");
    expect(svg).toContain('stroke="#8c8c8c"');
    expect(svg).toContain('class="provenance"');
  });

  test("level curves of the mixture respect the axis swap symmetry", () => {
    // The two mixture components are reflections of each other across the
    // diagonal, so the rendered mark count is stable under re-rendering and
    // the curves are non-trivial.
    const a = renderFigure("contours", { contour: fixture("contour_mixture.csv") });
    const b = renderFigure("contours", { contour: fixture("contour_mixture.csv") });
    expect(a.svg).toBe(b.svg);
  });
});

describe("fields", () => {
  test("draws grey estimated arrows and black limiting arrows", () => {
    const { svg } = renderFigure("fields", { field: fixture("field_mixture.csv") });
    const grey = count(svg, 'class="drift-arrow"');
    const black = count(svg, 'class="limit-arrow"');
    expect(grey).toBeGreaterThan(60);
    expect(black).toBeGreaterThan(40);
    // The limiting field is undefined on the singular diagonals, so some
    // black arrows are missing while every grey arrow is present.
    expect(black).toBeLessThan(grey);
    expect(svg).toContain("estimated drift (MC)");
    expect(svg).toContain("limiting drift field");
  });

  test("schema mismatch names the offending column", () => {
    expect(() => renderFigure("fields", { field: fixture("contour_mixture.csv") })).toThrow(
      /missing column "delta1"/,
    );
    expect(() => renderFigure("contours", { contour: fixture("field_mixture.csv") })).toThrow(
      /missing column "logpi"/,
    );
  });
});

describe("flows-vs-trajectories", () => {
  const inputs = () => ({
    flows: [fixture("flow_mixture.csv")],
    paths: fixture("paths_mixture.csv"),
  });

  test("draws solid flows over dotted replicas", () => {
    const { svg, warnings } = renderFigure("flows-vs-trajectories", inputs());
    expect(warnings).toEqual([]);
    expect(count(svg, 'class="flow"')).toBe(1);
    expect(count(svg, 'class="replica"')).toBe(3);
    expect(count(svg, 'stroke-dasharray="2 3"')).toBeGreaterThanOrEqual(3);
    expect(svg).toContain("fluid flow (ODE, solid)");
    expect(svg).toContain("scaled chain replicas (dotted)");
  });

  test("rejects inputs computed for different targets", () => {
    expect(() =>
      renderFigure("flows-vs-trajectories", {
        flows: [fixture("flow_wedge.csv")],
        paths: fixture("paths_mixture.csv"),
      }),
    ).toThrow(/target_hash mismatch/);
  });

  test("empty replica file degrades to a flow-only figure with a warning", () => {
    const { svg, warnings } = renderFigure("flows-vs-trajectories", {
      flows: [fixture("flow_mixture.csv")],
      paths: fixture("paths_empty.csv"),
    });
    expect(warnings).toHaveLength(1);
    expect(warnings[0]).toMatch(/paths_empty\.csv has no replica paths; showing flow only/);
    expect(svg).toContain('class="warning"');
    expect(svg).toContain("showing flow only");
    expect(count(svg, 'class="flow"')).toBe(1);
    expect(count(svg, 'class="replica"')).toBe(0);
    expect(svg).not.toContain("scaled chain replicas");
  });

  test("accepts several flow artifacts in one panel", () => {
    const { svg } = renderFigure("flows-vs-trajectories", {
      flows: [fixture("flow_mixture.csv"), fixture("flow_diagonal.csv")],
      paths: fixture("paths_mixture.csv"),
    });
    expect(count(svg, 'class="flow"')).toBe(3); // plain flow + two branches
  });
});

describe("diagonal-branches", () => {
  test("draws both solid branches plus dotted replicas", () => {
    const { svg, warnings } = renderFigure("diagonal-branches", {
      flows: [fixture("flow_diagonal.csv")],
      paths: fixture("paths_diagonal.csv"),
    });
    expect(warnings).toEqual([]);
    expect(count(svg, 'class="flow"')).toBe(2);
    expect(count(svg, 'class="replica"')).toBe(4);
    expect(svg).toContain("two fluid-limit branches from the diagonal");
    expect(svg).toContain("fluid flow branches (ODE, solid)");
    expect(svg).toContain("scaled chain replicas (dotted)");
  });

  test("rejects a single-branch flow artifact", () => {
    expect(() =>
      renderFigure("diagonal-branches", {
        flows: [fixture("flow_mixture.csv")],
        paths: fixture("paths_diagonal.csv"), // same target, so only the branch check fires
      }),
    ).toThrow(/two-branch flow artifact .* found branch labels "\."/);
  });

  test("requires exactly one flow input", () => {
    expect(() =>
      renderFigure("diagonal-branches", {
        flows: [fixture("flow_diagonal.csv"), fixture("flow_mixture.csv")],
        paths: fixture("paths_diagonal.csv"),
      }),
    ).toThrow(UsageError);
  });
});

describe("determinism", () => {
  const cases: Array<[FigureKey, () => Parameters<typeof renderFigure>[1]]> = [
    ["contours", () => ({ contour: fixture("contour_mixture.csv") })],
    ["fields", () => ({ field: fixture("field_mixture.csv") })],
    [
      "flows-vs-trajectories",
      () => ({ flows: [fixture("flow_mixture.csv")], paths: fixture("paths_mixture.csv") }),
    ],
    [
      "diagonal-branches",
      () => ({ flows: [fixture("flow_diagonal.csv")], paths: fixture("paths_diagonal.csv") }),
    ],
  ];

  test.each(cases)("%s renders byte-identical output", (key, makeInputs) => {
    const first = renderFigure(key, makeInputs());
    const second = renderFigure(key, makeInputs());
    expect(second.svg).toBe(first.svg);
    expect(first.svg.length).toBeGreaterThan(2000);
  });

  test("missing inputs raise usage errors", () => {
    expect(() => renderFigure("contours", {})).toThrow(UsageError);
    expect(() => renderFigure("fields", {})).toThrow(/--field/);
    expect(() => renderFigure("flows-vs-trajectories", {})).toThrow(/--flow/);
    expect(() =>
      renderFigure("flows-vs-trajectories", { flows: [fixture("flow_mixture.csv")] }),
    ).toThrow(/--paths/);
  });
});
