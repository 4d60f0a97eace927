/**
 * The four figure renderers. Each consumes CSV artifacts written by the
 * fluidchain CLI and builds a deterministic SVG; rendering is read-only over
 * the artifacts and never recomputes numbers.
 *
 * Styling roles, fixed across the suite: grey marks carry estimated
 * quantities (Monte Carlo drift arrows, scaled chain paths), black marks
 * carry limiting quantities (limiting drift field, fluid flows); dotted
 * lines are chain replicas, solid lines are ODE flows.
 */

import {
  Artifact,
  ArtifactError,
  numericColumn,
  requireColumns,
  requireSameTarget,
  stringColumn,
} from "./artifacts.js";
import { gridFromTriples, interiorLevels, levelCurves } from "./grid.js";
import {
  Extent,
  extentOfPoints,
  LegendEntry,
  mergeExtents,
  padExtent,
  Scene,
} from "./scene.js";

export const FIGURE_KEYS = [
  "contours",
  "fields",
  "flows-vs-trajectories",
  "diagonal-branches",
] as const;

export type FigureKey = (typeof FIGURE_KEYS)[number];

/** Raised for malformed invocations (wrong key, missing inputs). */
export class UsageError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "UsageError";
  }
}

export interface FigureInputs {
  contour?: Artifact;
  field?: Artifact;
  flows?: Artifact[];
  paths?: Artifact;
}

export interface RenderedFigure {
  svg: string;
  warnings: string[];
}

const GREY = "#8c8c8c";
const BLACK = "#000000";
const DOTTED = "2 3";

const CONTOUR_SCHEMA = ["x1", "x2", "logpi"] as const;
const FIELD_SCHEMA = [
  "x1",
  "x2",
  "delta1",
  "delta2",
  "stderr1",
  "stderr2",
  "dinf1",
  "dinf2",
  "h1",
  "h2",
  "in_cone",
] as const;
const FLOW_SCHEMA = ["t", "mu1", "mu2", "absorbed", "branch"] as const;
const PATHS_SCHEMA = ["r", "replica", "t", "eta1", "eta2"] as const;

function footerLine(artifacts: readonly Artifact[], targetHash: string): string {
  const names = artifacts.map((a) => a.source).join(" + ");
  return `${names} · target ${targetHash.slice(0, 8)}`;
}

function required<T>(value: T | undefined, message: string): T {
  if (value === undefined) throw new UsageError(message);
  return value;
}

// ---------------------------------------------------------------- contours

function renderContours(artifact: Artifact): RenderedFigure {
  requireColumns(artifact, CONTOUR_SCHEMA);
  const hash = requireSameTarget([artifact]);
  const grid = gridFromTriples(
    numericColumn(artifact, "x1"),
    numericColumn(artifact, "x2"),
    numericColumn(artifact, "logpi"),
    artifact.source,
  );
  const curves = levelCurves(grid, interiorLevels(grid.values, 12));
  const extent: Extent = {
    xmin: grid.xs[0]!,
    xmax: grid.xs[grid.xs.length - 1]!,
    ymin: grid.ys[0]!,
    ymax: grid.ys[grid.ys.length - 1]!,
  };
  const scene = new Scene(extent, { title: "log-density contours" });
  for (const curve of curves) {
    for (const path of curve.paths) {
      scene.polyline(path, { class: "level-curve", stroke: GREY, "stroke-width": "1.2" });
    }
  }
  scene.legend([{ label: "log-density level curves", color: GREY }]);
  scene.footer(footerLine([artifact], hash));
  return { svg: scene.render(), warnings: [] };
}

// ------------------------------------------------------------------ fields

function renderFields(artifact: Artifact): RenderedFigure {
  requireColumns(artifact, FIELD_SCHEMA);
  const hash = requireSameTarget([artifact]);
  const x1 = numericColumn(artifact, "x1");
  const x2 = numericColumn(artifact, "x2");
  const families = [
    { dx: numericColumn(artifact, "delta1"), dy: numericColumn(artifact, "delta2") },
    { dx: numericColumn(artifact, "dinf1"), dy: numericColumn(artifact, "dinf2") },
  ];

  let maxLen = 0;
  for (const f of families) {
    for (let i = 0; i < x1.length; i += 1) {
      const len = Math.hypot(f.dx[i]!, f.dy[i]!);
      if (Number.isFinite(len) && len > maxLen) maxLen = len;
    }
  }
  const xs = [...new Set(x1)].sort((a, b) => a - b);
  const ys = [...new Set(x2)].sort((a, b) => a - b);
  const step = Math.min(
    xs.length > 1 ? (xs[xs.length - 1]! - xs[0]!) / (xs.length - 1) : 1,
    ys.length > 1 ? (ys[ys.length - 1]! - ys[0]!) / (ys.length - 1) : 1,
  );
  const arrowScale = maxLen > 0 ? (0.45 * step) / maxLen : 1;

  const extent = padExtent(
    extentOfPoints(x1.map((v, i) => [v, x2[i]!] as const)) ?? { xmin: -1, xmax: 1, ymin: -1, ymax: 1 },
    0.06,
  );
  const scene = new Scene(extent, { title: "drift field: estimated vs limiting" });
  const styles = [
    { class: "drift-arrow", stroke: GREY, "stroke-width": "1.2" },
    { class: "limit-arrow", stroke: BLACK, "stroke-width": "1.2" },
  ];
  families.forEach((f, k) => {
    for (let i = 0; i < x1.length; i += 1) {
      const dx = f.dx[i]!;
      const dy = f.dy[i]!;
      if (!Number.isFinite(dx) || !Number.isFinite(dy)) continue;
      scene.arrow(x1[i]!, x2[i]!, arrowScale * dx, arrowScale * dy, { ...styles[k]! });
    }
  });
  scene.legend([
    { label: "estimated drift (MC)", color: GREY },
    { label: "limiting drift field", color: BLACK },
  ]);
  scene.footer(footerLine([artifact], hash));
  return { svg: scene.render(), warnings: [] };
}

// ------------------------------------------------- flows and chain replicas

interface FlowGroup {
  branch: string;
  points: Array<[number, number]>;
  /** First absorbed point, if the flow was absorbed. */
  absorbedAt: [number, number] | null;
}

function flowGroups(artifact: Artifact): FlowGroup[] {
  requireColumns(artifact, FLOW_SCHEMA);
  const mu1 = numericColumn(artifact, "mu1");
  const mu2 = numericColumn(artifact, "mu2");
  const absorbed = numericColumn(artifact, "absorbed");
  const branch = stringColumn(artifact, "branch");
  const groups = new Map<string, FlowGroup>();
  for (let i = 0; i < mu1.length; i += 1) {
    const label = branch[i]!;
    let group = groups.get(label);
    if (group === undefined) {
      group = { branch: label, points: [], absorbedAt: null };
      groups.set(label, group);
    }
    group.points.push([mu1[i]!, mu2[i]!]);
    if (absorbed[i]! !== 0 && group.absorbedAt === null) {
      group.absorbedAt = [mu1[i]!, mu2[i]!];
    }
  }
  return [...groups.values()];
}

interface ReplicaPaths {
  paths: Array<Array<[number, number]>>;
}

function replicaPaths(artifact: Artifact): ReplicaPaths {
  requireColumns(artifact, PATHS_SCHEMA);
  const r = stringColumn(artifact, "r");
  const replica = stringColumn(artifact, "replica");
  const eta1 = numericColumn(artifact, "eta1");
  const eta2 = numericColumn(artifact, "eta2");
  const byKey = new Map<string, Array<[number, number]>>();
  for (let i = 0; i < eta1.length; i += 1) {
    const key = `${r[i]}|${replica[i]}`;
    let path = byKey.get(key);
    if (path === undefined) {
      path = [];
      byKey.set(key, path);
    }
    path.push([eta1[i]!, eta2[i]!]);
  }
  return { paths: [...byKey.values()] };
}

function renderFlowFigure(
  flows: readonly Artifact[],
  paths: Artifact,
  title: string,
  requireTwoBranches: boolean,
): RenderedFigure {
  const hash = requireSameTarget([...flows, paths]);
  const groups = flows.flatMap((f) => flowGroups(f));
  if (requireTwoBranches) {
    const labels = new Set(groups.map((g) => g.branch));
    if (!labels.has("+") || !labels.has("-")) {
      throw new ArtifactError(
        `${flows[0]!.source}: diagonal-branches needs a two-branch flow artifact ` +
          `(flow --branch); found branch labels ${[...labels].map((l) => `"${l}"`).join(", ")}`,
      );
    }
  }
  const replicas = replicaPaths(paths);
  const warnings: string[] = [];

  let extent: Extent | null = null;
  for (const g of groups) {
    const e = extentOfPoints(g.points);
    if (e !== null) extent = extent === null ? e : mergeExtents(extent, e);
  }
  for (const p of replicas.paths) {
    const e = extentOfPoints(p);
    if (e !== null) extent = extent === null ? e : mergeExtents(extent, e);
  }
  if (extent === null) {
    throw new ArtifactError(`${flows[0]!.source}: no finite points to draw`);
  }

  const scene = new Scene(padExtent(extent, 0.07), { title });
  for (const path of replicas.paths) {
    scene.polyline(path, {
      class: "replica",
      stroke: GREY,
      "stroke-width": "1.1",
      "stroke-dasharray": DOTTED,
    });
  }
  for (const g of groups) {
    scene.polyline(g.points, { class: "flow", stroke: BLACK, "stroke-width": "1.6" });
    const start = g.points[0];
    if (start !== undefined) {
      scene.circle(start[0], start[1], 3, {
        class: "flow-start",
        fill: "white",
        stroke: BLACK,
        "stroke-width": "1.2",
      });
    }
    if (g.absorbedAt !== null) {
      scene.circle(g.absorbedAt[0], g.absorbedAt[1], 2.6, { class: "flow-absorbed", fill: BLACK });
    }
  }

  const legend: LegendEntry[] = [
    {
      label: requireTwoBranches ? "fluid flow branches (ODE, solid)" : "fluid flow (ODE, solid)",
      color: BLACK,
    },
  ];
  if (replicas.paths.length > 0) {
    legend.push({ label: "scaled chain replicas (dotted)", color: GREY, dash: DOTTED });
  } else {
    const message = `${paths.source} has no replica paths; showing flow only`;
    warnings.push(message);
    scene.warn(message);
  }
  scene.legend(legend);
  scene.footer(footerLine([...flows, paths], hash));
  return { svg: scene.render(), warnings };
}

// ---------------------------------------------------------------- dispatch

/** Render one figure key from its parsed artifact inputs. */
export function renderFigure(key: FigureKey, inputs: FigureInputs): RenderedFigure {
  switch (key) {
    case "contours":
      return renderContours(
        required(inputs.contour, "contours needs a contour artifact (--contour)"),
      );
    case "fields":
      return renderFields(required(inputs.field, "fields needs a field artifact (--field)"));
    case "flows-vs-trajectories": {
      const flows = inputs.flows ?? [];
      if (flows.length === 0) {
        throw new UsageError("flows-vs-trajectories needs at least one flow artifact (--flow)");
      }
      return renderFlowFigure(
        flows,
        required(inputs.paths, "flows-vs-trajectories needs a scaled-paths artifact (--paths)"),
        "fluid flows vs scaled chains",
        false,
      );
    }
    case "diagonal-branches": {
      const flows = inputs.flows ?? [];
      if (flows.length !== 1) {
        throw new UsageError(
          "diagonal-branches takes exactly one two-branch flow artifact (--flow)",
        );
      }
      return renderFlowFigure(
        flows,
        required(inputs.paths, "diagonal-branches needs a scaled-paths artifact (--paths)"),
        "two fluid-limit branches from the diagonal",
        true,
      );
    }
  }
}
