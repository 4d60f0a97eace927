/**
 * Command-line entry: one invocation renders one figure key from CSV
 * artifacts to an SVG file.
 *
 *   fluidchain-figures contours --contour contour.csv --out fig.svg
 *   fluidchain-figures fields --field field.csv --out fig.svg
 *   fluidchain-figures flows-vs-trajectories --flow flow.csv [--flow ...] \
 *       --paths paths.csv --out fig.svg
 *   fluidchain-figures diagonal-branches --flow branches.csv \
 *       --paths paths.csv --out fig.svg
 *
 * Exit codes: 0 success, 2 usage error, 3 artifact error (missing file,
 * schema mismatch, target mismatch).
 */

import { realpathSync, writeFileSync } from "node:fs";
import { parseArgs } from "node:util";
import { pathToFileURL } from "node:url";
import { ArtifactError, readArtifact } from "./artifacts.js";
import { FIGURE_KEYS, FigureInputs, FigureKey, renderFigure, UsageError } from "./figures.js";

export const USAGE =
  `usage: fluidchain-figures <${FIGURE_KEYS.join("|")}> ` +
  "[--contour FILE] [--field FILE] [--flow FILE ...] [--paths FILE] --out FILE.svg";

export interface CliIo {
  stderr: (line: string) => void;
  writeFile: (path: string, content: string) => void;
}

const DEFAULT_IO: CliIo = {
  stderr: (line) => process.stderr.write(`${line}\n`),
  writeFile: (path, content) => writeFileSync(path, content),
};

/** Run the CLI on argv (no program prefix); returns the process exit code. */
export function main(argv: string[], io: CliIo = DEFAULT_IO): number {
  let key: FigureKey;
  let out: string;
  const inputs: FigureInputs = {};
  try {
    const parsed = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        contour: { type: "string" },
        field: { type: "string" },
        flow: { type: "string", multiple: true },
        paths: { type: "string" },
        out: { type: "string" },
      },
    });
    if (parsed.positionals.length !== 1) {
      throw new UsageError(`expected exactly one figure key, got ${parsed.positionals.length}`);
    }
    const candidate = parsed.positionals[0]!;
    if (!(FIGURE_KEYS as readonly string[]).includes(candidate)) {
      throw new UsageError(
        `unknown figure key "${candidate}" (choose from ${FIGURE_KEYS.join(", ")})`,
      );
    }
    key = candidate as FigureKey;
    if (parsed.values.out === undefined) {
      throw new UsageError("--out FILE.svg is required");
    }
    out = parsed.values.out;
    if (parsed.values.contour !== undefined) inputs.contour = readArtifact(parsed.values.contour);
    if (parsed.values.field !== undefined) inputs.field = readArtifact(parsed.values.field);
    if (parsed.values.flow !== undefined) inputs.flows = parsed.values.flow.map(readArtifact);
    if (parsed.values.paths !== undefined) inputs.paths = readArtifact(parsed.values.paths);
  } catch (err) {
    if (err instanceof ArtifactError) {
      io.stderr(`figure-error: ${err.message}`);
      return 3;
    }
    io.stderr(`figure-error: ${(err as Error).message}`);
    io.stderr(USAGE);
    return 2;
  }

  try {
    const figure = renderFigure(key, inputs);
    for (const warning of figure.warnings) {
      io.stderr(`figure-warning: ${warning}`);
    }
    io.writeFile(out, figure.svg);
  } catch (err) {
    if (err instanceof UsageError) {
      io.stderr(`figure-error: ${err.message}`);
      io.stderr(USAGE);
      return 2;
    }
    io.stderr(`figure-error: ${(err as Error).message}`);
    return 3;
  }
  return 0;
}

function invokedDirectly(): boolean {
  const script = process.argv[1];
  if (script === undefined) return false;
  try {
    return import.meta.url === pathToFileURL(realpathSync(script)).href;
  } catch {
    return false;
  }
}

if (invokedDirectly()) {
  process.exit(main(process.argv.slice(2)));
}
