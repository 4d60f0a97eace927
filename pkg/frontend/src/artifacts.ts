/**
 * Reading the fluidchain CLI's CSV artifacts.
 *
 * Every artifact starts with `# key=value` provenance comments (tool version,
 * command, config_hash, target_hash, seed) followed by a header row and data
 * rows. Undefined numeric values are written as empty cells.
 */

import { readFileSync } from "node:fs";
import { basename } from "node:path";
import Papa from "papaparse";

/** Raised when an input file does not match the expected artifact schema. */
export class ArtifactError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ArtifactError";
  }
}

export interface Artifact {
  /** Short name used in error messages (basename of the input path). */
  source: string;
  /** Provenance fields parsed from the `# key=value` comment lines. */
  meta: Record<string, string>;
  /** Column names from the header row, in file order. */
  columns: string[];
  /** Data rows keyed by column name; cells are the raw strings. */
  rows: Record<string, string>[];
}

const META_LINE = /^#\s*([A-Za-z_][A-Za-z0-9_]*)=(.*)$/;

/** Parse artifact text. `source` labels the input in error messages. */
export function parseArtifact(text: string, source: string): Artifact {
  const meta: Record<string, string> = {};
  const dataLines: string[] = [];
  for (const line of text.split(/\r?\n/)) {
    if (line.startsWith("#")) {
      const m = META_LINE.exec(line);
      if (m !== null) meta[m[1]!] = m[2]!.trim();
      continue;
    }
    dataLines.push(line);
  }
  const parsed = Papa.parse<Record<string, string>>(dataLines.join("\n"), {
    header: true,
    skipEmptyLines: true,
  });
  const fatal = parsed.errors.find((e) => e.code !== "TooFewFields" || parsed.data.length > 0);
  if (fatal !== undefined && parsed.meta.fields === undefined) {
    throw new ArtifactError(`${source}: not a CSV artifact (${fatal.message})`);
  }
  const columns = parsed.meta.fields ?? [];
  if (columns.length === 0) {
    throw new ArtifactError(`${source}: no header row found`);
  }
  return { source, meta, columns, rows: parsed.data };
}

/** Read and parse one artifact file. */
export function readArtifact(path: string): Artifact {
  let text: string;
  try {
    text = readFileSync(path, "utf8");
  } catch (err) {
    throw new ArtifactError(`${path}: ${(err as Error).message}`);
  }
  return parseArtifact(text, basename(path));
}

/**
 * Check that the artifact carries every column of the expected schema,
 * naming the first missing column otherwise.
 */
export function requireColumns(artifact: Artifact, required: readonly string[]): void {
  const missing = required.filter((c) => !artifact.columns.includes(c));
  if (missing.length > 0) {
    throw new ArtifactError(
      `${artifact.source}: missing column "${missing[0]}"` +
        ` (expected ${required.join(", ")}; found ${artifact.columns.join(", ")})`,
    );
  }
}

/**
 * Extract a numeric column. Empty cells become NaN; anything else that does
 * not parse as a finite number is a schema error naming the column.
 */
export function numericColumn(artifact: Artifact, name: string): number[] {
  requireColumns(artifact, [name]);
  return artifact.rows.map((row, i) => {
    const cell = (row[name] ?? "").trim();
    if (cell === "") return NaN;
    const value = Number(cell);
    if (!Number.isFinite(value)) {
      throw new ArtifactError(
        `${artifact.source}: column "${name}" has non-numeric value "${cell}" at data row ${i + 1}`,
      );
    }
    return value;
  });
}

/** Extract a column as strings (e.g. the branch labels "+", "-", "."). */
export function stringColumn(artifact: Artifact, name: string): string[] {
  requireColumns(artifact, [name]);
  return artifact.rows.map((row) => (row[name] ?? "").trim());
}

/**
 * Artifacts joined into one figure must describe the same target density.
 * The CLI stamps each density-dependent artifact with a target_hash comment
 * covering the density option block, so files produced by different
 * subcommands can still be checked for compatibility. Returns the common
 * hash.
 */
export function requireSameTarget(artifacts: readonly Artifact[]): string {
  const hashes = artifacts.map((a) => {
    const h = a.meta["target_hash"];
    if (h === undefined || h === "") {
      throw new ArtifactError(
        `${a.source}: no target_hash comment; regenerate the file with the fluidchain CLI`,
      );
    }
    return h;
  });
  const first = hashes[0]!;
  for (let i = 1; i < hashes.length; i += 1) {
    if (hashes[i] !== first) {
      throw new ArtifactError(
        `target_hash mismatch: ${artifacts[0]!.source} has ${first} but ` +
          `${artifacts[i]!.source} has ${hashes[i]}; the inputs were computed for different targets`,
      );
    }
  }
  return first;
}
