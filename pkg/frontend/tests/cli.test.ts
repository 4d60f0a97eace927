import { describe, expect, test } from "vitest";
import { fileURLToPath } from "node:url";

import { CliIo, main } from "../src/cli.js";

const fixture = (name: string) =>
  fileURLToPath(new URL(`./fixtures/${name}`, import.meta.url));

interface FakeIo extends CliIo {
  errors: string[];
  files: Map<string, string>;
}

function fakeIo(): FakeIo {
  const errors: string[] = [];
  const files = new Map<string, string>();
  return {
    errors,
    files,
    stderr: (line) => errors.push(line),
    writeFile: (path, content) => files.set(path, content),
  };
}

describe("figure CLI", () => {
  test("renders every figure key to the requested file", () => {
    const invocations: string[][] = [
      ["contours", "--contour", fixture("contour_mixture.csv"), "--out", "contours.svg"],
      ["fields", "--field", fixture("field_mixture.csv"), "--out", "fields.svg"],
      [
        "flows-vs-trajectories",
        "--flow",
        fixture("flow_mixture.csv"),
        "--paths",
        fixture("paths_mixture.csv"),
        "--out",
        "flows.svg",
      ],
      [
        "diagonal-branches",
        "--flow",
        fixture("flow_diagonal.csv"),
        "--paths",
        fixture("paths_diagonal.csv"),
        "--out",
        "diag.svg",
      ],
    ];
    for (const argv of invocations) {
      const io = fakeIo();
      expect(main(argv, io), argv.join(" ")).toBe(0);
      expect(io.errors).toEqual([]);
      const svg = io.files.get(argv[argv.length - 1]!);
      expect(svg).toBeDefined();
      expect(svg).toContain("</svg>");
    }
  });

  test("unknown figure key exits 2 with usage", () => {
    const io = fakeIo();
    expect(main(["histogram", "--out", "x.svg"], io)).toBe(2);
    expect(io.errors[0]).toMatch(/unknown figure key "histogram"/);
    expect(io.errors[1]).toMatch(/^usage:/);
    expect(io.files.size).toBe(0);
  });

  test("missing --out exits 2", () => {
    const io = fakeIo();
    expect(main(["contours", "--contour", fixture("contour_mixture.csv")], io)).toBe(2);
    expect(io.errors[0]).toMatch(/--out FILE\.svg is required/);
  });

  test("unknown option exits 2", () => {
    const io = fakeIo();
    expect(main(["contours", "--wat", "1", "--out", "x.svg"], io)).toBe(2);
    expect(io.errors.some((e) => e.startsWith("usage:"))).toBe(true);
  });

  test("unreadable input exits 3", () => {
    const io = fakeIo();
    expect(main(["contours", "--contour", "/nonexistent/f.csv", "--out", "x.svg"], io)).toBe(3);
    expect(io.errors[0]).toMatch(/^figure-error: .*f\.csv/);
  });

  test("schema mismatch exits 3 naming the column", () => {
    const io = fakeIo();
    expect(
      main(["fields", "--field", fixture("contour_mixture.csv"), "--out", "x.svg"], io),
    ).toBe(3);
    expect(io.errors[0]).toMatch(/missing column "delta1"/);
  });

  test("target mismatch across inputs exits 3", () => {
    const io = fakeIo();
    const code = main(
      [
        "flows-vs-trajectories",
        "--flow",
        fixture("flow_wedge.csv"),
        "--paths",
        fixture("paths_mixture.csv"),
        "--out",
        "x.svg",
      ],
      io,
    );
    expect(code).toBe(3);
    expect(io.errors[0]).toMatch(/target_hash mismatch/);
  });

  test("empty replica file still renders, with a warning on stderr", () => {
    const io = fakeIo();
    const code = main(
      [
        "flows-vs-trajectories",
        "--flow",
        fixture("flow_mixture.csv"),
        "--paths",
        fixture("paths_empty.csv"),
        "--out",
        "flows.svg",
      ],
      io,
    );
    expect(code).toBe(0);
    expect(io.errors).toHaveLength(1);
    expect(io.errors[0]).toMatch(/^figure-warning: .*showing flow only/);
    expect(io.files.get("flows.svg")).toContain('class="warning"');
  });

  test("output is byte-identical across runs", () => {
    const argv = [
      "diagonal-branches",
      "--flow",
      fixture("flow_diagonal.csv"),
      "--paths",
      fixture("paths_diagonal.csv"),
      "--out",
      "d.svg",
    ];
    const a = fakeIo();
    const b = fakeIo();
    expect(main(argv, a)).toBe(0);
    expect(main(argv, b)).toBe(0);
    expect(a.files.get("d.svg")).toBe(b.files.get("d.svg"));
  });
});
