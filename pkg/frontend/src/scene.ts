/**
 * Deterministic SVG scene building: a framed data viewport with axes, plus
 * line/arrow/text primitives placed in data coordinates. Coordinates are
 * written with fixed precision so identical inputs give identical bytes.
 */

export interface Extent {
  xmin: number;
  xmax: number;
  ymin: number;
  ymax: number;
}

/** Accumulate the bounding box of finite points; null when none are finite. */
export function extentOfPoints(points: Iterable<readonly [number, number]>): Extent | null {
  let e: Extent | null = null;
  for (const [x, y] of points) {
    if (!Number.isFinite(x) || !Number.isFinite(y)) continue;
    if (e === null) {
      e = { xmin: x, xmax: x, ymin: y, ymax: y };
    } else {
      if (x < e.xmin) e.xmin = x;
      if (x > e.xmax) e.xmax = x;
      if (y < e.ymin) e.ymin = y;
      if (y > e.ymax) e.ymax = y;
    }
  }
  return e;
}

/** Grow the extent by a fraction of its span on every side. */
export function padExtent(e: Extent, frac: number): Extent {
  const sx = Math.max(e.xmax - e.xmin, 1e-9) * frac;
  const sy = Math.max(e.ymax - e.ymin, 1e-9) * frac;
  return { xmin: e.xmin - sx, xmax: e.xmax + sx, ymin: e.ymin - sy, ymax: e.ymax + sy };
}

export function mergeExtents(a: Extent, b: Extent): Extent {
  return {
    xmin: Math.min(a.xmin, b.xmin),
    xmax: Math.max(a.xmax, b.xmax),
    ymin: Math.min(a.ymin, b.ymin),
    ymax: Math.max(a.ymax, b.ymax),
  };
}

export interface LegendEntry {
  label: string;
  color: string;
  /** SVG dash pattern for the swatch line; solid when omitted. */
  dash?: string;
}

const XML_ESCAPES: Record<string, string> = {
  "&": "&amp;",
  "<": "&lt;",
  ">": "&gt;",
  '"': "&quot;",
};

export function escapeXml(s: string): string {
  return s.replace(/[&<>"]/g, (c) => XML_ESCAPES[c]!);
}

/** Fixed two-decimal pixel formatting; avoids "-0.00". */
export function fmt(v: number): string {
  const s = v.toFixed(2);
  return s === "-0.00" ? "0.00" : s;
}

function tag(name: string, attrs: Record<string, string>, body?: string): string {
  const parts = Object.entries(attrs).map(([k, v]) => ` ${k}="${v}"`);
  const open = `<${name}${parts.join("")}`;
  return body === undefined ? `${open}/>` : `${open}>${body}</${name}>`;
}

/** Nice tick positions covering [lo, hi] (1-2-5 progression). */
export function niceTicks(lo: number, hi: number, count: number): number[] {
  if (!(hi > lo)) return [lo];
  const rawStep = (hi - lo) / Math.max(count, 1);
  const mag = 10 ** Math.floor(Math.log10(rawStep));
  let step = mag * 10;
  for (const f of [1, 2, 5]) {
    if (mag * f >= rawStep) {
      step = mag * f;
      break;
    }
  }
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    ticks.push(v);
  }
  const decimals = Math.max(0, -Math.floor(Math.log10(step)));
  return ticks.map((v) => Number(v.toFixed(decimals)));
}

function tickLabel(v: number): string {
  return Object.is(v, -0) ? "0" : String(v);
}

export interface SceneOptions {
  width?: number;
  height?: number;
  title?: string;
}

const MARGIN = { top: 44, right: 24, bottom: 46, left: 58 };

/**
 * A data viewport mapped into a fixed pixel frame with equal x/y scaling
 * (phase portraits should not be sheared).
 */
export class Scene {
  readonly extent: Extent;
  readonly width: number;
  readonly height: number;
  private readonly title: string;
  private readonly scale: number;
  private readonly cx: number;
  private readonly cy: number;
  private readonly body: string[] = [];
  private readonly overlays: string[] = [];

  constructor(extent: Extent, options: SceneOptions = {}) {
    this.extent = extent;
    this.width = options.width ?? 640;
    this.height = options.height ?? 520;
    this.title = options.title ?? "";
    const plotW = this.width - MARGIN.left - MARGIN.right;
    const plotH = this.height - MARGIN.top - MARGIN.bottom;
    const spanX = Math.max(extent.xmax - extent.xmin, 1e-9);
    const spanY = Math.max(extent.ymax - extent.ymin, 1e-9);
    this.scale = Math.min(plotW / spanX, plotH / spanY);
    this.cx = MARGIN.left + plotW / 2 - this.scale * (extent.xmin + extent.xmax) / 2;
    this.cy = MARGIN.top + plotH / 2 + this.scale * (extent.ymin + extent.ymax) / 2;
  }

  /** Data coordinates to pixels (y up in data, down in pixels). */
  px(x: number, y: number): [number, number] {
    return [this.cx + this.scale * x, this.cy - this.scale * y];
  }

  /** Pixel length of a data-space length. */
  pxLength(d: number): number {
    return this.scale * d;
  }

  polyline(points: ReadonlyArray<readonly [number, number]>, attrs: Record<string, string>): void {
    let run: string[] = [];
    const flush = () => {
      if (run.length > 1) {
        this.body.push(tag("polyline", { points: run.join(" "), fill: "none", ...attrs }));
      }
      run = [];
    };
    for (const [x, y] of points) {
      if (!Number.isFinite(x) || !Number.isFinite(y)) {
        flush();
        continue;
      }
      const [gx, gy] = this.px(x, y);
      run.push(`${fmt(gx)},${fmt(gy)}`);
    }
    flush();
  }

  circle(x: number, y: number, rPx: number, attrs: Record<string, string>): void {
    const [gx, gy] = this.px(x, y);
    this.body.push(tag("circle", { cx: fmt(gx), cy: fmt(gy), r: fmt(rPx), ...attrs }));
  }

  /** Arrow from (x, y) along (dx, dy) in data units, with a V-shaped head. */
  arrow(x: number, y: number, dx: number, dy: number, attrs: Record<string, string>): void {
    const [x0, y0] = this.px(x, y);
    const [x1, y1] = this.px(x + dx, y + dy);
    const len = Math.hypot(x1 - x0, y1 - y0);
    if (!Number.isFinite(len) || len < 1e-6) return;
    const ux = (x1 - x0) / len;
    const uy = (y1 - y0) / len;
    const head = Math.min(5, 0.35 * len);
    const spread = 0.45;
    const points = [
      `${fmt(x0)},${fmt(y0)}`,
      `${fmt(x1)},${fmt(y1)}`,
      `${fmt(x1 - head * (ux - spread * uy))},${fmt(y1 - head * (uy + spread * ux))}`,
      `${fmt(x1)},${fmt(y1)}`,
      `${fmt(x1 - head * (ux + spread * uy))},${fmt(y1 - head * (uy - spread * ux))}`,
    ];
    this.body.push(tag("polyline", { points: points.join(" "), fill: "none", ...attrs }));
  }

  /** Legend box in the top-right corner of the plot area. */
  legend(entries: readonly LegendEntry[]): void {
    if (entries.length === 0) return;
    const lineH = 18;
    const boxW = 230;
    const boxH = 10 + entries.length * lineH;
    const x = this.width - MARGIN.right - boxW - 6;
    const y = MARGIN.top + 6;
    const parts: string[] = [
      tag("rect", {
        x: fmt(x),
        y: fmt(y),
        width: fmt(boxW),
        height: fmt(boxH),
        fill: "white",
        "fill-opacity": "0.85",
        stroke: "#cccccc",
      }),
    ];
    entries.forEach((entry, i) => {
      const cy = y + 10 + (i + 0.5) * lineH - lineH / 2 + 4;
      const lineAttrs: Record<string, string> = {
        x1: fmt(x + 8),
        y1: fmt(cy - 4),
        x2: fmt(x + 40),
        y2: fmt(cy - 4),
        stroke: entry.color,
        "stroke-width": "1.5",
      };
      if (entry.dash !== undefined) lineAttrs["stroke-dasharray"] = entry.dash;
      parts.push(tag("line", lineAttrs));
      parts.push(
        tag(
          "text",
          { x: fmt(x + 46), y: fmt(cy), "font-size": "12", fill: "#222222" },
          escapeXml(entry.label),
        ),
      );
    });
    this.overlays.push(tag("g", { class: "legend" }, parts.join("")));
  }

  /** Small provenance line in the bottom-right corner. */
  footer(message: string): void {
    this.overlays.push(
      tag(
        "text",
        {
          class: "provenance",
          x: fmt(this.width - 6),
          y: fmt(this.height - 4),
          "font-size": "9",
          "text-anchor": "end",
          fill: "#999999",
        },
        escapeXml(message),
      ),
    );
  }

  /** Prominent annotation under the title, e.g. degenerate-input warnings. */
  warn(message: string): void {
    this.overlays.push(
      tag(
        "text",
        {
          class: "warning",
          x: fmt(MARGIN.left),
          y: fmt(MARGIN.top - 6),
          "font-size": "12",
          fill: "#b04000",
        },
        escapeXml(message),
      ),
    );
  }

  private axes(): string {
    const parts: string[] = [];
    const [left, top] = [MARGIN.left, MARGIN.top];
    const right = this.width - MARGIN.right;
    const bottom = this.height - MARGIN.bottom;
    parts.push(
      tag("rect", {
        x: fmt(left),
        y: fmt(top),
        width: fmt(right - left),
        height: fmt(bottom - top),
        fill: "none",
        stroke: "#444444",
      }),
    );
    for (const v of niceTicks(this.extent.xmin, this.extent.xmax, 6)) {
      const [gx] = this.px(v, 0);
      if (gx < left - 1e-6 || gx > right + 1e-6) continue;
      parts.push(tag("line", { x1: fmt(gx), y1: fmt(bottom), x2: fmt(gx), y2: fmt(bottom + 5), stroke: "#444444" }));
      parts.push(
        tag(
          "text",
          { x: fmt(gx), y: fmt(bottom + 18), "font-size": "11", "text-anchor": "middle", fill: "#222222" },
          tickLabel(v),
        ),
      );
    }
    for (const v of niceTicks(this.extent.ymin, this.extent.ymax, 6)) {
      const [, gy] = this.px(0, v);
      if (gy < top - 1e-6 || gy > bottom + 1e-6) continue;
      parts.push(tag("line", { x1: fmt(left - 5), y1: fmt(gy), x2: fmt(left), y2: fmt(gy), stroke: "#444444" }));
      parts.push(
        tag(
          "text",
          { x: fmt(left - 8), y: fmt(gy + 4), "font-size": "11", "text-anchor": "end", fill: "#222222" },
          tickLabel(v),
        ),
      );
    }
    parts.push(
      tag(
        "text",
        { x: fmt((left + right) / 2), y: fmt(this.height - 10), "font-size": "12", "text-anchor": "middle", fill: "#222222" },
        "x1",
      ),
    );
    parts.push(
      tag(
        "text",
        {
          x: "14",
          y: fmt((top + bottom) / 2),
          "font-size": "12",
          "text-anchor": "middle",
          fill: "#222222",
          transform: `rotate(-90 14 ${fmt((top + bottom) / 2)})`,
        },
        "x2",
      ),
    );
    return parts.join("");
  }

  render(): string {
    const pieces: string[] = [
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" height="${this.height}" ` +
        `viewBox="0 0 ${this.width} ${this.height}" font-family="sans-serif">`,
      tag("rect", { x: "0", y: "0", width: String(this.width), height: String(this.height), fill: "white" }),
    ];
    if (this.title !== "") {
      pieces.push(
        tag(
          "text",
          { x: fmt(this.width / 2), y: "24", "font-size": "15", "text-anchor": "middle", fill: "#111111" },
          escapeXml(this.title),
        ),
      );
    }
    pieces.push(this.axes());
    pieces.push(tag("g", { class: "marks" }, this.body.join("")));
    pieces.push(...this.overlays);
    pieces.push("</svg>");
    return pieces.join("\n");
  }
}
