// Hand-rolled SVG builders. Every chart is a plain SVG element the views
// mount directly; no canvas, no chart library, so tests can assert on nodes.

const SVG_NS = "http://www.w3.org/2000/svg";

export function svgEl<K extends keyof SVGElementTagNameMap>(
  name: K,
  attrs: Record<string, string | number> = {},
  text?: string,
): SVGElementTagNameMap[K] {
  const el = document.createElementNS(SVG_NS, name);
  for (const [k, v] of Object.entries(attrs)) {
    el.setAttribute(k, String(v));
  }
  if (text !== undefined) el.textContent = text;
  return el;
}

export interface SeriesPoint {
  x: number;
  y: number;
}

export interface BoundSpec {
  value: number;
  kind: "max" | "min";
  label: string;
}

export interface PanelSpec {
  dim: string;
  label: string;
  points: SeriesPoint[];
  // step: true draws horizontal segments between samples (categorical series)
  step?: boolean;
  bounds?: BoundSpec[];
  yTicks?: { value: number; label: string }[];
}

export interface VerticalMark {
  x: number;
  cls: string;
  label?: string;
}

export interface RegionMark {
  start: number;
  end: number;
}

export interface PanelChartOptions {
  width?: number;
  panelHeight?: number;
  xLabel?: string;
}

interface Scale {
  (v: number): number;
}

function linearScale(d0: number, d1: number, r0: number, r1: number): Scale {
  const span = d1 - d0 || 1;
  return (v: number) => r0 + ((v - d0) / span) * (r1 - r0);
}

function niceTicks(lo: number, hi: number, n = 5): number[] {
  if (!(hi > lo)) return [lo];
  const step = Math.pow(10, Math.floor(Math.log10((hi - lo) / n)));
  const err = (hi - lo) / (n * step);
  const mult = err >= 7.5 ? 10 : err >= 3.5 ? 5 : err >= 1.5 ? 2 : 1;
  const s = step * mult;
  const ticks: number[] = [];
  for (let v = Math.ceil(lo / s) * s; v <= hi + 1e-9; v += s) {
    ticks.push(Number(v.toFixed(10)));
  }
  return ticks;
}

function formatTick(v: number): string {
  if (Math.abs(v) >= 1000) return String(Math.round(v));
  return String(Number(v.toPrecision(4)));
}

/**
 * Stacked metric panels over a shared x axis. Violation regions are drawn
 * once as full-height rectangles behind every panel, so one breach window
 * renders as exactly one region element.
 */
export function renderMetricPanels(
  panels: PanelSpec[],
  regions: RegionMark[] = [],
  verticals: VerticalMark[] = [],
  opts: PanelChartOptions = {},
): SVGSVGElement {
  const width = opts.width ?? 960;
  const panelH = opts.panelHeight ?? 64;
  const gap = 16;
  const left = 78;
  const right = 16;
  const top = 8;
  const bottom = 26;
  const n = Math.max(panels.length, 1);
  const height = top + n * panelH + (n - 1) * gap + bottom;

  const svg = svgEl("svg", {
    width,
    height,
    viewBox: `0 0 ${width} ${height}`,
    class: "metric-panels",
  });

  const xs = panels.flatMap((p) => p.points.map((pt) => pt.x));
  for (const r of regions) xs.push(r.start, r.end);
  for (const v of verticals) xs.push(v.x);
  const x0 = xs.length > 0 ? Math.min(...xs) : 0;
  const x1 = xs.length > 0 ? Math.max(...xs) : 1;
  const sx = linearScale(x0, x1 === x0 ? x0 + 1 : x1, left, width - right);
  const panelSpan = n * panelH + (n - 1) * gap;

  // regions first so series render on top of the shading
  for (const r of regions) {
    const rx = sx(r.start);
    const rw = Math.max(sx(r.end) - rx, 2);
    svg.appendChild(
      svgEl("rect", {
        x: rx,
        y: top,
        width: rw,
        height: panelSpan,
        class: "violation-region",
      }),
    );
  }

  panels.forEach((panel, i) => {
    const py = top + i * (panelH + gap);
    const g = svgEl("g", { class: "panel", "data-dim": panel.dim });
    g.appendChild(
      svgEl("rect", {
        x: left,
        y: py,
        width: width - left - right,
        height: panelH,
        class: "panel-frame",
      }),
    );
    g.appendChild(
      svgEl("text", { x: 4, y: py + 12, class: "panel-label" }, panel.label),
    );

    const ys = panel.points.map((pt) => pt.y);
    for (const b of panel.bounds ?? []) ys.push(b.value);
    for (const t of panel.yTicks ?? []) ys.push(t.value);
    let y0 = ys.length > 0 ? Math.min(...ys) : 0;
    let y1 = ys.length > 0 ? Math.max(...ys) : 1;
    if (y1 - y0 < 1e-12) {
      y0 -= 1;
      y1 += 1;
    } else {
      const pad = (y1 - y0) * 0.12;
      y0 -= pad;
      y1 += pad;
    }
    const sy = linearScale(y0, y1, py + panelH - 4, py + 4);

    for (const bound of panel.bounds ?? []) {
      const by = sy(bound.value);
      g.appendChild(
        svgEl("line", {
          x1: left,
          y1: by,
          x2: width - right,
          y2: by,
          class: `sla-bound sla-bound-${bound.kind}`,
          "stroke-dasharray": "6 4",
        }),
      );
      g.appendChild(
        svgEl("text", { x: width - right - 4, y: by - 3, "text-anchor": "end",
          class: "bound-label" }, bound.label),
      );
    }

    for (const tick of panel.yTicks ?? []) {
      g.appendChild(
        svgEl("text", { x: left - 6, y: sy(tick.value) + 3, "text-anchor": "end",
          class: "y-tick" }, tick.label),
      );
    }

    if (panel.points.length > 0) {
      const coords: string[] = [];
      panel.points.forEach((pt, j) => {
        if (panel.step && j > 0) {
          const prev = panel.points[j - 1];
          if (prev !== undefined) coords.push(`${sx(pt.x)},${sy(prev.y)}`);
        }
        coords.push(`${sx(pt.x)},${sy(pt.y)}`);
      });
      g.appendChild(
        svgEl("polyline", {
          points: coords.join(" "),
          class: "series",
          fill: "none",
        }),
      );
    }
    svg.appendChild(g);
  });

  for (const mark of verticals) {
    const mx = sx(mark.x);
    svg.appendChild(
      svgEl("line", {
        x1: mx,
        y1: top,
        x2: mx,
        y2: top + panelSpan,
        class: mark.cls,
      }),
    );
    if (mark.label) {
      svg.appendChild(
        svgEl("text", { x: mx + 3, y: top + 10, class: "mark-label" }, mark.label),
      );
    }
  }

  const axisY = top + panelSpan + 16;
  for (const t of niceTicks(x0, x1)) {
    svg.appendChild(
      svgEl("text", { x: sx(t), y: axisY, "text-anchor": "middle", class: "x-tick" },
        formatTick(t)),
    );
  }
  if (opts.xLabel) {
    svg.appendChild(
      svgEl("text", { x: width - right, y: axisY, "text-anchor": "end",
        class: "x-axis-label" }, opts.xLabel),
    );
  }
  return svg;
}

/** Horizontal bar chart of per-kind counts. */
export function renderHistogram(counts: Record<string, number>): SVGSVGElement {
  const kinds = Object.keys(counts).sort();
  const rowH = 26;
  const width = 420;
  const left = 150;
  const height = Math.max(kinds.length, 1) * rowH + 8;
  const svg = svgEl("svg", {
    width,
    height,
    viewBox: `0 0 ${width} ${height}`,
    class: "kind-histogram",
  });
  const maxCount = Math.max(1, ...kinds.map((k) => counts[k] ?? 0));
  kinds.forEach((kind, i) => {
    const y = 4 + i * rowH;
    const value = counts[kind] ?? 0;
    const w = ((width - left - 60) * value) / maxCount;
    svg.appendChild(
      svgEl("text", { x: left - 8, y: y + 15, "text-anchor": "end",
        class: "hist-label" }, kind),
    );
    svg.appendChild(
      svgEl("rect", { x: left, y, width: Math.max(w, 2), height: rowH - 8,
        class: `hist-bar hist-${kind}`, "data-kind": kind }),
    );
    svg.appendChild(
      svgEl("text", { x: left + Math.max(w, 2) + 6, y: y + 15,
        class: "hist-count" }, String(value)),
    );
  });
  return svg;
}

export interface TimelinePoint {
  x: number;
  kind: string;
  title: string;
}

/** One row per point kind; a marker circle at each point's x position. */
export function renderPointTimeline(
  points: TimelinePoint[],
  domain?: { x0: number; x1: number },
): SVGSVGElement {
  const kinds = [...new Set(points.map((p) => p.kind))].sort();
  const rowH = 26;
  const width = 960;
  const left = 150;
  const right = 16;
  const height = Math.max(kinds.length, 1) * rowH + 30;
  const svg = svgEl("svg", {
    width,
    height,
    viewBox: `0 0 ${width} ${height}`,
    class: "point-timeline",
  });
  const xs = points.map((p) => p.x);
  const x0 = domain?.x0 ?? (xs.length > 0 ? Math.min(...xs) : 0);
  const x1 = domain?.x1 ?? (xs.length > 0 ? Math.max(...xs) : 1);
  const sx = linearScale(x0, x1 === x0 ? x0 + 1 : x1, left, width - right);

  kinds.forEach((kind, i) => {
    const cy = 14 + i * rowH;
    svg.appendChild(
      svgEl("text", { x: left - 8, y: cy + 4, "text-anchor": "end",
        class: "timeline-label" }, kind),
    );
    svg.appendChild(
      svgEl("line", { x1: left, y1: cy, x2: width - right, y2: cy,
        class: "timeline-row" }),
    );
  });
  for (const p of points) {
    const row = kinds.indexOf(p.kind);
    const marker = svgEl("circle", {
      cx: sx(p.x),
      cy: 14 + row * rowH,
      r: 5,
      class: `decision-point decision-${p.kind}`,
      "data-kind": p.kind,
    });
    marker.appendChild(svgEl("title", {}, p.title));
    svg.appendChild(marker);
  }
  const axisY = Math.max(kinds.length, 1) * rowH + 20;
  for (const t of niceTicks(x0, x1)) {
    svg.appendChild(
      svgEl("text", { x: sx(t), y: axisY, "text-anchor": "middle",
        class: "x-tick" }, formatTick(t)),
    );
  }
  return svg;
}

export interface HeatmapBand {
  label: string;
  cells: { x: number; value: number; marker?: boolean }[];
}

/**
 * One horizontal band per entity; cell color encodes the value (blue low,
 * red high, normalized over all bands). Cells flagged marker get a handover
 * outline so serving-cell changes stand out.
 */
export function renderHeatmap(
  bands: HeatmapBand[],
  opts: { width?: number; valueLabel?: string } = {},
): SVGSVGElement {
  const width = opts.width ?? 960;
  const rowH = 30;
  const left = 150;
  const right = 16;
  const height = Math.max(bands.length, 1) * rowH + 34;
  const svg = svgEl("svg", {
    width,
    height,
    viewBox: `0 0 ${width} ${height}`,
    class: "uav-heatmap",
  });

  const all = bands.flatMap((b) => b.cells);
  const values = all.map((c) => c.value);
  const v0 = values.length > 0 ? Math.min(...values) : 0;
  const v1 = values.length > 0 ? Math.max(...values) : 1;
  const xs = all.map((c) => c.x);
  const x0 = xs.length > 0 ? Math.min(...xs) : 0;
  const x1 = xs.length > 0 ? Math.max(...xs) : 1;
  const sx = linearScale(x0, x1 === x0 ? x0 + 1 : x1, left, width - right);
  const cellW = all.length > 0
    ? Math.max((width - left - right) / Math.max(new Set(xs).size, 1), 2)
    : 2;

  const color = (v: number): string => {
    const t = v1 - v0 < 1e-12 ? 0.5 : (v - v0) / (v1 - v0);
    return `hsl(${Math.round(240 - 240 * t)}, 70%, 50%)`;
  };

  bands.forEach((band, i) => {
    const y = 4 + i * rowH;
    svg.appendChild(
      svgEl("text", { x: left - 8, y: y + rowH / 2 + 3, "text-anchor": "end",
        class: "band-label" }, band.label),
    );
    for (const cell of band.cells) {
      const rect = svgEl("rect", {
        x: sx(cell.x) - cellW / 2,
        y,
        width: cellW,
        height: rowH - 6,
        fill: color(cell.value),
        class: cell.marker ? "heat-cell handover-cell" : "heat-cell",
        "data-value": cell.value.toFixed(3),
      });
      rect.appendChild(
        svgEl("title", {}, `${band.label} @ ${cell.x}: ${cell.value.toFixed(2)}`),
      );
      svg.appendChild(rect);
    }
  });

  const axisY = Math.max(bands.length, 1) * rowH + 22;
  for (const t of niceTicks(x0, x1)) {
    svg.appendChild(
      svgEl("text", { x: sx(t), y: axisY, "text-anchor": "middle",
        class: "x-tick" }, formatTick(t)),
    );
  }
  if (opts.valueLabel) {
    svg.appendChild(
      svgEl("text", { x: left, y: axisY, "text-anchor": "end", class: "value-label" },
        `${opts.valueLabel}: ${formatTick(v0)} to ${formatTick(v1)}`),
    );
  }
  return svg;
}
