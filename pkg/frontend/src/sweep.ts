/**
 * KS-versus-noise-magnitude figure: one log-log curve per method with
 * per-seed error bars, the latent-baseline KS as a horizontal reference
 * line, and the estimated lower/upper noise bounds as dashed verticals.
 */

import { Bounds, SweepRow, requireSameHash } from "./schema.js";
import { DEFAULT_MARGIN, SvgScene, logScale, logTicks } from "./svg.js";

const METHOD_COLORS: Record<string, string> = {
  nid: "#1f77b4",
  iid: "#ff7f0e",
  chi2: "#2ca02c",
  reach_ball: "#9467bd",
  interval: "#8c564b",
};

export interface SweepPlotResult {
  svg: string;
  warnings: string[];
}

interface Aggregate {
  sigma2: number;
  mean: number;
  stderr: number;
  n: number;
}

function aggregate(rows: SweepRow[]): Map<string, Aggregate[]> {
  const groups = new Map<string, Map<number, number[]>>();
  for (const row of rows) {
    if (row.status !== "ok" || !Number.isFinite(row.ks)) continue;
    if (!groups.has(row.method)) groups.set(row.method, new Map());
    const byS2 = groups.get(row.method)!;
    if (!byS2.has(row.sigma2)) byS2.set(row.sigma2, []);
    byS2.get(row.sigma2)!.push(row.ks);
  }
  const out = new Map<string, Aggregate[]>();
  for (const [method, byS2] of groups) {
    const aggs = [...byS2.entries()]
      .map(([sigma2, ks]) => {
        const mean = ks.reduce((a, b) => a + b, 0) / ks.length;
        const sd = Math.sqrt(ks.reduce((a, b) => a + (b - mean) ** 2, 0) / Math.max(1, ks.length - 1));
        return { sigma2, mean, stderr: ks.length > 1 ? sd / Math.sqrt(ks.length) : 0, n: ks.length };
      })
      .sort((a, b) => a.sigma2 - b.sigma2);
    out.set(method, aggs);
  }
  return out;
}

export function plotSweep(rows: SweepRow[], bounds: Bounds | null, fomKs: number | null,
                          opts: { width?: number; height?: number; boundsHash?: string } = {}): SweepPlotResult {
  const warnings: string[] = [];
  if (bounds && opts.boundsHash !== undefined) {
    requireSameHash(opts.boundsHash, bounds.configHash);
  }
  const width = opts.width ?? 720;
  const height = opts.height ?? 480;
  const m = DEFAULT_MARGIN;
  const scene = new SvgScene(width, height);

  const byMethod = aggregate(rows);
  const declaredMethods = [...new Set(rows.map((r) => r.method))];
  for (const method of declaredMethods) {
    if (!byMethod.has(method) || byMethod.get(method)!.length === 0) {
      warnings.push(`method ${method}: no usable rows, curve omitted`);
    }
  }

  const ksFloor = 1e-6;
  const allS2: number[] = [];
  const allKs: number[] = [];
  for (const aggs of byMethod.values()) {
    for (const a of aggs) {
      allS2.push(a.sigma2);
      allKs.push(Math.max(a.mean, ksFloor));
    }
  }
  if (fomKs !== null && fomKs > 0) allKs.push(fomKs);
  if (bounds) {
    allS2.push(bounds.lowerSq);
    if (Number.isFinite(bounds.upper)) allS2.push(bounds.upper);
  }
  if (allS2.length === 0) throw new Error("nothing to plot: no sigma2 points");

  const x = logScale([Math.min(...allS2) / 2, Math.max(...allS2) * 2], [m.left, width - m.right]);
  const yLo = Math.max(Math.min(...allKs) / 2, 1e-7);
  const yHi = Math.max(...allKs) * 2;
  const y = logScale([yLo, yHi], [height - m.bottom, m.top]);

  for (const tick of logTicks(Math.min(...allS2) / 2, Math.max(...allS2) * 2)) {
    scene.line(x(tick), height - m.bottom, x(tick), height - m.bottom + 5, { cls: "tick", stroke: "#444" });
    scene.text(x(tick), height - m.bottom + 18, `1e${Math.round(Math.log10(tick))}`, { anchor: "middle", size: 10 });
  }
  for (const tick of logTicks(yLo, yHi)) {
    scene.line(m.left - 5, y(tick), m.left, y(tick), { cls: "tick", stroke: "#444" });
    scene.text(m.left - 8, y(tick) + 4, `1e${Math.round(Math.log10(tick))}`, { anchor: "end", size: 10 });
  }
  scene.line(m.left, height - m.bottom, width - m.right, height - m.bottom, { cls: "axis", stroke: "#000" });
  scene.line(m.left, m.top, m.left, height - m.bottom, { cls: "axis", stroke: "#000" });
  scene.text((m.left + width - m.right) / 2, height - 10, "noise magnitude sigma^2", { anchor: "middle" });
  scene.text(16, m.top - 10, "KS", {});

  const legend: Array<[string, string, string | null]> = [];
  let color_i = 0;
  for (const [method, aggs] of byMethod) {
    if (aggs.length === 0) continue;
    const color = METHOD_COLORS[method] ?? ["#d62728", "#17becf"][color_i++ % 2];
    const pts = aggs.map((a) => [x(a.sigma2), y(Math.max(a.mean, ksFloor))] as [number, number]);
    scene.polyline(pts, { cls: "curve", stroke: color, data: { method } });
    for (const a of aggs) {
      scene.circle(x(a.sigma2), y(Math.max(a.mean, ksFloor)), 2.5, color);
      if (a.stderr > 0) {
        const lo = Math.max(a.mean - a.stderr, ksFloor);
        const hi = Math.max(a.mean + a.stderr, ksFloor);
        scene.line(x(a.sigma2), y(lo), x(a.sigma2), y(hi), { cls: "errbar", stroke: color, data: { method } });
      }
    }
    legend.push([method.toUpperCase(), color, null]);
  }

  if (fomKs !== null && fomKs > 0) {
    scene.line(m.left, y(fomKs), width - m.right, y(fomKs), { cls: "ref-h", stroke: "#555", dash: "6 3" });
    legend.push(["FOM baseline", "#555", "dashed"]);
  }

  if (bounds) {
    scene.line(x(bounds.lowerSq), m.top, x(bounds.lowerSq), height - m.bottom,
               { cls: "ref-v", stroke: "#333", dash: "3 3", data: { kind: "lower" } });
    legend.push(["sigma^2 lower bound", "#333", "dashed"]);
    if (Number.isFinite(bounds.upper)) {
      scene.line(x(bounds.upper), m.top, x(bounds.upper), height - m.bottom,
                 { cls: "ref-v", stroke: "#333", dash: "8 3", data: { kind: "upper" } });
      legend.push(["sigma^2 upper bound", "#333", "dashed"]);
    } else {
      legend.push(["upper bound: inf (off-scale, omitted)", "#999", null]);
      warnings.push("upper bound is infinite; vertical line omitted");
    }
  }

  legend.forEach(([label, color], i) => {
    const ly = m.top + 8 + i * 16;
    scene.line(width - m.right - 150, ly - 4, width - m.right - 126, ly - 4, { cls: "legend-swatch", stroke: color });
    scene.text(width - m.right - 120, ly, label, { size: 11, cls: "legend" });
  });

  return { svg: scene.render(), warnings };
}
