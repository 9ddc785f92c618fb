/**
 * Learned-versus-true latent density figure: overlaid curves in 1-D,
 * side-by-side heatmaps with one shared color scale in 2-D.
 */

import { GriddedDensity, SchemaError, requireSameHash } from "./schema.js";
import { DEFAULT_MARGIN, SvgScene, colorRamp, linearScale } from "./svg.js";

function sameGrid(a: GriddedDensity, b: GriddedDensity): boolean {
  if (a.d !== b.d) return false;
  return a.axes.every((ax, i) => {
    const bx = b.axes[i];
    return ax.length === bx.length && ax.every((v, j) => Math.abs(v - bx[j]) <= 1e-12);
  });
}

export function plotDensityOverlay(trueGrid: GriddedDensity, estGrid: GriddedDensity,
                                   opts: { width?: number; height?: number } = {}): string {
  if (!sameGrid(trueGrid, estGrid)) {
    throw new SchemaError("true and estimated grids do not match");
  }
  requireSameHash(trueGrid.configHash, estGrid.configHash);
  return trueGrid.d === 1 ? overlay1d(trueGrid, estGrid, opts) : heatmaps2d(trueGrid, estGrid, opts);
}

function overlay1d(t: GriddedDensity, e: GriddedDensity, opts: { width?: number; height?: number }): string {
  const width = opts.width ?? 720;
  const height = opts.height ?? 420;
  const m = DEFAULT_MARGIN;
  const scene = new SvgScene(width, height);
  const grid = t.axes[0];
  const tv = t.values[0];
  const ev = e.values[0];
  const x = linearScale([grid[0], grid[grid.length - 1]], [m.left, width - m.right]);
  const hi = Math.max(...tv, ...ev) * 1.05 || 1;
  const y = linearScale([0, hi], [height - m.bottom, m.top]);
  scene.line(m.left, height - m.bottom, width - m.right, height - m.bottom, { cls: "axis", stroke: "#000" });
  scene.line(m.left, m.top, m.left, height - m.bottom, { cls: "axis", stroke: "#000" });
  scene.polyline(grid.map((g, i) => [x(g), y(tv[i])] as [number, number]),
                 { cls: "curve", stroke: "#000", data: { role: "true" } });
  scene.polyline(grid.map((g, i) => [x(g), y(ev[i])] as [number, number]),
                 { cls: "curve", stroke: "#d62728", data: { role: "estimate" } });
  scene.text(m.left + 8, m.top + 4, "true latent density (black) vs estimate (red)", { size: 11 });
  scene.text((m.left + width - m.right) / 2, height - 10, "latent coordinate u", { anchor: "middle" });
  return scene.render();
}

function heatmaps2d(t: GriddedDensity, e: GriddedDensity, opts: { width?: number; height?: number }): string {
  const width = opts.width ?? 900;
  const height = opts.height ?? 460;
  const m = DEFAULT_MARGIN;
  const scene = new SvgScene(width, height);
  const [g1, g2] = t.axes;
  const flat = [...t.values.flat(), ...e.values.flat()];
  const vmax = Math.max(...flat) || 1;
  const vmin = Math.min(...flat, 0);
  const panelW = (width - m.left - m.right - 40) / 2;
  const panelH = height - m.top - m.bottom;
  const cellW = panelW / g1.length;
  const cellH = panelH / g2.length;

  const panels: Array<[GriddedDensity, number, string]> = [
    [t, m.left, "true"],
    [e, m.left + panelW + 40, "estimate"],
  ];
  for (const [gd, x0, label] of panels) {
    for (let i = 0; i < g1.length; i++) {
      for (let j = 0; j < g2.length; j++) {
        const v = (gd.values[i][j] - vmin) / (vmax - vmin || 1);
        scene.rect(x0 + i * cellW, m.top + panelH - (j + 1) * cellH, cellW + 0.5, cellH + 0.5, colorRamp(v));
      }
    }
    scene.text(x0 + panelW / 2, m.top - 8, label, { anchor: "middle" });
  }
  // shared color scale bar
  const barX = width - m.right + 6;
  for (let k = 0; k < 40; k++) {
    scene.rect(barX - 18, m.top + panelH - ((k + 1) * panelH) / 40, 12, panelH / 40 + 0.5, colorRamp(k / 39), "scale-cell");
  }
  scene.text(barX - 22, m.top + 10, vmax.toPrecision(3), { anchor: "end", size: 10 });
  scene.text(barX - 22, m.top + panelH, vmin.toPrecision(3), { anchor: "end", size: 10 });
  return scene.render();
}
