import { describe, expect, it } from "vitest";

import { plotDensityOverlay } from "../src/density.js";
import { parseGridCsv, SchemaError } from "../src/schema.js";
import { grid1dCsv, grid2dCsv } from "./fixtures.js";

function count(svg: string, cls: string): number {
  return (svg.match(new RegExp(`class="${cls}"`, "g")) ?? []).length;
}

describe("density overlay figure", () => {
  it("renders a 1-D overlay with two curves", () => {
    const t = parseGridCsv(grid1dCsv(1.0));
    const e = parseGridCsv(grid1dCsv(0.9));
    const svg = plotDensityOverlay(t, e);
    expect(count(svg, "curve")).toBe(2);
    expect(svg).toContain('data-role="true"');
    expect(svg).toContain('data-role="estimate"');
  });

  it("identical grids give visually identical curves", () => {
    const t = parseGridCsv(grid1dCsv(1.0));
    const e = parseGridCsv(grid1dCsv(1.0));
    const svg = plotDensityOverlay(t, e);
    const points = [...svg.matchAll(/points="([^"]+)"/g)].map((m) => m[1]);
    expect(points).toHaveLength(2);
    expect(points[0]).toBe(points[1]);
  });

  it("renders 2-D side-by-side heatmaps with a shared scale", () => {
    const t = parseGridCsv(grid2dCsv(false));
    const e = parseGridCsv(grid2dCsv(true));
    const svg = plotDensityOverlay(t, e);
    expect(count(svg, "cell")).toBe(2 * 12 * 10);
    expect(count(svg, "scale-cell")).toBe(40);
    expect(svg).toContain(">true<");
    expect(svg).toContain(">estimate<");
  });

  it("rejects mismatched grids", () => {
    const t = parseGridCsv(grid1dCsv());
    const e = parseGridCsv(grid2dCsv());
    expect(() => plotDensityOverlay(t, e)).toThrow(SchemaError);
  });

  it("rejects malformed grid files", () => {
    expect(() => parseGridCsv("not,a,grid\n1,2,3\n")).toThrow(SchemaError);
  });
});
