#!/usr/bin/env node
/**
 * Figure CLI over the experiment runner's output files.
 *
 *   infdef-plots plot-sweep   --in <run dir> --out fig.svg [--format svg|png]
 *   infdef-plots plot-density --in <run dir | true.csv,est.csv> --out fig.svg [--format svg|png]
 *
 * plot-sweep reads sweep.csv plus bounds.json and fom.json when present;
 * plot-density reads true_grid.csv and the first of est_grid.csv /
 * oracle_grid.csv / fom_grid.csv, or an explicit comma-separated pair.
 */

import fs from "node:fs";
import path from "node:path";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { plotDensityOverlay } from "./density.js";
import { parseBoundsJson, parseFomJson, parseGridCsv, parseSweepCsv } from "./schema.js";
import { plotSweep } from "./sweep.js";

async function writeFigure(svg: string, out: string, format: string): Promise<void> {
  if (format === "svg" || format === "both") {
    const target = format === "both" ? out.replace(/\.(png|svg)$/, "") + ".svg" : out;
    fs.writeFileSync(target, svg);
    console.log(target);
  }
  if (format === "png" || format === "both") {
    const target = format === "both" ? out.replace(/\.(png|svg)$/, "") + ".png" : out;
    let Resvg;
    try {
      ({ Resvg } = await import("@resvg/resvg-js"));
    } catch {
      console.error("png output needs the optional @resvg/resvg-js dependency; emit svg instead");
      process.exitCode = 2;
      return;
    }
    const png = new Resvg(svg, { fitTo: { mode: "width", value: 1440 } }).render().asPng();
    fs.writeFileSync(target, png);
    console.log(target);
  }
}

function readIfExists(p: string): string | null {
  return fs.existsSync(p) ? fs.readFileSync(p, "utf8") : null;
}

await yargs(hideBin(process.argv))
  .scriptName("infdef-plots")
  .command(
    "plot-sweep",
    "render KS-vs-sigma^2 curves with baseline and bound reference lines",
    (y) =>
      y
        .option("in", { type: "string", demandOption: true, describe: "run directory containing sweep.csv" })
        .option("out", { type: "string", demandOption: true })
        .option("format", { choices: ["svg", "png", "both"] as const, default: "svg" }),
    async (argv) => {
      const dir = argv.in;
      const sweepText = readIfExists(path.join(dir, "sweep.csv"));
      if (sweepText === null) throw new Error(`no sweep.csv in ${dir}`);
      const table = parseSweepCsv(sweepText);
      const boundsText = readIfExists(path.join(dir, "bounds.json"));
      const bounds = boundsText ? parseBoundsJson(boundsText) : null;
      const fomText = readIfExists(path.join(dir, "fom.json"));
      const fom = fomText ? parseFomJson(fomText).ks : null;
      const { svg, warnings } = plotSweep(table.rows, bounds, fom, {
        boundsHash: table.configHash,
      });
      for (const w of warnings) console.warn(`warning: ${w}`);
      await writeFigure(svg, argv.out, argv.format);
    },
  )
  .command(
    "plot-density",
    "render true-vs-estimated latent density (1-D overlay or 2-D heatmaps)",
    (y) =>
      y
        .option("in", { type: "string", demandOption: true, describe: "run directory or 'true.csv,est.csv'" })
        .option("out", { type: "string", demandOption: true })
        .option("format", { choices: ["svg", "png", "both"] as const, default: "svg" }),
    async (argv) => {
      let truePath: string;
      let estPath: string | undefined;
      if (argv.in.includes(",")) {
        [truePath, estPath] = argv.in.split(",", 2).map((s) => s.trim());
      } else {
        truePath = path.join(argv.in, "true_grid.csv");
        estPath = ["est_grid.csv", "oracle_grid.csv", "fom_grid.csv"]
          .map((f) => path.join(argv.in, f))
          .find((p) => fs.existsSync(p));
      }
      if (!estPath || !fs.existsSync(truePath) || !fs.existsSync(estPath)) {
        throw new Error(`could not locate a true/estimate grid pair under ${argv.in}`);
      }
      const svg = plotDensityOverlay(
        parseGridCsv(fs.readFileSync(truePath, "utf8")),
        parseGridCsv(fs.readFileSync(estPath, "utf8")),
      );
      await writeFigure(svg, argv.out, argv.format);
    },
  )
  .demandCommand(1)
  .strict()
  .fail((msg, err) => {
    console.error(msg ?? err?.message ?? "error");
    process.exit(2);
  })
  .parseAsync();
