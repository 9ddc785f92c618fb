/**
 * Schemas and parsers for the experiment runner's output files:
 * the sweep results CSV, the bounds JSON, and gridded-density CSVs.
 * Files carry a config content hash; mixing hashes is an error.
 */

import Papa from "papaparse";
import { z } from "zod";

/** "inf" is the +infinity sentinel used across the output files. */
export function parseNumber(raw: string | number): number {
  if (typeof raw === "number") return raw;
  const t = raw.trim().toLowerCase();
  if (t === "inf" || t === "+inf" || t === "infinity") return Infinity;
  if (t === "-inf" || t === "-infinity") return -Infinity;
  if (t === "nan" || t === "") return NaN;
  const v = Number(t);
  if (Number.isNaN(v)) throw new SchemaError(`not a number: ${raw}`);
  return v;
}

export class SchemaError extends Error {}

/** A float column that may carry the nan/inf sentinels (error rows, flat bounds). */
const anyFloat = z.custom<number>((v) => typeof v === "number", "expected a number");

export const sweepRowSchema = z.object({
  config_hash: z.string().min(1),
  manifold: z.string(),
  density: z.string(),
  method: z.string(),
  sigma2: z.number().positive(),
  seed: z.number().int(),
  status: z.string(),
  ks: anyFloat,
  best_val_nll: anyFloat,
  sigma_lower_sq: anyFloat,
  sigma_lower: anyFloat,
  sigma_upper: anyFloat,
  wall_time_s: anyFloat,
  n_train: z.number().int(),
  iterations: z.number().int(),
  checkpoint: z.string(),
});

export type SweepRow = z.infer<typeof sweepRowSchema>;

export interface SweepTable {
  rows: SweepRow[];
  configHash: string;
}

const NUMERIC_COLUMNS = new Set([
  "sigma2", "seed", "ks", "best_val_nll", "sigma_lower_sq", "sigma_lower",
  "sigma_upper", "wall_time_s", "n_train", "iterations",
]);

export function parseSweepCsv(text: string): SweepTable {
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new SchemaError(`sweep CSV parse error: ${parsed.errors[0].message}`);
  }
  const rows: SweepRow[] = parsed.data.map((rec, i) => {
    const converted: Record<string, unknown> = {};
    for (const [key, value] of Object.entries(rec)) {
      converted[key] = NUMERIC_COLUMNS.has(key) ? parseNumber(value) : value;
    }
    const res = sweepRowSchema.safeParse(converted);
    if (!res.success) {
      throw new SchemaError(`sweep CSV row ${i + 1}: ${res.error.issues[0].message}`);
    }
    return res.data;
  });
  if (rows.length === 0) throw new SchemaError("sweep CSV has no rows");
  const hashes = new Set(rows.map((r) => r.config_hash));
  if (hashes.size > 1) {
    throw new SchemaError(`sweep CSV mixes config hashes: ${[...hashes].join(", ")}`);
  }
  return { rows, configHash: rows[0].config_hash };
}

export const boundsSchema = z.object({
  config_hash: z.string(),
  sigma_lower_sq: z.number(),
  sigma_lower_raw: z.number(),
  sigma_upper: z.union([z.number(), z.literal("inf")]),
  n_samples: z.number().int(),
  seed: z.number().int(),
});

export interface Bounds {
  configHash: string;
  lowerSq: number;
  lowerRaw: number;
  upper: number; // Infinity when the sentinel "inf" was stored
}

export function parseBoundsJson(text: string): Bounds {
  const res = boundsSchema.safeParse(JSON.parse(text));
  if (!res.success) throw new SchemaError(`bounds JSON: ${res.error.issues[0].message}`);
  const b = res.data;
  return {
    configHash: b.config_hash,
    lowerSq: b.sigma_lower_sq,
    lowerRaw: b.sigma_lower_raw,
    upper: b.sigma_upper === "inf" ? Infinity : b.sigma_upper,
  };
}

export const fomSchema = z.object({
  config_hash: z.string(),
  ks: z.number(),
  seed: z.number().int(),
  n_train: z.number().int(),
});

export function parseFomJson(text: string): { configHash: string; ks: number } {
  const res = fomSchema.safeParse(JSON.parse(text));
  if (!res.success) throw new SchemaError(`fom JSON: ${res.error.issues[0].message}`);
  return { configHash: res.data.config_hash, ks: res.data.ks };
}

export interface GriddedDensity {
  axes: number[][];
  values: number[][]; // always 2-D storage; 1-D grids have a single row
  d: 1 | 2;
  configHash: string;
}

/** Grid CSV: "# infdef-grid-v1 d=<d> config_hash=<h>", axis rows, then values row-major. */
export function parseGridCsv(text: string): GriddedDensity {
  const lines = text.trim().split(/\r?\n/);
  const head = lines[0];
  if (!head.startsWith("# infdef-grid-v1")) {
    throw new SchemaError("not an infdef grid CSV (missing header line)");
  }
  const dMatch = head.match(/d=(\d+)/);
  const hMatch = head.match(/config_hash=(\S+)/);
  if (!dMatch || !hMatch) throw new SchemaError("grid CSV header missing d= or config_hash=");
  const d = Number(dMatch[1]);
  if (d !== 1 && d !== 2) throw new SchemaError(`unsupported grid dimension ${d}`);
  const rows = lines.slice(1).map((ln) => ln.split(",").map(parseNumber));
  const axes = rows.slice(0, d);
  const values = rows.slice(d);
  if (d === 1 && (values.length !== 1 || values[0].length !== axes[0].length)) {
    throw new SchemaError("1-D grid values do not match axis length");
  }
  if (d === 2 && (values.length !== axes[0].length || values[0].length !== axes[1].length)) {
    throw new SchemaError("2-D grid values do not match axes shape");
  }
  return { axes, values, d: d as 1 | 2, configHash: hMatch[1] };
}

export function requireSameHash(...hashes: string[]): string {
  const distinct = new Set(hashes.filter((h) => h.length > 0));
  if (distinct.size > 1) {
    throw new SchemaError(`mixed config hashes: ${[...distinct].join(", ")}`);
  }
  return hashes[0] ?? "";
}
