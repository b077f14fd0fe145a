import { basename } from "path";

import { renderChartSvg, Series } from "./chart.js";
import { SchemaError, configValue, numericColumn, readCsvTable, requireColumns,
         requireRows } from "./csv.js";
import { writePng } from "./render.js";

const NEEDED = ["t", "e_l2"];

export interface ReldiffOptions {
  csvs: string[];
  out: string;
  dpi?: number;
  logY?: boolean;
}

function loadCurve(path: string): Series {
  const table = readCsvTable(path);
  requireColumns(table, NEEDED);
  requireRows(table);
  const d = configValue(table, "d");
  const a = configValue(table, "a");
  const label = d !== null ? (a !== null ? `D=${d}, a=${a}` : `D=${d}`)
                           : basename(path, ".csv");
  // the t=0 row carries NaN (undefined while the reference norm is zero);
  // the chart drops non-finite points per series without resampling
  return { label, x: numericColumn(table, "t"), y: numericColumn(table, "e_l2") };
}

/** Relative-difference decay curves, one per comparison CSV. */
export function plotReldiff(opts: ReldiffOptions): void {
  if (opts.csvs.length === 0) {
    throw new SchemaError("need at least one comparison CSV");
  }
  const series = opts.csvs.map(loadCurve);
  const svg = renderChartSvg({
    title: "Relative difference between the models",
    xLabel: "t",
    yLabel: "relative L2 difference",
    series,
    dpi: opts.dpi,
    logY: opts.logY ?? false,
  });
  writePng(svg, opts.out);
}

const USAGE =
  "usage: plot-reldiff <comparison.csv> [more.csv ...] -o <out.png> [--dpi N] [--log]";

export function main(argv: string[]): number {
  const csvs: string[] = [];
  let out: string | null = null;
  let dpi: number | undefined;
  let logY = false;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "-o" || arg === "--out") {
      out = argv[++i];
    } else if (arg === "--dpi") {
      dpi = Number(argv[++i]);
    } else if (arg === "--log") {
      logY = true;
    } else if (arg === "-h" || arg === "--help") {
      console.log(USAGE);
      return 0;
    } else {
      csvs.push(arg);
    }
  }
  if (csvs.length === 0 || !out || (dpi !== undefined && !(dpi > 0))) {
    console.error(USAGE);
    return 2;
  }
  try {
    plotReldiff({ csvs, out, dpi, logY });
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`schema error: ${err.message}`);
      return 2;
    }
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
  return 0;
}
