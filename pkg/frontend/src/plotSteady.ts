import { renderChartSvg, Series } from "./chart.js";
import { SchemaError, numericColumn, readCsvTable, requireColumns, requireRows } from "./csv.js";
import { writePng } from "./render.js";

const NEEDED = ["t", "l2_tilde"];

export interface SteadyOptions {
  exclusionCsv: string;
  pointCsv: string;
  out: string;
  dpi?: number;
}

function loadCurve(path: string, name: string): Series {
  const table = readCsvTable(path);
  requireColumns(table, NEEDED);
  requireRows(table);
  const x = numericColumn(table, "t");
  const y = numericColumn(table, "l2_tilde");
  const plateau = y[y.length - 1];
  return { label: `${name} (final ${Number(plateau.toPrecision(5))})`, x, y };
}

/** Two-curve norm-versus-time figure from the paired steady-state CSVs. */
export function plotSteady(opts: SteadyOptions): void {
  const excl = loadCurve(opts.exclusionCsv, "spatial exclusion");
  const point = loadCurve(opts.pointCsv, "point source");
  const svg = renderChartSvg({
    title: "Approach to steady state on the shared domain",
    xLabel: "t",
    yLabel: "L2 norm over the punctured square",
    series: [excl, point],
    dpi: opts.dpi,
  });
  writePng(svg, opts.out);
}

const USAGE =
  "usage: plot-steady <exclusion.csv> <point.csv> -o <out.png> [--dpi N]";

export function main(argv: string[]): number {
  const positional: string[] = [];
  let out: string | null = null;
  let dpi: number | undefined;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "-o" || arg === "--out") {
      out = argv[++i];
    } else if (arg === "--dpi") {
      dpi = Number(argv[++i]);
    } else if (arg === "-h" || arg === "--help") {
      console.log(USAGE);
      return 0;
    } else {
      positional.push(arg);
    }
  }
  if (positional.length !== 2 || !out || (dpi !== undefined && !(dpi > 0))) {
    console.error(USAGE);
    return 2;
  }
  try {
    plotSteady({ exclusionCsv: positional[0], pointCsv: positional[1], out, dpi });
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
