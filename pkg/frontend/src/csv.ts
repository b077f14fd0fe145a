import { readFileSync } from "fs";
import Papa from "papaparse";

/** Raised when an input file does not carry the expected CSV schema. */
export class SchemaError extends Error {}

export interface Table {
  path: string;
  /** Leading `# ...` comment line (without the marker), if present. */
  comment: string | null;
  columns: string[];
  rows: Record<string, number | string>[];
}

/**
 * Read one of the simulator's CSV files: an optional `#` comment line,
 * a header row, then numeric rows.
 */
export function readCsvTable(path: string): Table {
  const raw = readFileSync(path, "utf8");
  const lines = raw.split(/\r?\n/);
  let comment: string | null = null;
  let start = 0;
  while (start < lines.length && lines[start].startsWith("#")) {
    if (comment === null) comment = lines[start].replace(/^#\s?/, "");
    start += 1;
  }
  const body = lines.slice(start).join("\n");
  const parsed = Papa.parse<Record<string, number | string>>(body, {
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    throw new SchemaError(`${path}: malformed CSV (${first.message})`);
  }
  const columns = parsed.meta.fields ?? [];
  if (columns.length === 0) {
    throw new SchemaError(`${path}: missing header row`);
  }
  return { path, comment, columns, rows: parsed.data };
}

/** Assert the named columns exist, reporting the first one missing. */
export function requireColumns(table: Table, needed: string[]): void {
  for (const column of needed) {
    if (!table.columns.includes(column)) {
      throw new SchemaError(`${table.path}: missing required column '${column}'`);
    }
  }
}

export function requireRows(table: Table): void {
  if (table.rows.length === 0) {
    throw new SchemaError(`${table.path}: no data rows`);
  }
}

/** Numeric values of a column; non-numeric entries become NaN. */
export function numericColumn(table: Table, name: string): number[] {
  return table.rows.map((row) => {
    const v = row[name];
    return typeof v === "number" ? v : Number(v);
  });
}

/** Look up `key=value` inside the recorded config comment line. */
export function configValue(table: Table, key: string): string | null {
  if (!table.comment) return null;
  for (const part of table.comment.split(/\s+/)) {
    const eq = part.indexOf("=");
    if (eq > 0 && part.slice(0, eq) === key) return part.slice(eq + 1);
  }
  return null;
}
