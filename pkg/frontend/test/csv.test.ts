import { mkdtempSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { describe, expect, it } from "vitest";

import { SchemaError, configValue, numericColumn, readCsvTable, requireColumns,
         requireRows } from "../src/csv.js";

function writeTemp(name: string, content: string): string {
  const dir = mkdtempSync(join(tmpdir(), "csv-"));
  const path = join(dir, name);
  writeFileSync(path, content);
  return path;
}

const SAMPLE = `# mode=compare d=0.1 a=1 dt=0.040000000000000001
t,e_l2,abs_l2
0,nan,0
0.04,0.47,0.02
0.08,0.31,0.015
`;

describe("readCsvTable", () => {
  it("parses comment, header, and typed rows", () => {
    const table = readCsvTable(writeTemp("c.csv", SAMPLE));
    expect(table.comment).toContain("mode=compare");
    expect(table.columns).toEqual(["t", "e_l2", "abs_l2"]);
    expect(table.rows).toHaveLength(3);
    expect(table.rows[1].t).toBe(0.04);
  });

  it("handles files without a comment line", () => {
    const table = readCsvTable(writeTemp("n.csv", "t,v\n1,2\n"));
    expect(table.comment).toBeNull();
    expect(table.rows[0].v).toBe(2);
  });
});

describe("requireColumns", () => {
  it("names the missing column", () => {
    const table = readCsvTable(writeTemp("c.csv", SAMPLE));
    expect(() => requireColumns(table, ["t", "l2_tilde"])).toThrowError(
      /missing required column 'l2_tilde'/,
    );
  });

  it("passes when all columns exist", () => {
    const table = readCsvTable(writeTemp("c.csv", SAMPLE));
    expect(() => requireColumns(table, ["t", "e_l2"])).not.toThrow();
  });
});

describe("requireRows", () => {
  it("rejects empty tables", () => {
    const table = readCsvTable(writeTemp("e.csv", "t,e_l2\n"));
    expect(() => requireRows(table)).toThrow(SchemaError);
  });
});

describe("numericColumn", () => {
  it("turns nan strings into NaN values", () => {
    const table = readCsvTable(writeTemp("c.csv", SAMPLE));
    const e = numericColumn(table, "e_l2");
    expect(Number.isNaN(e[0])).toBe(true);
    expect(e[1]).toBeCloseTo(0.47);
  });
});

describe("configValue", () => {
  it("extracts recorded configuration entries", () => {
    const table = readCsvTable(writeTemp("c.csv", SAMPLE));
    expect(configValue(table, "d")).toBe("0.1");
    expect(configValue(table, "a")).toBe("1");
    expect(configValue(table, "missing")).toBeNull();
  });
});
