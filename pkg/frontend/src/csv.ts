/**
 * Reader for the result-CSV schema shared by every experiment kind:
 * a header row `kind,kernel,R,level,param,n,estimate,stderr,seed` optionally
 * followed by extra per-kind columns, then one row per parameter point.
 * Cells stay raw strings; figure code coerces the fields it needs through
 * the helpers below so parse failures carry file line numbers.
 */

import { readFileSync } from "node:fs";
import Papa from "papaparse";

export const BASE_COLUMNS = [
  "kind",
  "kernel",
  "R",
  "level",
  "param",
  "n",
  "estimate",
  "stderr",
  "seed",
] as const;

/** Input rejected because it does not match the declared schema. */
export class SchemaError extends Error {
  /** 1-based line number in the source file (the header is line 1). */
  readonly line?: number;

  constructor(message: string, line?: number) {
    super(line === undefined ? message : `${message} (row ${line})`);
    this.name = "SchemaError";
    this.line = line;
  }
}

export interface CsvRow {
  /** 1-based line number in the file; the header is line 1. */
  readonly line: number;
  readonly cells: Readonly<Record<string, string>>;
}

export interface CsvTable {
  readonly path: string;
  readonly columns: readonly string[];
  readonly rows: readonly CsvRow[];
}

export function readResultsCsv(path: string): CsvTable {
  const text = readFileSync(path, "utf-8");
  const parsed = Papa.parse<string[]>(text.replace(/\r\n/g, "\n"), {
    delimiter: ",",
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    const line = first.row === undefined ? undefined : first.row + 1;
    throw new SchemaError(`${path}: ${first.message}`, line);
  }
  const records = parsed.data;
  if (records.length === 0) {
    throw new SchemaError(`${path}: empty file, expected a header row`);
  }
  const columns = records[0];
  for (let i = 0; i < BASE_COLUMNS.length; i++) {
    if (columns[i] !== BASE_COLUMNS[i]) {
      throw new SchemaError(
        `${path}: header must start with ${BASE_COLUMNS.join(",")}; ` +
          `got ${columns.join(",")}`,
      );
    }
  }
  const rows: CsvRow[] = [];
  for (let i = 1; i < records.length; i++) {
    const record = records[i];
    const line = i + 1;
    if (record.length !== columns.length) {
      throw new SchemaError(
        `${path}: expected ${columns.length} cells, got ${record.length}`,
        line,
      );
    }
    const cells: Record<string, string> = {};
    for (let j = 0; j < columns.length; j++) {
      cells[columns[j]] = record[j];
    }
    rows.push({ line, cells });
  }
  return { path, columns, rows };
}

/** Parse a required finite float cell, reporting the row on failure. */
export function numberCell(table: CsvTable, row: CsvRow, column: string): number {
  const raw = row.cells[column];
  if (raw === undefined || raw === "") {
    throw new SchemaError(`${table.path}: column ${column} is empty`, row.line);
  }
  const value = Number(raw);
  if (!Number.isFinite(value)) {
    throw new SchemaError(
      `${table.path}: column ${column} is not a finite number: ${raw}`,
      row.line,
    );
  }
  return value;
}

/** Parse a required integer cell, reporting the row on failure. */
export function intCell(table: CsvTable, row: CsvRow, column: string): number {
  const raw = row.cells[column];
  if (raw === undefined || raw === "") {
    throw new SchemaError(`${table.path}: column ${column} is empty`, row.line);
  }
  if (!/^-?\d+$/.test(raw)) {
    throw new SchemaError(
      `${table.path}: column ${column} is not an integer: ${raw}`,
      row.line,
    );
  }
  return Number(raw);
}

/** Require a column to exist in the header. */
export function requireColumn(table: CsvTable, column: string): void {
  if (!table.columns.includes(column)) {
    throw new SchemaError(
      `${table.path}: column ${column} required, header has ${table.columns.join(",")}`,
    );
  }
}
