/**
 * Reader for field dump files: a single JSON header line with keys
 * kernel, nx, ny, sampler, seed, spacing, then a newline, then
 * nx*ny little-endian float64 values in row-major order (y rows, x columns).
 */

import { readFileSync } from "node:fs";
import { SchemaError } from "./csv.js";

export interface Field {
  readonly nx: number;
  readonly ny: number;
  readonly spacing: number;
  readonly kernel: string;
  readonly sampler: string;
  readonly seed: number;
  /** Row-major values; entry at (x, y) is values[y * nx + x]. */
  readonly values: Float64Array;
}

export function fieldValue(field: Field, x: number, y: number): number {
  return field.values[y * field.nx + x];
}

export function readField(path: string): Field {
  const buf = readFileSync(path);
  const nl = buf.indexOf(0x0a);
  if (nl < 0) {
    throw new SchemaError(`${path}: missing newline after field header`);
  }
  let header: unknown;
  try {
    header = JSON.parse(buf.subarray(0, nl).toString("utf-8"));
  } catch (err) {
    throw new SchemaError(`${path}: field header is not valid JSON: ${err}`);
  }
  if (typeof header !== "object" || header === null) {
    throw new SchemaError(`${path}: field header must be a JSON object`);
  }
  const h = header as Record<string, unknown>;
  const nx = h.nx;
  const ny = h.ny;
  const spacing = h.spacing;
  if (
    typeof nx !== "number" || !Number.isInteger(nx) || nx <= 0 ||
    typeof ny !== "number" || !Number.isInteger(ny) || ny <= 0
  ) {
    throw new SchemaError(`${path}: field header needs positive integer nx, ny`);
  }
  if (typeof spacing !== "number" || !(spacing > 0)) {
    throw new SchemaError(`${path}: field header needs positive spacing`);
  }
  const payload = buf.subarray(nl + 1);
  const expected = nx * ny * 8;
  if (payload.length !== expected) {
    throw new SchemaError(
      `${path}: field payload is ${payload.length} bytes, expected ${expected}`,
    );
  }
  const values = new Float64Array(nx * ny);
  const view = new DataView(payload.buffer, payload.byteOffset, payload.length);
  for (let i = 0; i < values.length; i++) {
    values[i] = view.getFloat64(i * 8, true);
  }
  return {
    nx,
    ny,
    spacing,
    kernel: typeof h.kernel === "string" ? h.kernel : "",
    sampler: typeof h.sampler === "string" ? h.sampler : "",
    seed: typeof h.seed === "number" ? h.seed : 0,
    values,
  };
}
