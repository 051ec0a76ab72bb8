import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";

export const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "fixtures");

export function tempDir(prefix: string): string {
  return mkdtempSync(join(tmpdir(), `${prefix}-`));
}

/** Write a field dump: JSON header line + little-endian float64 payload. */
export function writeFieldFile(
  path: string,
  nx: number,
  ny: number,
  values: readonly number[],
  spacing = 1.0,
): void {
  if (values.length !== nx * ny) {
    throw new Error(`need ${nx * ny} values, got ${values.length}`);
  }
  const header = JSON.stringify({
    kernel: "test",
    nx,
    ny,
    sampler: "manual",
    seed: 0,
    spacing,
  });
  const payload = Buffer.alloc(nx * ny * 8);
  for (let i = 0; i < values.length; i++) {
    payload.writeDoubleLE(values[i], i * 8);
  }
  writeFileSync(path, Buffer.concat([Buffer.from(header + "\n", "utf-8"), payload]));
}
