/**
 * Pivot-location heatmap: pivot_count rows (with sx, sy cell columns) from
 * a threshold-stats run are binned onto the R x R grid and rendered as a
 * white-to-purple intensity image, upscaled by an integer factor.
 */

import {
  type CsvTable,
  intCell,
  numberCell,
  requireColumn,
  SchemaError,
} from "../csv.js";
import { Raster, type Rgb } from "../png.js";

export const RAMP_LOW: Rgb = [255, 255, 255];
export const RAMP_HIGH: Rgb = [138, 43, 226];

export interface HeatmapOptions {
  /** Grid side to select when the CSV holds several scales. */
  readonly R?: number;
  /** Integer pixel size of one grid cell. */
  readonly scale?: number;
}

export interface PivotGrid {
  readonly side: number;
  /** Row-major counts; entry at (x, y) is counts[y * side + x]. */
  readonly counts: Float64Array;
  readonly total: number;
}

export function extractPivotGrid(table: CsvTable, wantR?: number): PivotGrid {
  requireColumn(table, "sx");
  requireColumn(table, "sy");
  const sides = new Set<number>();
  for (const row of table.rows) {
    if (row.cells.param === "pivot_count") {
      sides.add(numberCell(table, row, "R"));
    }
  }
  if (sides.size === 0) {
    throw new SchemaError(`${table.path}: no pivot_count rows found`);
  }
  let side: number;
  if (wantR === undefined) {
    if (sides.size > 1) {
      throw new SchemaError(
        `${table.path}: pivot_count rows cover several scales ` +
          `(${[...sides].sort((a, b) => a - b).join(", ")}); pick one with the R option`,
      );
    }
    side = [...sides][0];
  } else {
    if (!sides.has(wantR)) {
      throw new SchemaError(
        `${table.path}: no pivot_count rows with R=${wantR}`,
      );
    }
    side = wantR;
  }
  if (!Number.isInteger(side) || side <= 0) {
    throw new SchemaError(`${table.path}: pivot grid side must be a positive integer`);
  }
  const counts = new Float64Array(side * side);
  let total = 0;
  for (const row of table.rows) {
    if (row.cells.param !== "pivot_count" || numberCell(table, row, "R") !== side) {
      continue;
    }
    const sx = intCell(table, row, "sx");
    const sy = intCell(table, row, "sy");
    if (sx < 0 || sx >= side || sy < 0 || sy >= side) {
      throw new SchemaError(
        `${table.path}: pivot cell (${sx}, ${sy}) outside the ${side}x${side} grid`,
        row.line,
      );
    }
    const count = intCell(table, row, "estimate");
    if (count < 0) {
      throw new SchemaError(`${table.path}: negative pivot count`, row.line);
    }
    counts[sy * side + sx] += count;
    total += count;
  }
  return { side, counts, total };
}

function rampColor(t: number): Rgb {
  const mix = (a: number, b: number) => Math.round(a + (b - a) * t);
  return [
    mix(RAMP_LOW[0], RAMP_HIGH[0]),
    mix(RAMP_LOW[1], RAMP_HIGH[1]),
    mix(RAMP_LOW[2], RAMP_HIGH[2]),
  ];
}

export function renderHeatmap(table: CsvTable, options: HeatmapOptions = {}): Raster {
  const scale = options.scale ?? 1;
  if (!Number.isInteger(scale) || scale < 1) {
    throw new Error(`heatmap scale must be a positive integer, got ${scale}`);
  }
  const grid = extractPivotGrid(table, options.R);
  const peak = Math.max(1, ...grid.counts);
  const raster = new Raster(grid.side * scale, grid.side * scale);
  for (let y = 0; y < grid.side; y++) {
    // Grid row 0 sits at the bottom of the image.
    const py = (grid.side - 1 - y) * scale;
    for (let x = 0; x < grid.side; x++) {
      const t = grid.counts[y * grid.side + x] / peak;
      raster.fillRect(x * scale, py, scale, scale, rampColor(t));
    }
  }
  return raster;
}
