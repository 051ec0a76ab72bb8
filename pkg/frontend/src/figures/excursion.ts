/**
 * Excursion-set image for a dumped field: cells where the field value is
 * >= -level are active and drawn black, the rest white, and every active
 * component touching the left edge is drawn in the highlight color. A
 * constant positive field at level 0 therefore renders as one highlighted
 * component covering the whole frame.
 */

import type { Field } from "../field.js";
import { Raster, type Rgb } from "../png.js";

export const ACTIVE_COLOR: Rgb = [0, 0, 0];
export const INACTIVE_COLOR: Rgb = [255, 255, 255];
export const HIGHLIGHT_COLOR: Rgb = [138, 43, 226];

export interface ExcursionOptions {
  readonly level?: number;
  /** Integer pixel size of one field cell. */
  readonly scale?: number;
}

const enum CellState {
  Inactive = 0,
  Active = 1,
  Highlight = 2,
}

/**
 * Classify each cell: inactive, active, or active and 4-connected to the
 * left edge.
 */
export function classifyCells(field: Field, level: number): Uint8Array {
  const { nx, ny, values } = field;
  const state = new Uint8Array(nx * ny);
  for (let i = 0; i < values.length; i++) {
    state[i] = values[i] >= -level ? CellState.Active : CellState.Inactive;
  }
  // Flood from every active cell on the left edge (4-connectivity).
  const queue: number[] = [];
  for (let y = 0; y < ny; y++) {
    const i = y * nx;
    if (state[i] === CellState.Active) {
      state[i] = CellState.Highlight;
      queue.push(i);
    }
  }
  while (queue.length > 0) {
    const i = queue.pop()!;
    const x = i % nx;
    const y = (i - x) / nx;
    if (x > 0 && state[i - 1] === CellState.Active) {
      state[i - 1] = CellState.Highlight;
      queue.push(i - 1);
    }
    if (x + 1 < nx && state[i + 1] === CellState.Active) {
      state[i + 1] = CellState.Highlight;
      queue.push(i + 1);
    }
    if (y > 0 && state[i - nx] === CellState.Active) {
      state[i - nx] = CellState.Highlight;
      queue.push(i - nx);
    }
    if (y + 1 < ny && state[i + nx] === CellState.Active) {
      state[i + nx] = CellState.Highlight;
      queue.push(i + nx);
    }
  }
  return state;
}

export function renderExcursion(field: Field, options: ExcursionOptions = {}): Raster {
  const level = options.level ?? 0;
  const scale = options.scale ?? 1;
  if (!Number.isFinite(level)) {
    throw new Error(`excursion level must be finite, got ${level}`);
  }
  if (!Number.isInteger(scale) || scale < 1) {
    throw new Error(`excursion scale must be a positive integer, got ${scale}`);
  }
  const state = classifyCells(field, level);
  const raster = new Raster(field.nx * scale, field.ny * scale);
  for (let y = 0; y < field.ny; y++) {
    // Field row 0 sits at the bottom of the image.
    const py = (field.ny - 1 - y) * scale;
    for (let x = 0; x < field.nx; x++) {
      const s = state[y * field.nx + x];
      const color =
        s === CellState.Highlight
          ? HIGHLIGHT_COLOR
          : s === CellState.Active
            ? ACTIVE_COLOR
            : INACTIVE_COLOR;
      raster.fillRect(x * scale, py, scale, scale, color);
    }
  }
  return raster;
}
