/**
 * Minimal RGBA raster with deterministic PNG encoding via pngjs.
 */

import { writeFileSync, readFileSync } from "node:fs";
import { PNG } from "pngjs";

export type Rgb = readonly [number, number, number];

export class Raster {
  readonly width: number;
  readonly height: number;
  readonly data: Uint8Array;

  constructor(width: number, height: number, fill: Rgb = [255, 255, 255]) {
    if (!Number.isInteger(width) || width <= 0 || !Number.isInteger(height) || height <= 0) {
      throw new Error(`raster size must be positive integers, got ${width}x${height}`);
    }
    this.width = width;
    this.height = height;
    this.data = new Uint8Array(width * height * 4);
    for (let i = 0; i < width * height; i++) {
      this.data[4 * i] = fill[0];
      this.data[4 * i + 1] = fill[1];
      this.data[4 * i + 2] = fill[2];
      this.data[4 * i + 3] = 255;
    }
  }

  set(x: number, y: number, color: Rgb): void {
    const i = 4 * (y * this.width + x);
    this.data[i] = color[0];
    this.data[i + 1] = color[1];
    this.data[i + 2] = color[2];
    this.data[i + 3] = 255;
  }

  get(x: number, y: number): Rgb {
    const i = 4 * (y * this.width + x);
    return [this.data[i], this.data[i + 1], this.data[i + 2]];
  }

  /** Fill the axis-aligned block [x0, x0+w) x [y0, y0+h), clipped to bounds. */
  fillRect(x0: number, y0: number, w: number, h: number, color: Rgb): void {
    const xEnd = Math.min(this.width, x0 + w);
    const yEnd = Math.min(this.height, y0 + h);
    for (let y = Math.max(0, y0); y < yEnd; y++) {
      for (let x = Math.max(0, x0); x < xEnd; x++) {
        this.set(x, y, color);
      }
    }
  }
}

export function writePng(path: string, raster: Raster): void {
  const png = new PNG({ width: raster.width, height: raster.height });
  Buffer.from(raster.data).copy(png.data);
  writeFileSync(path, PNG.sync.write(png, { deflateLevel: 9 }));
}

export function readPng(path: string): Raster {
  const png = PNG.sync.read(readFileSync(path));
  const raster = new Raster(png.width, png.height);
  png.data.copy(Buffer.from(raster.data.buffer));
  return raster;
}
