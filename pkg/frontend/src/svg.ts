/**
 * Small deterministic SVG chart builder: fixed-precision coordinates,
 * explicit ordering, no timestamps, so identical inputs give identical bytes.
 */

import { writeFileSync } from "node:fs";

export interface Margin {
  readonly top: number;
  readonly right: number;
  readonly bottom: number;
  readonly left: number;
}

export const DEFAULT_MARGIN: Margin = { top: 36, right: 24, bottom: 48, left: 64 };

/** Color cycle for data series, chosen for contrast on white. */
export const SERIES_COLORS = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#17becf",
  "#8c564b",
  "#e377c2",
] as const;

export function fmt(value: number): string {
  const rounded = Number(value.toFixed(2));
  return Object.is(rounded, -0) ? "0" : String(rounded);
}

function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** Affine map from a data interval onto a pixel interval. */
export class LinearScale {
  constructor(
    readonly d0: number,
    readonly d1: number,
    readonly p0: number,
    readonly p1: number,
  ) {
    if (!(d1 > d0)) {
      throw new Error(`scale domain must be increasing, got [${d0}, ${d1}]`);
    }
  }

  map(value: number): number {
    return this.p0 + ((value - this.d0) / (this.d1 - this.d0)) * (this.p1 - this.p0);
  }

  /** Round tick positions covering the domain, at most `count + 1` of them. */
  ticks(count = 5): number[] {
    const span = this.d1 - this.d0;
    const rawStep = span / count;
    const power = Math.pow(10, Math.floor(Math.log10(rawStep)));
    const candidates = [1, 2, 5, 10].map((m) => m * power);
    const step = candidates.find((c) => c >= rawStep) ?? candidates[3];
    const start = Math.ceil(this.d0 / step) * step;
    const out: number[] = [];
    for (let v = start; v <= this.d1 + 1e-9 * span; v += step) {
      out.push(Number(v.toPrecision(12)));
    }
    return out;
  }
}

/** Pad a data range so points do not sit on the chart frame. */
export function padDomain(lo: number, hi: number, frac = 0.05): [number, number] {
  if (lo === hi) {
    const pad = lo === 0 ? 1 : Math.abs(lo) * 0.5;
    return [lo - pad, hi + pad];
  }
  const pad = (hi - lo) * frac;
  return [lo - pad, hi + pad];
}

export class SvgChart {
  private readonly parts: string[] = [];

  constructor(
    readonly width: number,
    readonly height: number,
    readonly margin: Margin = DEFAULT_MARGIN,
  ) {
    this.parts.push(
      `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
        `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`,
      `<rect width="${width}" height="${height}" fill="#ffffff"/>`,
    );
  }

  get plotLeft(): number {
    return this.margin.left;
  }

  get plotRight(): number {
    return this.width - this.margin.right;
  }

  get plotTop(): number {
    return this.margin.top;
  }

  get plotBottom(): number {
    return this.height - this.margin.bottom;
  }

  xScale(d0: number, d1: number): LinearScale {
    return new LinearScale(d0, d1, this.plotLeft, this.plotRight);
  }

  yScale(d0: number, d1: number): LinearScale {
    // SVG y grows downward, so the domain maps onto [bottom, top].
    return new LinearScale(d0, d1, this.plotBottom, this.plotTop);
  }

  title(text: string): void {
    const x = fmt((this.plotLeft + this.plotRight) / 2);
    this.parts.push(
      `<text x="${x}" y="${fmt(this.margin.top - 14)}" text-anchor="middle" ` +
        `font-size="15">${escapeXml(text)}</text>`,
    );
  }

  axes(xs: LinearScale, ys: LinearScale, xLabel: string, yLabel: string): void {
    const { plotLeft: l, plotRight: r, plotTop: t, plotBottom: b } = this;
    this.parts.push(
      `<rect x="${l}" y="${t}" width="${r - l}" height="${b - t}" ` +
        `fill="none" stroke="#000000"/>`,
    );
    for (const v of xs.ticks()) {
      const x = fmt(xs.map(v));
      this.parts.push(
        `<line x1="${x}" y1="${b}" x2="${x}" y2="${b + 5}" stroke="#000000"/>`,
        `<text x="${x}" y="${b + 18}" text-anchor="middle" font-size="11">` +
          `${formatTick(v)}</text>`,
      );
    }
    for (const v of ys.ticks()) {
      const y = fmt(ys.map(v));
      this.parts.push(
        `<line x1="${l - 5}" y1="${y}" x2="${l}" y2="${y}" stroke="#000000"/>`,
        `<text x="${l - 8}" y="${y}" text-anchor="end" dominant-baseline="middle" ` +
          `font-size="11">${formatTick(v)}</text>`,
      );
    }
    const xc = fmt((l + r) / 2);
    const yc = fmt((t + b) / 2);
    this.parts.push(
      `<text x="${xc}" y="${this.height - 10}" text-anchor="middle" font-size="13">` +
        `${escapeXml(xLabel)}</text>`,
      `<text x="14" y="${yc}" text-anchor="middle" font-size="13" ` +
        `transform="rotate(-90 14 ${yc})">${escapeXml(yLabel)}</text>`,
    );
  }

  polyline(points: ReadonlyArray<readonly [number, number]>, color: string): void {
    const coords = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.parts.push(
      `<polyline points="${coords}" fill="none" stroke="${color}" stroke-width="1.5"/>`,
    );
  }

  circle(x: number, y: number, radius: number, color: string): void {
    this.parts.push(
      `<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${radius}" fill="${color}"/>`,
    );
  }

  line(x1: number, y1: number, x2: number, y2: number, color: string): void {
    this.parts.push(
      `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" ` +
        `stroke="${color}"/>`,
    );
  }

  legend(entries: ReadonlyArray<readonly [string, string]>): void {
    const x = this.plotRight - 130;
    let y = this.plotTop + 14;
    for (const [label, color] of entries) {
      this.parts.push(
        `<line x1="${x}" y1="${y}" x2="${x + 22}" y2="${y}" stroke="${color}" ` +
          `stroke-width="1.5"/>`,
        `<text x="${x + 28}" y="${y}" dominant-baseline="middle" font-size="11">` +
          `${escapeXml(label)}</text>`,
      );
      y += 16;
    }
  }

  render(): string {
    return this.parts.join("\n") + "\n</svg>\n";
  }
}

function formatTick(value: number): string {
  if (value !== 0 && (Math.abs(value) >= 1e5 || Math.abs(value) < 1e-3)) {
    return value.toExponential(1);
  }
  const text = String(Number(value.toPrecision(6)));
  return text;
}

export function writeSvg(path: string, chart: SvgChart): void {
  writeFileSync(path, chart.render(), "utf-8");
}
