/**
 * Crossing-probability curves: for each box size R in a crossing-curve
 * result CSV, plot the estimated left-right crossing probability against
 * the excursion level, one curve per R with +/- 1 stderr whiskers.
 */

import {
  type CsvTable,
  numberCell,
  SchemaError,
} from "../csv.js";
import { padDomain, SERIES_COLORS, SvgChart } from "../svg.js";

export interface CrossingPoint {
  readonly level: number;
  readonly estimate: number;
  readonly stderr: number;
}

export interface CrossingSeries {
  readonly R: number;
  readonly points: readonly CrossingPoint[];
}

/** Group p_cross rows by R, each series sorted by level. */
export function extractCrossingSeries(table: CsvTable): CrossingSeries[] {
  const byR = new Map<number, CrossingPoint[]>();
  for (const row of table.rows) {
    if (row.cells.param !== "p_cross") {
      continue;
    }
    const R = numberCell(table, row, "R");
    const point: CrossingPoint = {
      level: numberCell(table, row, "level"),
      estimate: numberCell(table, row, "estimate"),
      stderr: numberCell(table, row, "stderr"),
    };
    const bucket = byR.get(R);
    if (bucket === undefined) {
      byR.set(R, [point]);
    } else {
      bucket.push(point);
    }
  }
  if (byR.size === 0) {
    throw new SchemaError(`${table.path}: no p_cross rows found`);
  }
  return [...byR.entries()]
    .sort((a, b) => a[0] - b[0])
    .map(([R, points]) => ({
      R,
      points: points.slice().sort((a, b) => a.level - b.level),
    }));
}

export function renderCrossingFigure(
  table: CsvTable,
  width = 640,
  height = 440,
): SvgChart {
  const series = extractCrossingSeries(table);
  const levels = series.flatMap((s) => s.points.map((p) => p.level));
  const chart = new SvgChart(width, height);
  const xs = chart.xScale(...padDomain(Math.min(...levels), Math.max(...levels)));
  const ys = chart.yScale(0, 1);
  chart.title("Left-right crossing probability vs level");
  chart.axes(xs, ys, "level", "crossing probability");
  series.forEach((s, i) => {
    const color = SERIES_COLORS[i % SERIES_COLORS.length];
    for (const p of s.points) {
      const x = xs.map(p.level);
      chart.line(x, ys.map(p.estimate - p.stderr), x, ys.map(p.estimate + p.stderr), color);
    }
    chart.polyline(
      s.points.map((p) => [xs.map(p.level), ys.map(p.estimate)] as const),
      color,
    );
    for (const p of s.points) {
      chart.circle(xs.map(p.level), ys.map(p.estimate), 2.5, color);
    }
  });
  chart.legend(series.map((s, i) => [`R = ${s.R}`, SERIES_COLORS[i % SERIES_COLORS.length]]));
  return chart;
}
