/**
 * Figure-job runner: a job is a JSON file listing figures to render from
 * result CSVs and field dumps. Paths inside the job resolve relative to
 * the job file's directory; inputs are only ever read, outputs are only
 * ever written.
 */

import { existsSync, mkdirSync, readFileSync } from "node:fs";
import { dirname, resolve } from "node:path";
import { readResultsCsv } from "./csv.js";
import { readField } from "./field.js";
import { writePng } from "./png.js";
import { writeSvg } from "./svg.js";
import { renderCrossingFigure } from "./figures/crossing.js";
import { renderExcursion } from "./figures/excursion.js";
import { renderHeatmap } from "./figures/heatmap.js";
import { renderTrendFigure } from "./figures/trend.js";

export const FIGURE_KINDS = ["excursion", "crossing", "trend", "heatmap"] as const;
export type FigureKind = (typeof FIGURE_KINDS)[number];

/** Job file rejected before any figure is rendered. */
export class JobError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "JobError";
  }
}

interface FigureSpec {
  readonly kind: FigureKind;
  readonly out: string;
  readonly csv?: string;
  readonly field?: string;
  readonly level?: number;
  readonly scale?: number;
  readonly R?: number;
  readonly params?: readonly string[];
}

const INPUT_KEY: Record<FigureKind, "csv" | "field"> = {
  excursion: "field",
  crossing: "csv",
  trend: "csv",
  heatmap: "csv",
};

const OUTPUT_EXT: Record<FigureKind, string> = {
  excursion: ".png",
  crossing: ".svg",
  trend: ".svg",
  heatmap: ".png",
};

function asOptionalNumber(raw: unknown, where: string): number | undefined {
  if (raw === undefined) {
    return undefined;
  }
  if (typeof raw !== "number" || !Number.isFinite(raw)) {
    throw new JobError(`${where}: must be a finite number`);
  }
  return raw;
}

function parseFigure(raw: unknown, index: number, jobDir: string): FigureSpec {
  const where = `figures[${index}]`;
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new JobError(`${where}: must be an object`);
  }
  const fig = raw as Record<string, unknown>;
  const kind = fig.kind;
  if (typeof kind !== "string" || !(FIGURE_KINDS as readonly string[]).includes(kind)) {
    throw new JobError(
      `${where}.kind: must be one of ${FIGURE_KINDS.join(", ")}; got ${String(kind)}`,
    );
  }
  const figureKind = kind as FigureKind;
  const inputKey = INPUT_KEY[figureKind];
  const input = fig[inputKey];
  if (typeof input !== "string" || input === "") {
    throw new JobError(`${where}.${inputKey}: required for kind ${kind}`);
  }
  const inputPath = resolve(jobDir, input);
  if (!existsSync(inputPath)) {
    throw new JobError(`${where}.${inputKey}: no such file: ${inputPath}`);
  }
  const out = fig.out;
  if (typeof out !== "string" || out === "") {
    throw new JobError(`${where}.out: required`);
  }
  if (!out.endsWith(OUTPUT_EXT[figureKind])) {
    throw new JobError(
      `${where}.out: kind ${kind} writes ${OUTPUT_EXT[figureKind]} files, got ${out}`,
    );
  }
  const outPath = resolve(jobDir, out);
  if (outPath === inputPath) {
    throw new JobError(`${where}.out: must not overwrite the input file`);
  }
  let params: readonly string[] | undefined;
  if (fig.params !== undefined) {
    if (
      !Array.isArray(fig.params) ||
      fig.params.length === 0 ||
      fig.params.some((p) => typeof p !== "string")
    ) {
      throw new JobError(`${where}.params: must be a non-empty array of strings`);
    }
    params = fig.params as string[];
  }
  return {
    kind: figureKind,
    out: outPath,
    csv: inputKey === "csv" ? inputPath : undefined,
    field: inputKey === "field" ? inputPath : undefined,
    level: asOptionalNumber(fig.level, `${where}.level`),
    scale: asOptionalNumber(fig.scale, `${where}.scale`),
    R: asOptionalNumber(fig.R, `${where}.R`),
    params,
  };
}

export function parseJob(jobPath: string): FigureSpec[] {
  const abs = resolve(jobPath);
  if (!existsSync(abs)) {
    throw new JobError(`no such job file: ${abs}`);
  }
  let raw: unknown;
  try {
    raw = JSON.parse(readFileSync(abs, "utf-8"));
  } catch (err) {
    throw new JobError(`${abs}: not valid JSON: ${err}`);
  }
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    throw new JobError(`${abs}: job must be a JSON object`);
  }
  const figures = (raw as Record<string, unknown>).figures;
  if (!Array.isArray(figures) || figures.length === 0) {
    throw new JobError(`${abs}: figures must be a non-empty array`);
  }
  const jobDir = dirname(abs);
  return figures.map((fig, i) => parseFigure(fig, i, jobDir));
}

function renderFigure(spec: FigureSpec): void {
  mkdirSync(dirname(spec.out), { recursive: true });
  switch (spec.kind) {
    case "excursion": {
      const field = readField(spec.field!);
      writePng(spec.out, renderExcursion(field, { level: spec.level, scale: spec.scale }));
      return;
    }
    case "crossing": {
      writeSvg(spec.out, renderCrossingFigure(readResultsCsv(spec.csv!)));
      return;
    }
    case "trend": {
      writeSvg(spec.out, renderTrendFigure(readResultsCsv(spec.csv!), spec.params));
      return;
    }
    case "heatmap": {
      const raster = renderHeatmap(readResultsCsv(spec.csv!), {
        R: spec.R,
        scale: spec.scale,
      });
      writePng(spec.out, raster);
      return;
    }
  }
}

/** Validate then render every figure; returns the written output paths. */
export function runJob(jobPath: string): string[] {
  const specs = parseJob(jobPath);
  for (const spec of specs) {
    renderFigure(spec);
  }
  return specs.map((spec) => spec.out);
}
