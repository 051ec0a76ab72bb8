export {
  BASE_COLUMNS,
  SchemaError,
  readResultsCsv,
  numberCell,
  intCell,
  requireColumn,
  type CsvRow,
  type CsvTable,
} from "./csv.js";
export { readField, fieldValue, type Field } from "./field.js";
export { Raster, writePng, readPng, type Rgb } from "./png.js";
export { SvgChart, LinearScale, writeSvg, padDomain, SERIES_COLORS } from "./svg.js";
export {
  renderExcursion,
  classifyCells,
  ACTIVE_COLOR,
  INACTIVE_COLOR,
  HIGHLIGHT_COLOR,
  type ExcursionOptions,
} from "./figures/excursion.js";
export {
  renderCrossingFigure,
  extractCrossingSeries,
  type CrossingPoint,
  type CrossingSeries,
} from "./figures/crossing.js";
export {
  renderTrendFigure,
  extractTrendSeries,
  DEFAULT_TREND_PARAMS,
  type TrendPoint,
  type TrendSeries,
} from "./figures/trend.js";
export {
  renderHeatmap,
  extractPivotGrid,
  RAMP_LOW,
  RAMP_HIGH,
  type HeatmapOptions,
  type PivotGrid,
} from "./figures/heatmap.js";
export { runJob, parseJob, JobError, FIGURE_KINDS, type FigureKind } from "./plot.js";
