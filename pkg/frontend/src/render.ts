/**
 * Render jobs: figure kind + input CSVs + output PNG + style.
 *
 * Inputs are only ever read, never written; rendering the same job twice
 * produces byte-identical output.
 */
import * as fs from "node:fs";
import * as path from "node:path";
import { ColormapName, COLORMAP_NAMES } from "./colormap";
import { parseDegrees, parseErrors, parseGrid, parseTrajectory } from "./csv";
import { degreePlot, errorPlot, FigureStyle, infectionHeatmap, Orientation, pixelPicture } from "./figures";

export class UsageError extends Error {}

export const FIGURE_KINDS = ["pixel_picture", "infection_heatmap", "degree_plot", "error_plot"] as const;
export type FigureKind = (typeof FIGURE_KINDS)[number];

export const ORIENTATIONS: Orientation[] = ["origin-upper", "origin-lower"];

export interface RenderStyle {
  width?: number;
  height?: number;
  colormap?: ColormapName;
  orientation?: Orientation;
}

export interface RenderJob {
  kind: FigureKind;
  inputs: string[];
  out: string;
  style?: RenderStyle;
}

/** Matrix kinds come out square by default; curve kinds get a wider frame. */
const DEFAULT_SIZE: Record<FigureKind, [number, number]> = {
  pixel_picture: [512, 512],
  infection_heatmap: [512, 512],
  degree_plot: [640, 480],
  error_plot: [640, 480],
};

function checkDimension(name: string, value: number | undefined, fallback: number): number {
  if (value === undefined) return fallback;
  if (!Number.isInteger(value) || value < 8) {
    throw new UsageError(`--${name} must be an integer >= 8, got ${value}`);
  }
  return value;
}

function resolveStyle(job: RenderJob): FigureStyle {
  const style = job.style ?? {};
  const [dw, dh] = DEFAULT_SIZE[job.kind];
  if (style.colormap !== undefined && !COLORMAP_NAMES.includes(style.colormap)) {
    throw new UsageError(`--colormap must be one of ${COLORMAP_NAMES.join(", ")}`);
  }
  if (style.orientation !== undefined && !ORIENTATIONS.includes(style.orientation)) {
    throw new UsageError(`--orientation must be one of ${ORIENTATIONS.join(", ")}`);
  }
  if (job.kind === "pixel_picture" && style.orientation === "origin-lower") {
    throw new UsageError("pixel pictures fix the origin at the upper-left corner");
  }
  return {
    width: checkDimension("width", style.width, dw),
    height: checkDimension("height", style.height, dh),
    colormap: style.colormap ?? "gray",
    orientation: style.orientation ?? "origin-upper",
  };
}

/** Parse the inputs, draw the figure, and write the PNG; returns its size. */
export function render(job: RenderJob): { width: number; height: number } {
  if (!FIGURE_KINDS.includes(job.kind)) {
    throw new UsageError(`unknown figure kind '${job.kind}'`);
  }
  if (job.inputs.length === 0) {
    throw new UsageError("at least one --in file is required");
  }
  if ((job.kind === "pixel_picture" || job.kind === "infection_heatmap") && job.inputs.length !== 1) {
    throw new UsageError(`${job.kind} takes exactly one --in file`);
  }
  const style = resolveStyle(job);

  let raster;
  switch (job.kind) {
    case "pixel_picture":
      raster = pixelPicture(parseGrid(job.inputs[0]), style);
      break;
    case "infection_heatmap":
      raster = infectionHeatmap(parseTrajectory(job.inputs[0]), style);
      break;
    case "degree_plot":
      raster = degreePlot(job.inputs.map(parseDegrees), style);
      break;
    case "error_plot":
      raster = errorPlot(job.inputs.flatMap(parseErrors), style);
      break;
  }

  fs.mkdirSync(path.dirname(path.resolve(job.out)), { recursive: true });
  fs.writeFileSync(job.out, raster.encode());
  return { width: style.width, height: style.height };
}
