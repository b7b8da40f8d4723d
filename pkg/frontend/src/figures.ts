/** The four figure builders: parsed tables in, finished rasters out. */
import { ColormapName, Rgb, colormap } from "./colormap";
import { DegreeSeries, ErrorCurve, Grid, TrajectoryGrid } from "./csv";
import { Raster } from "./raster";

export type Orientation = "origin-upper" | "origin-lower";

export interface FigureStyle {
  width: number;
  height: number;
  colormap: ColormapName;
  orientation: Orientation;
}

const BLACK: Rgb = [0, 0, 0];

const PALETTE: Rgb[] = [
  [0, 0, 0],
  [178, 24, 43],
  [33, 102, 172],
  [27, 120, 55],
  [230, 97, 1],
  [118, 42, 131],
];

/**
 * Dense matrix as pixels, origin at the upper-left corner: cell (0,0) is the
 * top-left block, rows grow downward.  Nearest-neighbour scaling, so aligned
 * output sizes reproduce cells exactly.
 */
export function pixelPicture(grid: Grid, style: FigureStyle): Raster {
  const raster = new Raster(style.width, style.height);
  let vmax = 0;
  for (const row of grid.values) for (const v of row) vmax = Math.max(vmax, v);
  if (vmax <= 0) return raster; // nothing above zero: all white by the value map
  for (let y = 0; y < style.height; y++) {
    const row = grid.values[Math.floor((y * grid.n) / style.height)];
    for (let x = 0; x < style.width; x++) {
      const v = row[Math.floor((x * grid.n) / style.width)];
      raster.set(x, y, colormap(style.colormap, v / vmax));
    }
  }
  return raster;
}

/**
 * Space-time heat map of the infected fraction: sample index on the x axis,
 * node index on the y axis (node 1 at the top unless origin-lower).
 */
export function infectionHeatmap(traj: TrajectoryGrid, style: FigureStyle): Raster {
  const raster = new Raster(style.width, style.height);
  let vmax = 0;
  for (const row of traj.infected) for (const v of row) vmax = Math.max(vmax, v);
  if (vmax <= 0) return raster;
  const steps = traj.times.length;
  for (let y = 0; y < style.height; y++) {
    const node = Math.floor((y * traj.nodes) / style.height);
    const j = style.orientation === "origin-lower" ? traj.nodes - 1 - node : node;
    for (let x = 0; x < style.width; x++) {
      const ti = Math.floor((x * steps) / style.width);
      raster.set(x, y, colormap(style.colormap, traj.infected[ti][j] / vmax));
    }
  }
  return raster;
}

interface Frame {
  x0: number;
  y0: number;
  x1: number;
  y1: number;
  sx: (v: number) => number;
  sy: (v: number) => number;
}

/** Axis frame with tick marks; returns data-to-pixel scales. */
function frame(raster: Raster, xDomain: [number, number], yDomain: [number, number]): Frame {
  const x0 = 48;
  const y0 = 12;
  const x1 = raster.width - 13;
  const y1 = raster.height - 37;
  raster.line(x0, y0, x0, y1, BLACK);
  raster.line(x0, y1, x1, y1, BLACK);
  raster.line(x1, y0, x1, y1, BLACK);
  raster.line(x0, y0, x1, y0, BLACK);
  for (let k = 0; k <= 4; k++) {
    const tx = Math.round(x0 + ((x1 - x0) * k) / 4);
    const ty = Math.round(y1 - ((y1 - y0) * k) / 4);
    raster.line(tx, y1, tx, y1 + 4, BLACK);
    raster.line(x0 - 4, ty, x0, ty, BLACK);
  }
  const spanOr1 = (lo: number, hi: number) => (hi > lo ? hi - lo : 1);
  const dx = spanOr1(xDomain[0], xDomain[1]);
  const dy = spanOr1(yDomain[0], yDomain[1]);
  return {
    x0,
    y0,
    x1,
    y1,
    sx: (v) => Math.round(x0 + ((v - xDomain[0]) / dx) * (x1 - x0)),
    sy: (v) => Math.round(y1 - ((v - yDomain[0]) / dy) * (y1 - y0)),
  };
}

function polyline(raster: Raster, f: Frame, xs: number[], ys: number[], rgb: Rgb): void {
  for (let k = 0; k + 1 < xs.length; k++) {
    raster.line(f.sx(xs[k]), f.sy(ys[k]), f.sx(xs[k + 1]), f.sy(ys[k + 1]), rgb);
  }
  for (let k = 0; k < xs.length; k++) raster.dot(f.sx(xs[k]), f.sy(ys[k]), rgb);
}

/** Degree profile d_j against node index j, one polyline per input file. */
export function degreePlot(seriesList: DegreeSeries[], style: FigureStyle): Raster {
  const raster = new Raster(style.width, style.height);
  let maxNodes = 1;
  let dmax = 0;
  for (const series of seriesList) {
    maxNodes = Math.max(maxNodes, series.degrees.length);
    for (const d of series.degrees) dmax = Math.max(dmax, d);
  }
  const f = frame(raster, [1, maxNodes], [0, dmax > 0 ? dmax : 1]);
  seriesList.forEach((series, k) => {
    const xs = series.degrees.map((_, j) => j + 1);
    polyline(raster, f, xs, series.degrees, PALETTE[k % PALETTE.length]);
  });
  return raster;
}

/**
 * Error against resolution, one polyline per curve.  Axes are log-log when
 * every error is positive (rates show up as slopes), linear otherwise.
 */
export function errorPlot(curves: ErrorCurve[], style: FigureStyle): Raster {
  const raster = new Raster(style.width, style.height);
  const logScale = curves.every((c) => c.errors.every((e) => e > 0));
  const tx = (n: number) => (logScale ? Math.log10(n) : n);
  const ty = (e: number) => (logScale ? Math.log10(e) : e);
  let xLo = Infinity;
  let xHi = -Infinity;
  let yLo = Infinity;
  let yHi = -Infinity;
  for (const curve of curves) {
    for (const n of curve.ns) {
      xLo = Math.min(xLo, tx(n));
      xHi = Math.max(xHi, tx(n));
    }
    for (const e of curve.errors) {
      yLo = Math.min(yLo, ty(e));
      yHi = Math.max(yHi, ty(e));
    }
  }
  const f = frame(raster, [xLo, xHi], [yLo, yHi]);
  curves.forEach((curve, k) => {
    polyline(raster, f, curve.ns.map(tx), curve.errors.map(ty), PALETTE[k % PALETTE.length]);
  });
  return raster;
}
