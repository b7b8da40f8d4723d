/**
 * Parsers for the simulator CLI's CSV artifacts.
 *
 * Four shapes are understood, one per figure kind:
 *
 *   trajectory  t,j,s,i,r               (simulate)
 *   errors      scheme,n,norm,sup_error (converge)
 *   degrees     j,d                     (generate)
 *   grid        leading size line, then a dense square matrix (generate)
 *
 * Any mismatch raises SchemaError naming the offending column; a file
 * without data rows is reported as empty input.
 */
import * as fs from "node:fs";
import * as path from "node:path";
import Papa from "papaparse";

export class SchemaError extends Error {}

export interface TrajectoryGrid {
  /** distinct sample times, ascending */
  times: number[];
  nodes: number;
  /** infected fraction, indexed [timeIndex][node - 1] */
  infected: number[][];
}

export interface DegreeSeries {
  label: string;
  /** weighted degree of node j at index j - 1 */
  degrees: number[];
}

export interface ErrorCurve {
  label: string;
  ns: number[];
  errors: number[];
}

export interface Grid {
  n: number;
  values: number[][];
}

type Row = Record<string, string | undefined>;

function readText(file: string): string {
  const text = fs.readFileSync(file, "utf-8");
  if (text.trim() === "") throw new SchemaError(`${file}: empty input`);
  return text;
}

function parseRows(file: string, columns: string[]): Row[] {
  const parsed = Papa.parse<Row>(readText(file), { header: true, skipEmptyLines: true });
  const fields = (parsed.meta.fields ?? []).filter((f) => f !== "");
  if (fields.join(",") !== columns.join(",")) {
    throw new SchemaError(
      `${file}: expected columns ${columns.join(",")}, found ${fields.join(",") || "none"}`
    );
  }
  if (parsed.data.length === 0) throw new SchemaError(`${file}: empty input`);
  parsed.data.forEach((row, k) => {
    if ("__parsed_extra" in row) {
      throw new SchemaError(`${file}: data row ${k + 1} has more values than columns`);
    }
  });
  return parsed.data;
}

function numberAt(file: string, row: Row, column: string, rowIndex: number): number {
  const raw = row[column];
  const value = raw === undefined || raw.trim() === "" ? NaN : Number(raw);
  if (!Number.isFinite(value)) {
    throw new SchemaError(
      `${file}: column '${column}' has non-numeric value '${raw ?? ""}' (data row ${rowIndex + 1})`
    );
  }
  return value;
}

function indexAt(file: string, row: Row, column: string, rowIndex: number): number {
  const value = numberAt(file, row, column, rowIndex);
  if (!Number.isInteger(value) || value < 1) {
    throw new SchemaError(
      `${file}: column '${column}' must be a positive integer, got '${row[column]}' (data row ${rowIndex + 1})`
    );
  }
  return value;
}

/** trajectory CSV (t,j,s,i,r) -> dense space-time grid of the infected fraction */
export function parseTrajectory(file: string): TrajectoryGrid {
  const rows = parseRows(file, ["t", "j", "s", "i", "r"]);
  const byTime = new Map<number, Map<number, number>>();
  let nodes = 0;
  rows.forEach((row, k) => {
    const t = numberAt(file, row, "t", k);
    const j = indexAt(file, row, "j", k);
    numberAt(file, row, "s", k);
    numberAt(file, row, "r", k);
    const infected = numberAt(file, row, "i", k);
    let slice = byTime.get(t);
    if (slice === undefined) byTime.set(t, (slice = new Map()));
    slice.set(j, infected);
    if (j > nodes) nodes = j;
  });
  const times = [...byTime.keys()].sort((a, b) => a - b);
  const infected = times.map((t) => {
    const slice = byTime.get(t)!;
    const rowValues = new Array<number>(nodes);
    for (let j = 1; j <= nodes; j++) {
      const value = slice.get(j);
      if (value === undefined) {
        throw new SchemaError(`${file}: column 'j' does not cover 1..${nodes} at t=${t}`);
      }
      rowValues[j - 1] = value;
    }
    return rowValues;
  });
  return { times, nodes, infected };
}

/** degrees CSV (j,d) -> degree profile ordered by node index */
export function parseDegrees(file: string): DegreeSeries {
  const rows = parseRows(file, ["j", "d"]);
  const degrees = new Array<number>(rows.length).fill(NaN);
  rows.forEach((row, k) => {
    const j = indexAt(file, row, "j", k);
    const d = numberAt(file, row, "d", k);
    if (j > rows.length || !Number.isNaN(degrees[j - 1])) {
      throw new SchemaError(`${file}: column 'j' must enumerate 1..${rows.length} exactly once`);
    }
    degrees[j - 1] = d;
  });
  return { label: path.basename(file), degrees };
}

/** errors CSV (scheme,n,norm,sup_error) -> one curve per scheme/norm pair */
export function parseErrors(file: string): ErrorCurve[] {
  const rows = parseRows(file, ["scheme", "n", "norm", "sup_error"]);
  const curves = new Map<string, { ns: number[]; errors: number[] }>();
  rows.forEach((row, k) => {
    const scheme = row.scheme ?? "";
    if (scheme.trim() === "") {
      throw new SchemaError(`${file}: column 'scheme' is empty (data row ${k + 1})`);
    }
    const n = indexAt(file, row, "n", k);
    const err = numberAt(file, row, "sup_error", k);
    if (err < 0) {
      throw new SchemaError(
        `${file}: column 'sup_error' must be nonnegative, got '${row.sup_error}' (data row ${k + 1})`
      );
    }
    const label = `${scheme} (${row.norm ?? ""})`;
    let curve = curves.get(label);
    if (curve === undefined) curves.set(label, (curve = { ns: [], errors: [] }));
    curve.ns.push(n);
    curve.errors.push(err);
  });
  return [...curves.entries()].map(([label, curve]) => {
    const order = curve.ns.map((_, k) => k).sort((a, b) => curve.ns[a] - curve.ns[b]);
    return {
      label,
      ns: order.map((k) => curve.ns[k]),
      errors: order.map((k) => curve.errors[k]),
    };
  });
}

/** dense step-kernel CSV: a single size line n, then n rows of n values */
export function parseGrid(file: string): Grid {
  const parsed = Papa.parse<string[]>(readText(file), { header: false, skipEmptyLines: true });
  const lines = parsed.data;
  const head = lines[0] ?? [];
  const n = Number(head[0]);
  if (head.length !== 1 || !Number.isInteger(n) || n < 1) {
    throw new SchemaError(
      `${file}: first line must be a single positive integer size, got '${head.join(",")}'`
    );
  }
  if (lines.length - 1 !== n) {
    throw new SchemaError(`${file}: expected ${n} matrix rows, found ${lines.length - 1}`);
  }
  const values = lines.slice(1).map((cells, r) => {
    if (cells.length !== n) {
      throw new SchemaError(`${file}: row ${r + 1} has ${cells.length} values, expected ${n}`);
    }
    return cells.map((cell, c) => {
      const value = cell.trim() === "" ? NaN : Number(cell);
      if (!Number.isFinite(value)) {
        throw new SchemaError(`${file}: row ${r + 1}, column ${c + 1}: non-numeric value '${cell}'`);
      }
      return value;
    });
  });
  return { n, values };
}
