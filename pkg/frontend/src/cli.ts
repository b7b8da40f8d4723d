#!/usr/bin/env node
/** Script entry: render --kind <k> --in <csv> [--in <csv> ...] --out <png>. */
import { parseArgs } from "node:util";
import { SchemaError } from "./csv";
import { FIGURE_KINDS, FigureKind, render, RenderStyle, UsageError } from "./render";

const USAGE = [
  `usage: render --kind <${FIGURE_KINDS.join("|")}>`,
  "              --in <csv> [--in <csv> ...] --out <png>",
  "              [--width <px>] [--height <px>] [--colormap <gray|heat>]",
  "              [--orientation <origin-upper|origin-lower>]",
].join("\n");

function parseDimension(name: string, raw: string | undefined): number | undefined {
  if (raw === undefined) return undefined;
  if (!/^\d+$/.test(raw)) throw new UsageError(`--${name} must be an integer, got '${raw}'`);
  return Number(raw);
}

export function main(argv: string[]): number {
  let values;
  try {
    ({ values } = parseArgs({
      args: argv,
      allowPositionals: false,
      options: {
        kind: { type: "string" },
        in: { type: "string", multiple: true },
        out: { type: "string" },
        width: { type: "string" },
        height: { type: "string" },
        colormap: { type: "string" },
        orientation: { type: "string" },
        help: { type: "boolean", short: "h" },
      },
    }));
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
    console.error(USAGE);
    return 2;
  }
  if (values.help) {
    console.log(USAGE);
    return 0;
  }
  try {
    if (values.kind === undefined) throw new UsageError("--kind is required");
    if (values.out === undefined) throw new UsageError("--out is required");
    const style: RenderStyle = {
      width: parseDimension("width", values.width),
      height: parseDimension("height", values.height),
      colormap: values.colormap as RenderStyle["colormap"],
      orientation: values.orientation as RenderStyle["orientation"],
    };
    const job = {
      kind: values.kind as FigureKind,
      inputs: values.in ?? [],
      out: values.out,
      style,
    };
    const { width, height } = render(job);
    console.log(`wrote ${job.out} (${width}x${height})`);
    return 0;
  } catch (err) {
    if (err instanceof UsageError || err instanceof SchemaError) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`);
    return 1;
  }
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)));
}
