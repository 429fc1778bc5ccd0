/**
 * Render a solver-comparison CSV into a two-panel SVG convergence figure.
 *
 * Usage:
 *   node dist/plot.js --input compare.csv --out figure.svg [--gap-col ergodic]
 *
 * --gap-col selects the metric pair: "ergodic" plots gap_ergodic and
 * infeas_ergodic (the default; the theory statements concern the ergodic
 * average), "last" plots the last-iterate columns. Exit codes: 0 on
 * success, 1 on malformed input, with the defect named on stderr.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { parseArgs } from "node:util";

import { CsvFormatError, parseCompareCsv } from "./csv.js";
import { buildFigure, GapVariant } from "./figure.js";

export function main(argv: string[]): number {
  let args;
  try {
    args = parseArgs({
      args: argv,
      options: {
        input: { type: "string" },
        out: { type: "string" },
        "gap-col": { type: "string", default: "ergodic" },
      },
    });
  } catch (err) {
    console.error(`argument error: ${(err as Error).message}`);
    return 1;
  }
  const { input, out } = args.values;
  const gapCol = args.values["gap-col"];
  if (!input || !out) {
    console.error("usage: plot --input <compare.csv> --out <figure.svg> " +
      "[--gap-col last|ergodic]");
    return 1;
  }
  if (gapCol !== "last" && gapCol !== "ergodic") {
    console.error(`--gap-col: expected "last" or "ergodic", got "${gapCol}"`);
    return 1;
  }

  let text: string;
  try {
    text = readFileSync(input, "utf8");
  } catch (err) {
    console.error(`cannot read ${input}: ${(err as Error).message}`);
    return 1;
  }

  try {
    const rows = parseCompareCsv(text);
    writeFileSync(out, buildFigure(rows, gapCol as GapVariant));
  } catch (err) {
    if (err instanceof CsvFormatError) {
      console.error(`malformed CSV: ${err.message}`);
      return 1;
    }
    throw err;
  }
  console.log(out);
  return 0;
}
