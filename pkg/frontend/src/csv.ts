/**
 * Parser for the solver-comparison CSV produced by the mvibench CLI.
 *
 * The contract is strict: a leading `solver` tag column followed by the
 * fixed trace columns, '.'-decimal floats, no quoting. `x_norm_err` is
 * optional (it only exists when the instance has a reference solution);
 * every other column must be present in order. Malformed input raises
 * CsvFormatError with a message naming the defect.
 */

export const TRACE_COLUMNS = [
  "k",
  "x_norm_err",
  "infeas_last",
  "infeas_ergodic",
  "gap_last",
  "gap_ergodic",
  "kkt_residual",
  "lambda_norm",
  "theta_err",
  "wall_clock_ns",
] as const;

const OPTIONAL_COLUMNS = new Set(["x_norm_err"]);

/** Columns where an empty cell is legal (written as the empty string). */
const NULLABLE_COLUMNS = new Set(["x_norm_err", "wall_clock_ns"]);

export interface CompareRow {
  solver: string;
  k: number;
  values: Record<string, number | null>;
}

export class CsvFormatError extends Error {}

function expectedHeader(withXErr: boolean): string[] {
  const cols = withXErr
    ? [...TRACE_COLUMNS]
    : TRACE_COLUMNS.filter((c) => c !== "x_norm_err");
  return ["solver", ...cols];
}

function validateHeader(cells: string[]): string[] {
  for (const withXErr of [true, false]) {
    const want = expectedHeader(withXErr);
    if (cells.length === want.length && cells.every((c, i) => c === want[i])) {
      return want;
    }
  }
  // Diagnose: name a missing required column if there is one, otherwise
  // report the first unexpected or out-of-order cell.
  const present = new Set(cells);
  for (const col of expectedHeader(false)) {
    if (!present.has(col)) {
      throw new CsvFormatError(`missing column: ${col}`);
    }
  }
  for (const cell of cells) {
    if (cell !== "solver" && !TRACE_COLUMNS.includes(cell as never)) {
      throw new CsvFormatError(`unexpected column: ${cell}`);
    }
  }
  throw new CsvFormatError(
    `header columns out of order: got [${cells.join(", ")}]`,
  );
}

function parseCell(column: string, text: string, line: number): number | null {
  if (text === "") {
    if (NULLABLE_COLUMNS.has(column)) return null;
    throw new CsvFormatError(`line ${line}: empty value in column ${column}`);
  }
  const value = Number(text);
  if (!Number.isFinite(value)) {
    throw new CsvFormatError(
      `line ${line}: column ${column} is not a finite number: ${text}`,
    );
  }
  return value;
}

export function parseCompareCsv(text: string): CompareRow[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new CsvFormatError("empty CSV: no header line");
  }
  const header = validateHeader(lines[0].split(","));
  if (lines.length === 1) {
    throw new CsvFormatError("empty CSV: header but no data rows");
  }

  const rows: CompareRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    const lineNo = i + 1;
    if (cells.length !== header.length) {
      throw new CsvFormatError(
        `line ${lineNo}: expected ${header.length} cells, got ${cells.length}`,
      );
    }
    const solver = cells[0];
    if (solver === "") {
      throw new CsvFormatError(`line ${lineNo}: empty solver tag`);
    }
    const values: Record<string, number | null> = {};
    for (let j = 1; j < header.length; j++) {
      values[header[j]] = parseCell(header[j], cells[j], lineNo);
    }
    const k = values["k"];
    if (k === null || !Number.isInteger(k) || k < 0) {
      throw new CsvFormatError(
        `line ${lineNo}: k must be a nonnegative integer, got ${cells[1]}`,
      );
    }
    rows.push({ solver, k, values });
  }
  return rows;
}

/** Group rows by solver tag, preserving first-appearance order. */
export function groupBySolver(rows: CompareRow[]): Map<string, CompareRow[]> {
  const groups = new Map<string, CompareRow[]>();
  for (const row of rows) {
    const bucket = groups.get(row.solver);
    if (bucket) bucket.push(row);
    else groups.set(row.solver, [row]);
  }
  return groups;
}

/** Extract one metric column as (k, value) points for a solver group. */
export function seriesPoints(
  rows: CompareRow[],
  column: string,
): { k: number; value: number }[] {
  return rows.map((row) => {
    const value = row.values[column];
    if (value === null || value === undefined) {
      throw new CsvFormatError(`missing column: ${column}`);
    }
    return { k: row.k, value };
  });
}
