import { describe, expect, it } from "vitest";

import {
  CsvFormatError,
  groupBySolver,
  parseCompareCsv,
  seriesPoints,
} from "../src/csv.js";

const HEADER =
  "solver,k,infeas_last,infeas_ergodic,gap_last,gap_ergodic," +
  "kkt_residual,lambda_norm,theta_err,wall_clock_ns";

const HEADER_X =
  "solver,k,x_norm_err,infeas_last,infeas_ergodic,gap_last,gap_ergodic," +
  "kkt_residual,lambda_norm,theta_err,wall_clock_ns";

function row(solver: string, k: number, fill = 0.5): string {
  return `${solver},${k},${fill},${fill},${fill},${fill},${fill},${fill},0,`;
}

describe("parseCompareCsv", () => {
  it("round-trips a contract-conformant CSV", () => {
    const text = [HEADER, row("alm", 100), row("alm", 200)].join("\n");
    const rows = parseCompareCsv(text);
    expect(rows).toHaveLength(2);
    expect(rows[0].solver).toBe("alm");
    expect(rows[1].k).toBe(200);
    expect(rows[0].values["gap_ergodic"]).toBe(0.5);
    expect(rows[0].values["wall_clock_ns"]).toBeNull();
  });

  it("accepts the optional x_norm_err column", () => {
    const text = [HEADER_X, `alm,100,0.1,${[0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0].join(",")},`].join("\n");
    const rows = parseCompareCsv(text);
    expect(rows[0].values["x_norm_err"]).toBe(0.1);
  });

  it("parses 17-significant-digit floats exactly", () => {
    const v = "2.5579538487363607e-13";
    const text = [HEADER, `alm,100,${v},0.5,0.5,0.5,0.5,0.5,0,`].join("\n");
    expect(parseCompareCsv(text)[0].values["infeas_last"]).toBe(
      2.5579538487363607e-13,
    );
  });

  it("names a missing column", () => {
    const broken = HEADER.replace(",infeas_ergodic", "");
    const text = [broken, "alm,100,0.5,0.5,0.5,0.5,0.5,0,"].join("\n");
    expect(() => parseCompareCsv(text)).toThrowError(
      /missing column: infeas_ergodic/,
    );
  });

  it("names an unexpected column", () => {
    const text = [HEADER + ",bogus", row("alm", 100) + ",1"].join("\n");
    expect(() => parseCompareCsv(text)).toThrowError(
      /unexpected column: bogus/,
    );
  });

  it("rejects out-of-order columns", () => {
    const swapped = HEADER.replace(
      "infeas_last,infeas_ergodic",
      "infeas_ergodic,infeas_last",
    );
    const text = [swapped, row("alm", 100)].join("\n");
    expect(() => parseCompareCsv(text)).toThrowError(CsvFormatError);
  });

  it("rejects empty input and header-only input", () => {
    expect(() => parseCompareCsv("")).toThrowError(/empty CSV/);
    expect(() => parseCompareCsv(HEADER + "\n")).toThrowError(
      /header but no data rows/,
    );
  });

  it("reports the line and column of a bad number", () => {
    const bad = "alm,200,0.5,oops,0.5,0.5,0.5,0.5,0,";
    const text = [HEADER, row("alm", 100), bad].join("\n");
    expect(() => parseCompareCsv(text)).toThrowError(
      /line 3: column infeas_ergodic is not a finite number: oops/,
    );
  });

  it("rejects rows with the wrong cell count", () => {
    const text = [HEADER, "alm,100,0.5"].join("\n");
    expect(() => parseCompareCsv(text)).toThrowError(/expected 10 cells/);
  });

  it("rejects non-integer iteration counters", () => {
    const text = [HEADER, row("alm", 1.5)].join("\n");
    expect(() => parseCompareCsv(text)).toThrowError(
      /k must be a nonnegative integer/,
    );
  });
});

describe("groupBySolver / seriesPoints", () => {
  it("groups rows per solver in first-appearance order", () => {
    const text = [
      HEADER,
      row("alm", 100),
      row("alm", 200),
      row("eg", 100),
    ].join("\n");
    const groups = groupBySolver(parseCompareCsv(text));
    expect([...groups.keys()]).toEqual(["alm", "eg"]);
    expect(groups.get("alm")).toHaveLength(2);
  });

  it("extracts metric points and names absent metrics", () => {
    const rows = parseCompareCsv([HEADER, row("alm", 100, 0.25)].join("\n"));
    expect(seriesPoints(rows, "gap_last")).toEqual([{ k: 100, value: 0.25 }]);
    expect(() => seriesPoints(rows, "nope")).toThrowError(
      /missing column: nope/,
    );
  });
});
