/**
 * Two-panel convergence figure: VI gap (left) and infeasibility (right),
 * both on log-log axes, one styled curve per solver.
 *
 * Styles follow the benchmark's convention: ALM solid, Tikhonov dashed with
 * circle markers, EG dotted with cross markers. Values at or below zero
 * cannot be drawn on a log axis; they are clipped to 1e-16 and the clip is
 * called out in a footnote.
 */

import { CompareRow, groupBySolver, seriesPoints } from "./csv.js";

export const LOG_CLIP = 1e-16;

export type GapVariant = "last" | "ergodic";

interface SeriesStyle {
  color: string;
  dash: string; // SVG stroke-dasharray ("" = solid)
  marker: "none" | "circle" | "cross";
  label: string;
}

const STYLES: Record<string, SeriesStyle> = {
  alm: { color: "#1f5fa8", dash: "", marker: "none", label: "ALM" },
  tikhonov: {
    color: "#c44e52",
    dash: "8 5",
    marker: "circle",
    label: "Tikhonov",
  },
  eg: { color: "#2a8a5c", dash: "2 4", marker: "cross", label: "EG" },
};

const FALLBACK_STYLE: SeriesStyle = {
  color: "#666666",
  dash: "5 3",
  marker: "none",
  label: "",
};

function styleFor(solver: string): SeriesStyle {
  return STYLES[solver] ?? { ...FALLBACK_STYLE, label: solver };
}

const PANEL_W = 380;
const PANEL_H = 340;
const MARGIN = { top: 44, right: 16, bottom: 58, left: 64 };
const GUTTER = 40;
const FOOT_H = 24;

const fmt = (v: number) => +v.toFixed(2);

function logTicks(lo: number, hi: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.ceil(lo); e <= Math.floor(hi); e++) ticks.push(e);
  // Very narrow ranges still deserve endpoints.
  if (ticks.length === 0) ticks.push(lo, hi);
  return ticks;
}

function tickLabel(exp: number): string {
  return Number.isInteger(exp) ? `1e${exp}` : `1e${exp.toFixed(1)}`;
}

interface Panel {
  title: string;
  column: string;
  xOffset: number;
}

function renderPanel(
  panel: Panel,
  groups: Map<string, CompareRow[]>,
  clipped: { count: number },
): string {
  const plotW = PANEL_W - MARGIN.left - MARGIN.right;
  const plotH = PANEL_H - MARGIN.top - MARGIN.bottom;

  const series = [...groups.entries()].map(([solver, rows]) => ({
    solver,
    points: seriesPoints(rows, panel.column).map(({ k, value }) => {
      if (value <= 0) clipped.count += 1;
      return { k: Math.max(k, 1), value: Math.max(value, LOG_CLIP) };
    }),
  }));

  const xs = series.flatMap((s) => s.points.map((p) => Math.log10(p.k)));
  const ys = series.flatMap((s) => s.points.map((p) => Math.log10(p.value)));
  const xLo = Math.min(...xs);
  const xHi = Math.max(...xs, xLo + 1e-9);
  const yLo = Math.min(...ys);
  const yHi = Math.max(...ys, yLo + 1e-9);

  const sx = (k: number) =>
    MARGIN.left + ((Math.log10(k) - xLo) / (xHi - xLo)) * plotW;
  const sy = (v: number) =>
    MARGIN.top + plotH - ((Math.log10(v) - yLo) / (yHi - yLo)) * plotH;

  const parts: string[] = [];
  parts.push(`<g transform="translate(${panel.xOffset},0)">`);
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" ` +
      `height="${plotH}" fill="none" stroke="#999"/>`,
  );
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${MARGIN.top - 14}" ` +
      `text-anchor="middle" font-size="15" font-weight="bold">` +
      `${panel.title}</text>`,
  );

  for (const exp of logTicks(yLo, yHi)) {
    const y = sy(10 ** exp);
    parts.push(
      `<line x1="${MARGIN.left}" x2="${MARGIN.left + plotW}" ` +
        `y1="${fmt(y)}" y2="${fmt(y)}" stroke="#e5e5e5"/>`,
      `<text x="${MARGIN.left - 6}" y="${fmt(y + 4)}" text-anchor="end" ` +
        `font-size="11">${tickLabel(exp)}</text>`,
    );
  }
  for (const exp of logTicks(xLo, xHi)) {
    const x = sx(10 ** exp);
    parts.push(
      `<line y1="${MARGIN.top}" y2="${MARGIN.top + plotH}" ` +
        `x1="${fmt(x)}" x2="${fmt(x)}" stroke="#e5e5e5"/>`,
      `<text y="${MARGIN.top + plotH + 16}" x="${fmt(x)}" ` +
        `text-anchor="middle" font-size="11">${tickLabel(exp)}</text>`,
    );
  }
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${PANEL_H - 14}" ` +
      `text-anchor="middle" font-size="12">iteration k</text>`,
  );

  for (const { solver, points } of series) {
    const style = styleFor(solver);
    const d = points
      .map((p, i) => `${i === 0 ? "M" : "L"}${fmt(sx(p.k))} ${fmt(sy(p.value))}`)
      .join(" ");
    const dash = style.dash ? ` stroke-dasharray="${style.dash}"` : "";
    parts.push(
      `<path class="series" data-solver="${solver}" d="${d}" fill="none" ` +
        `stroke="${style.color}" stroke-width="1.8"${dash}/>`,
    );
    if (style.marker !== "none") {
      const stride = Math.max(1, Math.floor(points.length / 15));
      for (let i = 0; i < points.length; i += stride) {
        const x = fmt(sx(points[i].k));
        const y = fmt(sy(points[i].value));
        if (style.marker === "circle") {
          parts.push(
            `<circle cx="${x}" cy="${y}" r="3" fill="none" ` +
              `stroke="${style.color}" stroke-width="1.2"/>`,
          );
        } else {
          parts.push(
            `<path d="M${x - 3} ${y - 3}L${x + 3} ${y + 3}` +
              `M${x - 3} ${y + 3}L${x + 3} ${y - 3}" ` +
              `stroke="${style.color}" stroke-width="1.2"/>`,
          );
        }
      }
    }
  }
  parts.push("</g>");
  return parts.join("\n");
}

function renderLegend(groups: Map<string, CompareRow[]>, width: number): string {
  const entries = [...groups.keys()];
  const itemW = 120;
  const x0 = width / 2 - (entries.length * itemW) / 2;
  const y = PANEL_H + 2;
  const parts = [`<g font-size="12">`];
  entries.forEach((solver, i) => {
    const style = styleFor(solver);
    const x = x0 + i * itemW;
    const dash = style.dash ? ` stroke-dasharray="${style.dash}"` : "";
    parts.push(
      `<line x1="${x}" x2="${x + 28}" y1="${y}" y2="${y}" ` +
        `stroke="${style.color}" stroke-width="1.8"${dash}/>`,
      `<text x="${x + 34}" y="${y + 4}">${style.label}</text>`,
    );
  });
  parts.push("</g>");
  return parts.join("\n");
}

export function buildFigure(
  rows: CompareRow[],
  gapVariant: GapVariant,
): string {
  const groups = groupBySolver(rows);
  const width = 2 * PANEL_W + GUTTER;
  const clipped = { count: 0 };
  const panels = [
    renderPanel(
      { title: "VI gap", column: `gap_${gapVariant}`, xOffset: 0 },
      groups,
      clipped,
    ),
    renderPanel(
      {
        title: "infeasibility",
        column: `infeas_${gapVariant}`,
        xOffset: PANEL_W + GUTTER,
      },
      groups,
      clipped,
    ),
  ];
  const footnote =
    clipped.count > 0
      ? `<text x="8" y="${PANEL_H + FOOT_H}" font-size="11" fill="#555">` +
        `* ${clipped.count} value(s) &#8804; 0 clipped to ${LOG_CLIP} ` +
        `for log display</text>`
      : "";
  const height = PANEL_H + FOOT_H + 8;
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" ` +
      `height="${height}" viewBox="0 0 ${width} ${height}" ` +
      `font-family="sans-serif">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
    ...panels,
    renderLegend(groups, width),
    footnote,
    "</svg>",
  ]
    .filter((s) => s.length > 0)
    .join("\n");
}
