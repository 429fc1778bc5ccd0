"""Per-iteration metric rows and their CSV round-trip.

The CSV contract is fixed: '.'-decimal, floats printed with up to 17
significant digits so parsing returns the exact binary value. The oracle
column ``x_norm_err`` appears only when a reference solution exists; the
``wall_clock_ns`` column is part of the header but left empty by default so
repeated runs stay byte-identical (timings live in the summary JSON).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .metrics import GapOracleConfig, infeasibility, minty_gap, theta_error
from .problem import KKTTriple, ProblemInstance, evaluate_kkt_residual

TRACE_COLUMNS = [
    "k", "x_norm_err", "infeas_last", "infeas_ergodic", "gap_last",
    "gap_ergodic", "kkt_residual", "lambda_norm", "theta_err",
    "wall_clock_ns",
]


@dataclass
class TraceRow:
    k: int
    x_norm_err: Optional[float]
    infeas_last: float
    infeas_ergodic: float
    gap_last: float
    gap_ergodic: float
    kkt_residual: float
    lambda_norm: float
    theta_err: float
    wall_clock_ns: Optional[int] = None


class TraceEvaluator:
    """Computes one metric row from (k, x_last, x_ergodic, lambda, theta).

    Gap values use the relaxed oracle with eps set to the measured
    infeasibility of each evaluated point.
    """

    def __init__(self, p: ProblemInstance, theta_star,
                 oracle: Optional[KKTTriple] = None,
                 gap_cfg: Optional[GapOracleConfig] = None):
        self.p = p
        self.theta_star = np.asarray(theta_star, dtype=float)
        self.oracle = oracle
        self.gap_cfg = gap_cfg or GapOracleConfig(
            inner_iterations=300, lower_bound_samples=500)

    def __call__(self, k, x_last, x_erg, lam, theta) -> TraceRow:
        gap_last, _ = minty_gap(self.p, x_last, self.theta_star, self.gap_cfg)
        gap_erg, _ = minty_gap(self.p, x_erg, self.theta_star, self.gap_cfg)
        x_err = None
        if self.oracle is not None:
            x_err = float(np.linalg.norm(x_last - self.oracle.x_star))
        return TraceRow(
            k=int(k),
            x_norm_err=x_err,
            infeas_last=infeasibility(self.p, x_last, self.theta_star),
            infeas_ergodic=infeasibility(self.p, x_erg, self.theta_star),
            gap_last=gap_last,
            gap_ergodic=gap_erg,
            kkt_residual=evaluate_kkt_residual(self.p, x_last, theta, lam),
            lambda_norm=float(np.linalg.norm(lam)),
            theta_err=theta_error(theta, self.theta_star),
        )


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _row_cells(row: TraceRow, include_x_err: bool) -> list:
    cells = [_fmt(row.k)]
    if include_x_err:
        cells.append(_fmt(row.x_norm_err))
    cells += [_fmt(row.infeas_last), _fmt(row.infeas_ergodic),
              _fmt(row.gap_last), _fmt(row.gap_ergodic),
              _fmt(row.kkt_residual), _fmt(row.lambda_norm),
              _fmt(row.theta_err), _fmt(row.wall_clock_ns)]
    return cells


def _columns(include_x_err: bool) -> list:
    if include_x_err:
        return list(TRACE_COLUMNS)
    return [c for c in TRACE_COLUMNS if c != "x_norm_err"]


def write_trace_csv(rows: Sequence[TraceRow], path,
                    include_x_err: bool) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_columns(include_x_err))
        for row in rows:
            writer.writerow(_row_cells(row, include_x_err))


def write_compare_csv(tagged_rows: Sequence[tuple], path,
                      include_x_err: bool) -> None:
    """Combined CSV with a leading solver-tag column."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["solver"] + _columns(include_x_err))
        for tag, rows in tagged_rows:
            for row in rows:
                writer.writerow([tag] + _row_cells(row, include_x_err))


def _parse_cell(column: str, text: str):
    if text == "":
        return None
    if column == "k":
        return int(text)
    if column == "wall_clock_ns":
        return int(text)
    return float(text)


def read_trace_csv(path):
    """Parse a trace CSV back into TraceRow objects (exact round-trip)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        has_tag = header and header[0] == "solver"
        cols = header[1:] if has_tag else header
        expected = set(cols)
        if not expected.issubset(set(TRACE_COLUMNS)):
            unknown = expected - set(TRACE_COLUMNS)
            raise ValueError(f"unknown trace columns: {sorted(unknown)}")
        out = []
        for cells in reader:
            tag = cells[0] if has_tag else None
            vals = cells[1:] if has_tag else cells
            data = {c: _parse_cell(c, v) for c, v in zip(cols, vals)}
            data.setdefault("x_norm_err", None)
            data.setdefault("wall_clock_ns", None)
            row = TraceRow(**data)
            out.append((tag, row) if has_tag else row)
    return out
