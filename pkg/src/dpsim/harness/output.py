"""CSV and plot-data writers for sweep results."""

from __future__ import annotations

import csv
from enum import Enum
from pathlib import Path
from typing import IO, Iterable

from .sweep import SweepResult, SweepRow, unit_sort_key

__all__ = ["CSV_HEADER", "PlotKind", "emit_csv", "emit_plot_data", "format_csv", "read_csv"]

CSV_HEADER = (
    "unit,predictor,e_max,transmissions,total,reduction_pct,"
    "mse_reconstruction,mse_prediction,baseline_msgs,dps_msgs"
)


class PlotKind(str, Enum):
    REDUCTION = "ReductionVsMargin"
    MSE = "MseVsMargin"


def _num(v: float) -> str:
    return format(v, ".6g")


def _csv_field(text: str) -> str:
    if any(c in text for c in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def format_csv(rows: Iterable[SweepRow]) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(",".join([
            _csv_field(r.unit), _csv_field(r.predictor), _num(r.e_max),
            str(r.transmissions), str(r.total), _num(r.reduction_pct),
            _num(r.mse_reconstruction), _num(r.mse_prediction),
            str(r.baseline_msgs), str(r.dps_msgs),
        ]))
    return "\n".join(lines) + "\n"


def emit_csv(result: SweepResult, path: str | Path) -> None:
    """Write rows with 6 significant digits and LF line endings."""
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(format_csv(result.rows))


def read_csv(source: str | Path | IO[str]) -> SweepResult:
    """Parse a file written by :func:`emit_csv`.

    Floats come back at the 6-digit precision they were written with, so
    ``format_csv(read_csv(f).rows)`` reproduces ``f`` byte for byte.
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return read_csv(fh)
    reader = csv.reader(source)
    header = next(reader, None)
    if header is None or ",".join(header) != CSV_HEADER:
        raise ValueError(f"unexpected header {header!r}")
    rows = []
    for rec in reader:
        if not rec:
            continue
        u, p, e, tx, tot, red, mr, mp, base, sent = rec
        rows.append(SweepRow(u, p, float(e), int(tx), int(tot), float(red), float(mr), float(mp), int(base), int(sent)))
    units = sorted({r.unit for r in rows}, key=unit_sort_key)
    predictors = list(dict.fromkeys(r.predictor for r in rows))
    margins = sorted({r.e_max for r in rows})
    return SweepResult(rows, units, predictors, margins)


def plot_series(result: SweepResult, kind: PlotKind | str) -> dict[str, list[tuple[float, float]]]:
    """Per-predictor ``(e_max, metric)`` points, averaged over all units."""
    kind = PlotKind(kind)
    attr = "reduction_pct" if kind is PlotKind.REDUCTION else "mse_reconstruction"
    acc: dict[str, dict[float, list[float]]] = {}
    for r in result.rows:
        acc.setdefault(r.predictor, {}).setdefault(r.e_max, []).append(getattr(r, attr))
    return {
        pred: [(e, sum(v) / len(v)) for e, v in sorted(by_margin.items())]
        for pred, by_margin in acc.items()
    }


def emit_plot_data(result: SweepResult, kind: PlotKind | str, path: str | Path) -> None:
    """Write gnuplot-style blocks: one per predictor, separated by two blank lines."""
    kind = PlotKind(kind)
    if not result.rows:
        raise ValueError("cannot emit plot data for an empty result")
    metric = "reduction_pct" if kind is PlotKind.REDUCTION else "mse_reconstruction"
    units = sorted({r.unit for r in result.rows}, key=unit_sort_key)
    out = [f"# {kind.value}", f"# units ({len(units)}): {' '.join(units)}"]
    blocks = []
    for pred, points in plot_series(result, kind).items():
        lines = [f"# predictor: {pred}", f"e_max {metric}"]
        lines += [f"{_num(e)} {_num(v)}" for e, v in points]
        blocks.append("\n".join(lines))
    text = "\n".join(out) + "\n" + "\n\n\n".join(blocks) + "\n"
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(text)
