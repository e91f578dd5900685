"""Report emission and parsing.

CSV output (fixed column orders) in the target directory:

``cells.csv``
    dataset, learner, m, method, V, alpha, n, mean_mae, std_mae, t_stat,
    p_value, verdict, degenerate, errors
    (one row per cell; ``errors`` is the per-realisation MAE vector as
    ``repr`` floats joined by ``;``)
``errors_table.csv``
    dataset, learner, m, V, alpha, then ``<method>`` and ``<method>_std``
    for every method (mean test error with standard deviation)
``wins.csv``
    learner, m, method, V, alpha, losses, draws, wins
``config.json``
    the experiment configuration

JSON output writes the whole report, including per-realisation selections,
to ``report.json``.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from .harness import CellResult, ExperimentReport

CELL_COLUMNS = (
    "dataset", "learner", "m", "method", "V", "alpha", "n", "mean_mae", "std_mae",
    "t_stat", "p_value", "verdict", "degenerate", "errors",
)
WIN_COLUMNS = ("learner", "m", "method", "V", "alpha", "losses", "draws", "wins")


def _fmt(x: float) -> str:
    return repr(float(x))


def _parse_float(s: str) -> float:
    return float(s)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def cell_rows(report: ExperimentReport) -> list[list]:
    return [
        [
            c.dataset, c.learner, c.m, c.method, c.V, _fmt(c.alpha), len(c.errors),
            _fmt(c.mean), _fmt(c.std), _fmt(c.t_stat), _fmt(c.p_value), c.verdict,
            int(c.degenerate), ";".join(_fmt(e) for e in c.errors),
        ]
        for c in report.cells
    ]


def errors_table(report: ExperimentReport) -> tuple[list, list]:
    """Mean error and std per method, one row per (dataset, V, alpha)."""
    methods = list(dict.fromkeys(c.method for c in report.cells))
    header = ["dataset", "learner", "m", "V", "alpha"]
    for meth in methods:
        header += [meth, f"{meth}_std"]
    rows: dict[tuple, list] = {}
    for c in report.cells:
        k = (c.dataset, c.learner, c.m, c.V, c.alpha)
        row = rows.setdefault(k, [c.dataset, c.learner, c.m, c.V, _fmt(c.alpha)] + [""] * (2 * len(methods)))
        j = 5 + 2 * methods.index(c.method)
        row[j], row[j + 1] = _fmt(c.mean), _fmt(c.std)
    return header, list(rows.values())


def emit_report(report: ExperimentReport, fmt: str = "csv", path: str | Path = "results") -> list[Path]:
    """Write ``report`` under directory ``path``; returns the written files."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        target = out / "report.json"
        target.write_text(json.dumps(report_to_dict(report), indent=1, sort_keys=True) + "\n")
        return [target]
    if fmt != "csv":
        raise ValueError(f"unknown report format {fmt!r}")
    written = [out / "cells.csv", out / "errors_table.csv", out / "wins.csv", out / "config.json"]
    _write_csv(written[0], CELL_COLUMNS, cell_rows(report))
    _write_csv(written[1], *errors_table(report))
    _write_csv(
        written[2],
        WIN_COLUMNS,
        [[r[k] if k != "alpha" else _fmt(r[k]) for k in WIN_COLUMNS] for r in report.win_table()],
    )
    written[3].write_text(json.dumps(report.config, indent=1, sort_keys=True) + "\n")
    return written


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def report_to_dict(report: ExperimentReport) -> dict:
    return {
        "config": report.config,
        "cells": [
            {
                "dataset": c.dataset, "learner": c.learner, "m": c.m, "method": c.method,
                "V": c.V, "alpha": c.alpha, "errors": list(c.errors),
                "mean_mae": c.mean, "std_mae": c.std,
                "t_stat": _json_safe(c.t_stat), "p_value": c.p_value,
                "verdict": c.verdict, "degenerate": c.degenerate,
            }
            for c in report.cells
        ],
        "selections": report.selections,
    }


def _cell_from_dict(d: dict) -> CellResult:
    t = d["t_stat"]
    return CellResult(
        d["dataset"], d["learner"], int(d["m"]), d["method"], int(d["V"]), float(d["alpha"]),
        tuple(float(e) for e in d["errors"]), float(t), float(d["p_value"]), d["verdict"],
        bool(d["degenerate"]),
    )


def load_report(path: str | Path) -> ExperimentReport:
    """Parse a report directory written by :func:`emit_report` (either format)."""
    p = Path(path)
    if (p / "report.json").exists():
        doc = json.loads((p / "report.json").read_text())
        return ExperimentReport(
            doc["config"], [_cell_from_dict(c) for c in doc["cells"]], doc.get("selections", [])
        )
    cells = []
    with open(p / "cells.csv", newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            cells.append(
                CellResult(
                    row["dataset"], row["learner"], int(row["m"]), row["method"], int(row["V"]),
                    _parse_float(row["alpha"]),
                    tuple(_parse_float(e) for e in row["errors"].split(";")) if row["errors"] else (),
                    _parse_float(row["t_stat"]), _parse_float(row["p_value"]), row["verdict"],
                    bool(int(row["degenerate"])),
                )
            )
    config = json.loads((p / "config.json").read_text())
    return ExperimentReport(config, cells)


def write_trace(trace, path: str | Path, svg: bool = False) -> list[Path]:
    """Write a penalty gap trace as CSV (per realisation and mean rows), optionally an SVG."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    keys = ("pen_ideal", "pen_vf", "pen_vf_plus", "gap_vf", "gap_vf_plus", "beta")
    pkeys = list(trace.points[0]) if trace.points else []
    rows = []
    for r in trace.rows:
        q = trace.points[r["index"]]
        rows.append([trace.dataset, trace.V, _fmt(trace.alpha), r["realisation"], r["index"]]
                    + [q[k] for k in pkeys] + [_fmt(r[k]) for k in keys])
    header = ["dataset", "V", "alpha", "realisation", "index"] + pkeys + list(keys)
    files = [out / "penalty_trace.csv", out / "penalty_trace_mean.csv"]
    _write_csv(files[0], header, rows)
    mean = trace.mean_by_point()
    mkeys = list(keys) + ["abs_gap_vf", "abs_gap_vf_plus"]
    _write_csv(
        files[1],
        ["index"] + pkeys + mkeys,
        [[m["index"]] + [m["point"][k] for k in pkeys] + [_fmt(m[k]) for k in mkeys] for m in mean],
    )
    if svg:
        files.append(out / "penalty_trace.svg")
        files[-1].write_text(line_chart_svg(
            [m["index"] for m in mean],
            {"ideal": [m["pen_ideal"] for m in mean], "V-fold": [m["pen_vf"] for m in mean],
             "V-fold+": [m["pen_vf_plus"] for m in mean]},
            [str(next(iter(m["point"].values()))) if len(pkeys) == 1 else str(m["index"]) for m in mean],
        ))
    return files


def line_chart_svg(xs, series: dict, labels=None, width=640, height=400) -> str:
    """Minimal SVG line chart; no plotting dependency."""
    pad = 50
    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")
    vals = [v for ys in series.values() for v in ys if math.isfinite(v)]
    lo, hi = (min(vals), max(vals)) if vals else (0.0, 1.0)
    if hi == lo:
        hi = lo + 1.0
    x0, x1 = min(xs), max(xs) if len(xs) > 1 else min(xs) + 1

    def px(x):
        return pad + (x - x0) / ((x1 - x0) or 1) * (width - 2 * pad)

    def py(y):
        return height - pad - (y - lo) / (hi - lo) * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="5" y="{pad}" font-size="10">{hi:.3g}</text>',
        f'<text x="5" y="{height - pad}" font-size="10">{lo:.3g}</text>',
    ]
    for x, lab in zip(xs, labels or xs):
        parts.append(f'<text x="{px(x):.1f}" y="{height - pad + 15}" font-size="10" text-anchor="middle">{lab}</text>')
    for k, (name, ys) in enumerate(series.items()):
        pts = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in zip(xs, ys) if math.isfinite(y))
        c = colors[k % len(colors)]
        parts.append(f'<polyline fill="none" stroke="{c}" stroke-width="2" points="{pts}"/>')
        parts.append(f'<text x="{width - pad - 80}" y="{pad + 15 * k}" font-size="12" fill="{c}">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
