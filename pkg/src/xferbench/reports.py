"""Serialization of result tables: CSV emission and the Markdown report
shaped like per-metric source x target grids with an Average column."""

from __future__ import annotations

import csv
from pathlib import Path

from .errors import ParseError
from .harness import AggregateRow, Cell, ResultTable
from .metrics import MetricId

CELLS_HEADER = [
    "source",
    "target",
    "metric",
    "strategy",
    "level",
    "tau_w",
    "tau",
    "n_models",
]


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def write_cells_csv(rt: ResultTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(CELLS_HEADER)
        for c in rt.cells:
            w.writerow(
                [
                    c.source,
                    c.target,
                    str(c.metric),
                    c.strategy,
                    "" if c.level is None else c.level,
                    _fmt(c.tau_w),
                    _fmt(c.tau),
                    c.n_models,
                ]
            )


def read_cells_csv(path) -> ResultTable:
    cells = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != CELLS_HEADER:
            raise ParseError(f"{path}: bad header {header}")
        for row in reader:
            source, target, metric, strategy, level, tau_w, tau, n_models = row
            cells.append(
                Cell(
                    source=source,
                    target=target,
                    metric=MetricId(metric),
                    strategy=strategy,
                    level=None if level == "" else int(level),
                    tau_w=float(tau_w),
                    tau=float(tau),
                    n_models=int(n_models),
                )
            )
    return ResultTable(cells=cells)


def write_aggregates_csv(rt: ResultTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["source", "metric", "strategy", "mean_tau_w", "n_cells"])
        for a in rt.aggregates:
            w.writerow([a.source, str(a.metric), a.strategy, _fmt(a.mean_tau_w), a.n_cells])


def write_sigma_csv(rt: ResultTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["metric", "subset_sigma"])
        for m in sorted(rt.subset_sigma, key=str):
            w.writerow([str(m), _fmt(rt.subset_sigma[m])])


def write_scores_csv(scores, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["model_id", "metric", "strategy", "score"])
        for s in scores:
            w.writerow([s.model_id, str(s.metric), s.strategy, _fmt(s.value)])


def render_report_md(rt: ResultTable) -> str:
    """One Markdown table per (metric, strategy): rows are sources,
    columns the targets alphabetically plus an Average column; the
    source == target diagonal shows '-'. Levels are averaged out."""
    grouped: dict[tuple, dict[tuple, list[float]]] = {}
    for c in rt.cells:
        grouped.setdefault((c.metric, c.strategy), {}).setdefault(
            (c.source, c.target), []
        ).append(c.tau_w)
    lines = ["# Weighted Kendall's tau by metric", ""]
    for (metric, strategy) in sorted(grouped, key=lambda k: (str(k[0]), k[1])):
        table = grouped[(metric, strategy)]
        sources = sorted({s for s, _ in table})
        targets = sorted({t for _, t in table})
        lines.append(f"## {metric} ({strategy}-training)")
        lines.append("")
        lines.append("| Source | " + " | ".join(targets) + " | Average |")
        lines.append("|---" * (len(targets) + 2) + "|")
        for src in sources:
            row = [src]
            vals = []
            for tgt in targets:
                cell = table.get((src, tgt))
                if cell is None:
                    row.append("-")
                else:
                    v = sum(cell) / len(cell)
                    vals.append(v)
                    row.append(f"{v:.3f}")
            avg = f"{sum(vals) / len(vals):.3f}" if vals else "-"
            row.append(avg)
            lines.append("| " + " | ".join(row) + " |")
        lines.append("")
    return "\n".join(lines)


def write_outputs(rt: ResultTable, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_cells_csv(rt, out / "cells.csv")
    write_aggregates_csv(rt, out / "aggregates.csv")
    write_sigma_csv(rt, out / "sigma.csv")
    (out / "report.md").write_text(render_report_md(rt), "utf-8")
    (out / "warnings.txt").write_text(
        "".join(w + "\n" for w in rt.warnings), "utf-8"
    )
