"""Comparison tables, gnuplot scripts, and rendered figures for reports."""

from __future__ import annotations

import csv
import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .evaluation import MetricsReport

TABLE_COLUMNS = ["estimator", "pd_at_pfa05", "auc", "params", "macs_per_frame"]


def sort_reports(reports: list[MetricsReport]) -> list[MetricsReport]:
    return sorted(reports, key=lambda r: r.auc, reverse=True)


def write_comparison_csv(reports: list[MetricsReport], path) -> None:
    """One row per estimator, best AUC first."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TABLE_COLUMNS)
        for r in sort_reports(reports):
            writer.writerow([r.estimator, repr(r.pd_at_pfa05), repr(r.auc), r.params, r.macs_per_frame])


def write_gnuplot_script(curves: list[tuple[str, Path]], path, png_name: str = "roc_curves_gnuplot.png",
                         pfa_line: float = 0.05) -> None:
    """Overlay ROC CSVs; `curves` pairs a legend label with a CSV path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [
        "set datafile separator ','",
        "set terminal pngcairo size 900,600",
        f"set output '{png_name}'",
        "set xlabel 'false-alarm probability'",
        "set ylabel 'detection probability'",
        "set xrange [0:1]",
        "set yrange [0:1]",
        "set key bottom right",
        f"set arrow from {pfa_line},0 to {pfa_line},1 nohead dt 2 lc rgb 'gray'",
    ]
    plots = []
    for label, csv_path in curves:
        rel = os.path.relpath(Path(csv_path).resolve(), path.parent.resolve())
        plots.append(f"'{rel}' every ::1 using 2:3 with lines title '{label}'")
    lines.append("plot \\")
    lines.append(", \\\n".join("    " + p for p in plots))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def render_roc_figure(reports: list[MetricsReport], path, pfa_line: float = 0.05) -> None:
    fig, ax = plt.subplots(figsize=(7, 5))
    for r in sort_reports(reports):
        ax.plot(r.curve.p_fa, r.curve.p_d, label=f"{r.estimator} (AUC {r.auc:.3f})")
    ax.plot([0, 1], [0, 1], ls=":", c="gray", lw=1)
    ax.axvline(pfa_line, ls="--", c="gray", lw=1)
    ax.set_xlabel("false-alarm probability")
    ax.set_ylabel("detection probability")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_complexity_figure(reports: list[MetricsReport], path) -> None:
    """Detection probability against inference cost (MACs per frame, log scale)."""
    fig, ax = plt.subplots(figsize=(7, 5))
    for r in reports:
        macs = max(r.macs_per_frame, 1)  # baselines report 0; keep them on-axis
        ax.scatter(macs, r.pd_at_pfa05, s=60)
        ax.annotate(r.estimator, (macs, r.pd_at_pfa05), textcoords="offset points",
                    xytext=(6, 4), fontsize=9)
    ax.set_xscale("log")
    ax.set_xlabel("MACs per frame")
    ax.set_ylabel("detection probability at 5% false alarm")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
