"""Figure and CSV rendering for evaluation reports.

The report path of the CLI writes, next to the JSON report, a delimited
copy of the metric grid and two matplotlib figures: a heatmap of the whole
combination grid and a per-label-class breakdown of the full combination.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .corpus import LABEL_VALUES
from .metrics import EvalReport

_GRID_COLUMNS = (
    ("micro", "precision"),
    ("micro", "recall"),
    ("micro", "f1"),
    ("macro", "precision"),
    ("macro", "recall"),
    ("macro", "f1"),
)


def write_grid_csv(report: EvalReport, path: str | Path) -> None:
    """Flatten the grid to combination,regime,precision,recall,f1 rows."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["combination", "regime", "precision", "recall", "f1"])
        for name, cell in report.combinations.items():
            for regime in ("micro", "macro"):
                scores = cell[regime]
                writer.writerow(
                    [name, regime, f"{scores.precision:.6f}", f"{scores.recall:.6f}", f"{scores.f1:.6f}"]
                )


def render_grid_heatmap(report: EvalReport, path: str | Path) -> None:
    names = list(report.combinations)
    data = np.array(
        [
            [getattr(report.combinations[name][regime], metric) for regime, metric in _GRID_COLUMNS]
            for name in names
        ]
    )
    fig, ax = plt.subplots(figsize=(7, 0.32 * len(names) + 2))
    image = ax.imshow(data, vmin=0.0, vmax=1.0, cmap="viridis", aspect="auto")
    ax.set_xticks(range(len(_GRID_COLUMNS)))
    ax.set_xticklabels([f"{regime}\n{metric}" for regime, metric in _GRID_COLUMNS], fontsize=8)
    ax.set_yticks(range(len(names)))
    ax.set_yticklabels(names, fontsize=7, family="monospace")
    for i in range(len(names)):
        for j in range(len(_GRID_COLUMNS)):
            value = data[i, j]
            ax.text(
                j,
                i,
                f"{value:.2f}",
                ha="center",
                va="center",
                fontsize=6,
                color="white" if value < 0.6 else "black",
            )
    ax.set_title("Exact-match scores per element combination")
    fig.colorbar(image, ax=ax, shrink=0.6)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_label_breakdown(report: EvalReport, path: str | Path) -> None:
    full_name = "SOAPL"
    by_class = report.counts["labels"][full_name]
    f1s = []
    for value in LABEL_VALUES:
        cell = by_class[value]
        precision = cell["tp"] / cell["n_pred"] if cell["n_pred"] else 0.0
        recall = cell["tp"] / cell["n_gold"] if cell["n_gold"] else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        f1s.append(f1)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(range(len(LABEL_VALUES)), f1s, color="#31688e")
    ax.set_xticks(range(len(LABEL_VALUES)))
    ax.set_xticklabels(LABEL_VALUES, fontsize=8)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("exact-match F1 (full combination)")
    ax.set_title(
        "Per-label F1; headline macro {:.4f} / micro {:.4f}".format(
            report.headline["macro_f1"], report.headline["micro_f1"]
        )
    )
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_report_files(report: EvalReport, report_path: str | Path) -> list[str]:
    """Write the CSV grid and both figures next to the JSON report.

    Output names derive from the report filename stem; the written paths
    are returned for the CLI summary.
    """
    report_path = Path(report_path)
    stem = report_path.stem
    out_dir = report_path.parent
    csv_path = out_dir / f"{stem}_grid.csv"
    heatmap_path = out_dir / f"{stem}_grid.png"
    labels_path = out_dir / f"{stem}_labels.png"
    write_grid_csv(report, csv_path)
    render_grid_heatmap(report, heatmap_path)
    render_label_breakdown(report, labels_path)
    return [str(csv_path), str(heatmap_path), str(labels_path)]
