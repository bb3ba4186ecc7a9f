"""Student progress reports: delimited output plus rendered figures.

The report path writes a per-week CSV next to a set of PNG figures
(weekly adherence with its color band, the three model scores, completed
habit loops per category) so an instructor can eyeball a student's
trajectory without the API. Rendering uses the Agg backend; no display is
ever required.
"""
from __future__ import annotations

import csv
import os
from typing import Dict, List, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .engine import Engine

BAND_COLORS = {"red": "#d9534f", "amber": "#f0ad4e", "green": "#5cb85c", None: "#999999"}


def write_week_csv(metrics: dict, path: str) -> str:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["week", "scheduled", "checked_out", "missed", "adherence", "band"])
        for tag, row in sorted(metrics["weeks"].items()):
            adherence = "" if row["adherence"] is None else f"{row['adherence']:.4f}"
            writer.writerow(
                [tag, row["scheduled"], row["checked_out"], row["missed"], adherence, row["band"] or ""]
            )
    return path


def plot_adherence(metrics: dict, path: str) -> Optional[str]:
    weeks = sorted(metrics["weeks"])
    if not weeks:
        return None
    values = [metrics["weeks"][w]["adherence"] for w in weeks]
    bands = [metrics["weeks"][w]["band"] for w in weeks]
    fig, ax = plt.subplots(figsize=(8, 3.2))
    xs = range(len(weeks))
    heights = [v if v is not None else 0.0 for v in values]
    ax.bar(xs, heights, color=[BAND_COLORS[b] for b in bands], width=0.7)
    ax.axhline(0.34, color="#bbbbbb", linewidth=0.8, linestyle="--")
    ax.axhline(0.67, color="#bbbbbb", linewidth=0.8, linestyle="--")
    ax.set_xticks(list(xs))
    ax.set_xticklabels([w.split("-")[-1] for w in weeks], fontsize=8)
    ax.set_ylim(0, 1.0)
    ax.set_ylabel("adherence")
    ax.set_title(f"Weekly schedule adherence: {metrics['student_id']}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_scores(metrics: dict, path: str) -> Optional[str]:
    scores = metrics.get("scores")
    if not scores:
        return None
    labels = list(scores)
    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.bar(range(len(labels)), [scores[k] for k in labels], color="#5b9bd5", width=0.6)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels([l.replace("_", "\n") for l in labels], fontsize=8)
    ax.set_ylabel("model score")
    ax.set_title(f"Performance model scores: {metrics['student_id']}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_cycles(metrics: dict, path: str) -> str:
    cycles = metrics["cycles_completed"]
    labels = list(cycles)
    fig, ax = plt.subplots(figsize=(6, 3.2))
    ax.bar(range(len(labels)), [cycles[k] for k in labels], color="#8064a2", width=0.6)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels([l.replace("_", "\n") for l in labels], fontsize=8)
    ax.set_ylabel("completed habit loops")
    ax.set_title(f"Habit loops completed: {metrics['student_id']}")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_report(engine: Engine, student_id: str, out_dir: str) -> Dict[str, List[str]]:
    """Write the CSV and figures for one student; returns the file lists."""
    metrics = engine.metrics(student_id)
    os.makedirs(out_dir, exist_ok=True)
    csv_path = write_week_csv(metrics, os.path.join(out_dir, f"report_{student_id}.csv"))
    figures = []
    for plot, name in (
        (plot_adherence, f"adherence_{student_id}.png"),
        (plot_scores, f"scores_{student_id}.png"),
        (plot_cycles, f"cycles_{student_id}.png"),
    ):
        result = plot(metrics, os.path.join(out_dir, name))
        if result:
            figures.append(result)
    return {"csv": [csv_path], "figures": figures, "metrics": metrics}
