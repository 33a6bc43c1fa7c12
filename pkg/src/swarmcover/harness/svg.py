"""Static SVG figures drawn from the study CSVs (never from in-memory results)."""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

# fixed ids and no timestamp, so re-plotting the same CSV gives the same file
matplotlib.rcParams["svg.hashsalt"] = "swarmcover"
_META = {"Date": None}


def _rows(path: Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return path


def plot_coverage(summary_csv: Path, out: Path) -> Path:
    series: dict[str, list[tuple[int, float]]] = defaultdict(list)
    for r in _rows(summary_csv):
        series[r["scenario"]].append((int(r["N"]), float(r["mean_coverage_rate"])))
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, pts in series.items():
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=f"M={label}")
    ax.axhline(0.9, color="grey", lw=0.8, ls="--")
    ax.set_xlabel("Number of hovering points N")
    ax.set_ylabel("Coverage rate")
    ax.set_ylim(0, 1.02)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, out)


def plot_convergence(curves_csv: Path, out: Path) -> Path:
    series: dict[str, list[tuple[int, float]]] = defaultdict(list)
    optimal = None
    for r in _rows(curves_csv):
        series[r["method"]].append((int(r["episode"]), float(r["mean_steps"])))
        optimal = float(r["mean_optimal_steps"])
    fig, ax = plt.subplots(figsize=(6, 4))
    for method, pts in series.items():
        ax.plot([p[0] for p in pts], [p[1] for p in pts], lw=0.8, label=method)
    if optimal is not None:
        ax.axhline(optimal, color="black", lw=0.8, ls="--", label="BFS optimum")
    ax.set_xlabel("Episode")
    ax.set_ylabel("Steps (mean over runs)")
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, out)


def plot_loss(summary_csv: Path, out: Path) -> Path:
    table: dict[str, dict[int, float]] = defaultdict(dict)
    for r in _rows(summary_csv):
        if r["mean_loss_m"]:
            table[r["method"]][int(r["N"])] = float(r["mean_loss_m"])
    ns = sorted({n for d in table.values() for n in d})
    methods = list(table)
    width = 0.8 / max(len(methods), 1)
    fig, ax = plt.subplots(figsize=(6, 4))
    for i, m in enumerate(methods):
        xs = [k + i * width for k, n in enumerate(ns) if n in table[m]]
        ys = [table[m][n] for n in ns if n in table[m]]
        ax.bar(xs, ys, width=width, label=m)
    ax.set_xticks([k + 0.4 - width / 2 for k in range(len(ns))])
    ax.set_xticklabels([f"N={n}" for n in ns])
    ax.set_ylabel("Trajectory loss (m)")
    ax.set_yscale("log")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, out)
