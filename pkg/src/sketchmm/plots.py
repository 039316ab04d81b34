"""Figure rendering for experiment reports.

Each experiment's report path writes one PNG next to its delimited output.
The Agg backend is forced so rendering works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import (
    CorrectnessRun,
    GridSearchResult,
    ParameterCategory,
    TimingRecord,
    VariancePoint,
    summarize_timings,
)

_STYLE = {
    "figure.figsize": (7.0, 4.5),
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _styled_figure(nrows: int = 1, ncols: int = 1):
    with plt.rc_context(_STYLE):
        return plt.subplots(nrows, ncols, squeeze=False)


def save_figure(fig, path) -> None:
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def variance_figure(points_by_label: dict[str, list[VariancePoint]]):
    """Log-log sample variance vs sketch width, with the 1/b bound per series."""
    fig, axes = _styled_figure()
    ax = axes[0][0]
    for idx, (label, points) in enumerate(sorted(points_by_label.items())):
        bs = [p.b for p in points]
        color = f"C{idx}"
        ax.plot(bs, [p.sample_var for p in points], "o-", color=color, label=label)
        ax.plot(bs, [p.bound for p in points], "--", color=color, alpha=0.5,
                label=f"{label} bound")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("sketch width b")
    ax.set_ylabel("estimate variance")
    ax.set_title("Sample variance against the Frobenius bound")
    ax.legend(fontsize=8)
    return fig


def correctness_figure(run: CorrectnessRun):
    """Per-repetition recovery fractions for the four counts."""
    fig, axes = _styled_figure()
    ax = axes[0][0]
    reps = np.arange(1, len(run.reports) + 1)
    series = {
        "big |est| >= 0.5": [r.big_above_half / max(r.n_big, 1) for r in run.reports],
        "small |est| <= 0.5": [r.small_below_half / max(r.n_small, 1) for r in run.reports],
        "big err <= 0.1": [r.big_eps01 / max(r.n_big, 1) for r in run.reports],
        "small err <= 0.1": [r.small_eps01 / max(r.n_small, 1) for r in run.reports],
    }
    for label, values in series.items():
        ax.plot(reps, values, "o-", markersize=3, label=label)
    ax.set_xlabel("repetition")
    ax.set_ylabel("fraction")
    ax.set_ylim(-0.02, 1.05)
    ax.set_title(
        f"{run.instance_kind} n={run.n} b={run.params.b} d={run.params.d} "
        f"{run.params.transform}: {run.category.label}"
    )
    ax.legend(fontsize=8, loc="lower left")
    return fig


def gridsearch_figure(result: GridSearchResult):
    """Category heatmap over the (c_d, c_b) grid; Pareto points outlined."""
    cds = sorted({p.c_d for p in result.points})
    cbs = sorted({p.c_b for p in result.points})
    grid = np.full((len(cds), len(cbs)), np.nan)
    for p in result.points:
        grid[cds.index(p.c_d), cbs.index(p.c_b)] = int(p.category)
    fig, axes = _styled_figure()
    ax = axes[0][0]
    ax.grid(False)
    im = ax.imshow(grid, origin="lower", cmap="viridis", vmin=0, vmax=4, aspect="auto")
    ax.set_xticks(range(len(cbs)), [f"{v:g}" for v in cbs])
    ax.set_yticks(range(len(cds)), [f"{v:g}" for v in cds])
    ax.set_xlabel("c_b")
    ax.set_ylabel("c_d")
    pareto_keys = {(p.c_d, p.c_b) for p in result.pareto}
    for p in result.points:
        marker = "*" if (p.c_d, p.c_b) in pareto_keys else ""
        ax.text(
            cbs.index(p.c_b), cds.index(p.c_d), f"{p.category.label}{marker}",
            ha="center", va="center", fontsize=7, color="white",
        )
    fig.colorbar(
        im, ax=ax,
        ticks=range(5),
        format=lambda v, _: ParameterCategory(int(v)).label,
    )
    ax.set_title("Parameter grid categories (* = Pareto-optimal)")
    return fig


def scaling_figure(records: list[TimingRecord]):
    """Median seconds vs n per (transform, parameter pair), log-log."""
    fig, axes = _styled_figure()
    ax = axes[0][0]
    summaries = summarize_timings(records)
    series: dict[str, list[tuple[int, float, float, float]]] = {}
    for row in summaries:
        if row["reps"] == 0:
            continue
        label = f"{row['transform']} c_d={row['c_d']:g} c_b={row['c_b']:g}"
        if row["transform"] == "gemm":
            label = "gemm"
        series.setdefault(label, []).append(
            (row["n"], row["min_seconds"], row["median_seconds"], row["max_seconds"])
        )
    for label, rows in sorted(series.items()):
        rows.sort()
        ns = [r[0] for r in rows]
        med = [r[2] for r in rows]
        lo = [r[2] - r[1] for r in rows]
        hi = [r[3] - r[2] for r in rows]
        ax.errorbar(ns, med, yerr=[lo, hi], fmt="o-", capsize=3, label=label)
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("seconds (median, min-max bars)")
    ax.set_title("Compress + decompress wall time")
    if series:
        ax.legend(fontsize=8)
    return fig
