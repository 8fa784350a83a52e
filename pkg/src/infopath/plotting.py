"""Figures written next to the CSV/JSON reports."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

LABEL_COLORS = {"C": "#f28e2b", "U": "#e15759", "D1": "#9ecae9", "D2": "#1f5fa8"}
START_COLOR = "#59a14f"

# PNG metadata would otherwise embed the matplotlib version
_SAVE = {"dpi": 120, "metadata": {"Software": None}}


def _style(ax):
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    ax.tick_params(direction="out", labelsize=9)


def histogram_figure(bins, path, title="", color="#4e79a7", ylabel="count"):
    fig, ax = plt.subplots(figsize=(5, 3.2))
    if bins:
        lo = np.array([b[0] for b in bins])
        hi = np.array([b[1] for b in bins])
        ax.bar(lo, [b[2] for b in bins], width=hi - lo, align="edge", color=color, edgecolor="white")
    ax.set_xlabel("terminal entropy (bits)")
    ax.set_ylabel(ylabel)
    ax.set_title(title, fontsize=10)
    _style(ax)
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)
    return Path(path)


def comparison_figure(comparison, rhc_bins, path):
    """Two stacked histograms: exhaustive pmf above, RHC empirical pmf below."""
    ex = comparison["exhaustive"]
    rhc_total = sum(b[2] for b in rhc_bins) or 1.0
    fig, axes = plt.subplots(2, 1, figsize=(5, 5.5), sharex=True)
    for ax, bins, scale, color, name, stats in (
        (axes[0], ex["histogram"], 1.0, "#9c755f", "exhaustive (exact pmf)", ex),
        (axes[1], rhc_bins, 1.0 / rhc_total, "#4e79a7", "receding horizon (empirical)", comparison["rhc"]),
    ):
        if bins:
            lo = np.array([b[0] for b in bins])
            hi = np.array([b[1] for b in bins])
            ax.bar(lo, np.array([b[2] for b in bins]) * scale, width=hi - lo, align="edge",
                   color=color, edgecolor="white")
        if stats.get("mean") is not None:
            ax.axvline(stats["mean"], color="k", lw=1, ls="--")
            ax.set_title(f"{name}: mean {stats['mean']:.2f}, var {stats['variance']:.2f}", fontsize=9)
        ax.set_ylabel("probability")
        _style(ax)
    axes[1].set_xlabel("terminal entropy (bits)")
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)
    return Path(path)


def path_figure(ts, regions, width, path, title=""):
    """Grid world with colored labels and the followed route drawn on top."""
    height = ts.n_regions // width
    fig, ax = plt.subplots(figsize=(0.7 * width + 1, 0.7 * height + 1))
    for q in range(ts.n_regions):
        row, col = divmod(q, width)
        names = [a for i, a in enumerate(ts.ap) if ts.labels[q] >> i & 1]
        face = LABEL_COLORS.get(names[0], "#dddddd") if names else "white"
        if q == ts.q0:
            face = START_COLOR
        ax.add_patch(plt.Rectangle((col, -row - 1), 1, 1, facecolor=face, edgecolor="#888888"))
        if names:
            ax.text(col + 0.5, -row - 0.5, ",".join(names), ha="center", va="center", fontsize=7)
    xs = [q % width + 0.5 for q in regions]
    ys = [-(q // width) - 0.5 for q in regions]
    for i in range(len(regions) - 1):
        ax.annotate("", xy=(xs[i + 1], ys[i + 1]), xytext=(xs[i], ys[i]),
                    arrowprops={"arrowstyle": "->", "color": "red", "lw": 1.5})
    ax.set_xlim(0, width)
    ax.set_ylim(-height, 0)
    ax.set_aspect("equal")
    ax.axis("off")
    if title:
        ax.set_title(title, fontsize=9)
    fig.tight_layout()
    fig.savefig(path, **_SAVE)
    plt.close(fig)
    return Path(path)


def report_figures(report, out) -> list[Path]:
    out = Path(out)
    paths = [histogram_figure(report.histogram, out / "histogram.png",
                              f"{report.mode}: terminal entropy over {len(report.rows)} trials")]
    if report.comparison is not None:
        paths.append(comparison_figure(report.comparison, report.histogram, out / "comparison.png"))
    return paths
