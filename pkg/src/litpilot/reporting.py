"""Figure rendering for CLI report paths (written next to delimited output)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .investigation import SummaryStats  # noqa: E402


def render_year_histogram(stats: SummaryStats, path: str | Path) -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    years = sorted(stats.year_histogram)
    counts = [stats.year_histogram[y] for y in years]
    ax.bar([str(y) for y in years], counts, color="#3b6ea5")
    ax.set_xlabel("publication year")
    ax.set_ylabel("papers")
    ax.set_title(f"Publication years (n={stats.paper_count}, "
                 f"trend {stats.trend_slope:+.2f}/yr)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_mos_bars(means: dict[str, float], path: str | Path,
                    title: str = "MOS by group") -> Path:
    path = Path(path)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    groups = sorted(means)
    ax.bar(groups, [means[g] for g in groups], color="#8a5ea5")
    ax.set_ylim(0, 5)
    ax.set_ylabel("mean opinion score")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
