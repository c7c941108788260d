"""Life-cycle figures rendered to SVG files."""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .records import DEFECTIVE, CommitRecord  # noqa: E402

plt.rcParams["svg.hashsalt"] = "jitdp"

MONTH_SECONDS = 30 * 86400


def monthly_counts(records: Sequence[CommitRecord],
                   month_days: int = 30) -> tuple[list[int], list[int], list[int]]:
    """Per-month (30-day bins from the first commit) clean and defective
    commit counts. Returns (months, clean, defective)."""
    if not records:
        return [], [], []
    t0 = min(r.timestamp for r in records)
    span = month_days * 86400
    last = max((r.timestamp - t0) // span for r in records)
    months = list(range(int(last) + 1))
    clean = [0] * len(months)
    defective = [0] * len(months)
    for r in records:
        bin_ = int((r.timestamp - t0) // span)
        if r.label == DEFECTIVE:
            defective[bin_] += 1
        else:
            clean[bin_] += 1
    return months, clean, defective


def plot_lifecycle(records: Sequence[CommitRecord], out_path: Path | str,
                   month_days: int = 30, marker_commit: int = 150,
                   title: Optional[str] = None) -> Path:
    """Stacked monthly clean/defective bars with a vertical marker at the
    timestamp of the ``marker_commit``-th commit (skipped when the project
    has fewer commits)."""
    if not records:
        raise ValueError("cannot plot an empty commit list")
    out_path = Path(out_path)
    months, clean, defective = monthly_counts(records, month_days)

    fig, ax = plt.subplots(figsize=(9.0, 3.6))
    ax.bar(months, clean, width=0.9, color="0.2", label="clean")
    ax.bar(months, defective, width=0.9, bottom=clean, color="tab:red",
           label="defective")
    if len(records) >= marker_commit:
        t0 = min(r.timestamp for r in records)
        ordered = sorted(r.timestamp for r in records)
        marker_ts = ordered[marker_commit - 1]
        x = (marker_ts - t0) / (month_days * 86400)
        ax.axvline(x, color="green", linestyle="--", linewidth=1.2,
                   label=f"commit {marker_commit}")
    ax.set_xlabel("project month")
    ax.set_ylabel("commits")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", frameon=False)
    fig.tight_layout()
    fig.savefig(out_path, format="svg")
    plt.close(fig)
    return out_path
