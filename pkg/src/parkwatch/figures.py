"""Report figures: availability over time and scoring summaries as PNG files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .detection import DetectionReport
from .simulator import ScoreSummary


def write_availability_figure(report: DetectionReport, path: str | Path) -> None:
    """Step plot of the availability counter across the run."""
    frames = [s.frame_index for s in report.timeline]
    available = [s.available for s in report.timeline]
    total = report.final.total
    fig, ax = plt.subplots(figsize=(8, 3))
    ax.step(frames, available, where="post", color="#2a7d2a")
    ax.set_xlabel("frame")
    ax.set_ylabel("available slots")
    ax.set_ylim(-0.5, total + 0.5)
    ax.set_yticks(range(total + 1))
    ax.set_title(f"lot {report.lot_id}: {report.final.available}/{total} available at end")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def write_agreement_figure(summary: ScoreSummary, path: str | Path) -> None:
    """Bar chart of per-slot agreement with scripted ground truth."""
    slots = sorted(summary.per_slot)
    values = [summary.per_slot[s] for s in slots]
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.bar([str(s) for s in slots], values, color="#4a6fa5")
    ax.axhline(1.0, color="#888", linewidth=0.8, linestyle="--")
    ax.set_xlabel("slot")
    ax.set_ylabel("agreement")
    ax.set_ylim(0, 1.05)
    ax.set_title(f"overall agreement {summary.overall:.3f}")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
