"""Matplotlib figure rendering for the report paths.

Figures are written next to the delimited outputs as PNG files; the Agg
backend keeps rendering deterministic and headless-safe. CSVs stay the
machine contract — these are for eyeballs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .trace import HOURS_PER_WEEK

_DAY_LABELS = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"]
_DPI = 110


def _day_axis(ax):
    ax.set_xticks([d * 24 for d in range(7)])
    ax.set_xticklabels(_DAY_LABELS)
    ax.set_xlim(0, HOURS_PER_WEEK)
    for d in range(1, 7):
        ax.axvline(d * 24, color="0.85", linewidth=0.8, zorder=0)


def save_week_profile(bins, path, title="Weekly arrival profile"):
    fig, ax = plt.subplots(figsize=(8, 3.2))
    ax.bar(range(HOURS_PER_WEEK), list(bins), width=1.0, color="tab:blue")
    _day_axis(ax)
    ax.set_ylabel("relative frequency")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_iit_hist(panels, path, bins=50):
    """One histogram panel per (label, iit_hours_array) pair."""
    fig, axes = plt.subplots(1, len(panels), figsize=(4.5 * len(panels), 3.2), squeeze=False)
    for ax, (label, gaps) in zip(axes[0], panels):
        gaps = np.asarray(gaps, dtype=float)
        if gaps.size:
            ax.hist(gaps, bins=bins, weights=np.full(gaps.size, 1.0 / gaps.size), color="tab:orange")
            ax.set_title(
                f"{label}\nmean {gaps.mean():.2f} h, std {gaps.std():.2f} h, n {gaps.size + 1}"
            )
        else:
            ax.set_title(f"{label} (no intervals)")
        ax.set_xlabel("inter-arrival time (hours)")
        ax.set_ylabel("relative frequency")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_tradeoff(user_curves, aggregate, path, title="Delivery vs connection on-time"):
    """Per-user curves (faint) with the aggregate mean and std error bars."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for curve in user_curves:
        ax.plot(
            [p.on_fraction for p in curve.points],
            [p.delivered_fraction for p in curve.points],
            color="tab:blue",
            alpha=max(0.05, min(0.4, 8 / max(len(user_curves), 1))),
            linewidth=0.8,
        )
    if aggregate is not None:
        xs = [p.on_fraction for p in aggregate.points]
        ax.errorbar(
            xs,
            [p.mean_delivered for p in aggregate.points],
            yerr=[p.std_delivered for p in aggregate.points],
            color="tab:red",
            linewidth=1.6,
            elinewidth=0.7,
            errorevery=max(1, len(xs) // 24),
            label=f"mean of {aggregate.points[0].user_count} users (std bars)",
        )
        ax.legend(loc="lower right")
    ax.plot([0, 1], [0, 1], color="0.7", linestyle="--", linewidth=0.8)
    ax.set_xlabel("fraction of week connection is on (k/168)")
    ax.set_ylabel("fraction delivered in real time")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_delay_hist(delays_s, path, title="Per-message delivery delay"):
    fig, ax = plt.subplots(figsize=(6, 3.6))
    delays = np.asarray(delays_s, dtype=float)
    if delays.size:
        ax.hist(delays, bins=50, color="tab:green")
    ax.set_xlabel("delay (s)")
    ax.set_ylabel("messages")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def save_lifetime_hist(lifetimes_s, path, title="Connection lifetimes"):
    fig, ax = plt.subplots(figsize=(6, 3.6))
    lifetimes = np.asarray(lifetimes_s, dtype=float)
    if lifetimes.size:
        ax.hist(lifetimes, bins=50, color="tab:purple")
    ax.set_xlabel("lifetime (s)")
    ax.set_ylabel("connections")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
