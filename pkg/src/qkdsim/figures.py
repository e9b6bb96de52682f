"""Matplotlib rendering for the CLI report paths.

Figures are written to files next to the delimited output; the Agg backend
is forced so this works headless.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .analysis import RunStats
from .combinatorics import EntropyReport

FIG_SIZE = (6.4, 4.0)
DPI = 150


def entropy_rate_figure(reports: list[EntropyReport], alpha: float):
    """Loss rate vs n on a log2 axis, against both asymptotes."""
    ns = [r.n for r in reports]
    fig, ax = plt.subplots(figsize=FIG_SIZE)
    ax.plot(ns, [r.rate for r in reports], "o-", label="exact c/N")
    ax.plot(ns, [r.coarse_asymptote for r in reports], "s--", label="1 / log2 n")
    ax.plot(
        ns,
        [r.refined_asymptote for r in reports],
        "^--",
        label=f"1 / ({alpha:g} log2 n + log2 e)",
    )
    ax.set_xscale("log", base=2)
    ax.set_xlabel("n (sifted key length)")
    ax.set_ylabel("min-entropy loss rate")
    ax.set_title(f"Loss rate of the half-restricted test source (alpha={alpha:g})")
    ax.legend()
    ax.grid(True, alpha=0.3)
    return fig


def agreement_figure(
    stats: RunStats, analytic_bob: float | None, analytic_eve: float | None
):
    """Bob/Eve mean agreement fractions with spreads and analytic markers."""
    fig, ax = plt.subplots(figsize=FIG_SIZE)
    labels, means, stds = ["Bob"], [stats.bob_agreement_mean], [stats.bob_agreement_std]
    if stats.eve_agreement_mean is not None:
        labels.append("Eve")
        means.append(stats.eve_agreement_mean)
        stds.append(stats.eve_agreement_std or 0.0)
    xs = range(len(labels))
    ax.bar(xs, means, yerr=stds, width=0.5, capsize=6, color=["#4477aa", "#cc6677"][: len(xs)])
    for analytic, label in ((analytic_bob, "Bob analytic"), (analytic_eve, "Eve analytic")):
        if analytic is not None and not math.isnan(analytic):
            ax.axhline(analytic, linestyle="--", linewidth=1, color="gray")
            ax.annotate(
                f"{label} = {analytic:g}",
                (0.98, analytic),
                xycoords=("axes fraction", "data"),
                ha="right",
                va="bottom",
                fontsize=8,
                color="gray",
            )
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("agreement fraction with Alice's sifted string")
    ax.set_title(f"Agreement over {stats.trials} trials")
    ax.grid(True, axis="y", alpha=0.3)
    return fig


def save_figure(fig, path) -> None:
    fig.savefig(path, dpi=DPI, bbox_inches="tight")
    plt.close(fig)
