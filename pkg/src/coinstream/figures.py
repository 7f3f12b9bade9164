"""Figure rendering for the report path.

Figures are a convenience layer on top of the CSV/JSON outputs, written
next to them; the delimited files remain the machine interface.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def render_report(report, out_dir) -> str:
    """Toss histogram and outcome counts for one experiment."""
    rows = report.rows
    fig, (ax_tosses, ax_outcomes) = plt.subplots(1, 2, figsize=(10, 4))
    tosses = [r.tosses for r in rows]
    ax_tosses.hist(tosses, bins=30, color="steelblue", edgecolor="white")
    ax_tosses.set_xlabel("total tosses per trial")
    ax_tosses.set_ylabel("trials")
    ax_tosses.set_title(report.config.name)

    succ = sum(r.success for r in rows)
    fail = len(rows) - succ
    capped = sum(r.capped for r in rows)
    errs = sum(bool(r.error) for r in rows)
    labels = ["success", "failure", "capped", "error"]
    counts = [succ, fail, capped, errs]
    ax_outcomes.bar(labels, counts, color=["seagreen", "indianred",
                                           "goldenrod", "gray"])
    ax_outcomes.set_ylabel("trials")
    rate = report.aggregates["success_rate"]
    ax_outcomes.set_title(f"success rate {rate:.3f}")
    fig.tight_layout()
    path = os.path.join(out_dir, "report.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_sweep(sweep, out_dir) -> str:
    """Success rate vs C with the pass threshold per grid point."""
    cs = [row["C"] for row in sweep.rows]
    rates = [row["success_rate"] for row in sweep.rows]
    thresholds = [row["threshold"] for row in sweep.rows]
    halfwidths = [row["wilson_halfwidth"] for row in sweep.rows]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.errorbar(cs, rates, yerr=halfwidths, marker="o", color="steelblue",
                label="success rate")
    ax.plot(cs, thresholds, linestyle="--", color="indianred",
            label="1 - delta - slack")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("C")
    ax.set_ylabel("success rate")
    ax.set_title(sweep.config.name)
    if sweep.smallest_passing is not None:
        ax.axvline(sweep.smallest_passing, color="seagreen", alpha=0.5,
                   label=f"smallest passing C = {sweep.smallest_passing:g}")
    ax.legend()
    fig.tight_layout()
    path = os.path.join(out_dir, "sweep.png")
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_walks(traces, out_dir, filename="walks.png") -> str:
    """Overlay a handful of walk traces."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for trace in traces:
        ax.plot(range(len(trace.values)), trace.values, alpha=0.7)
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_xlabel("i")
    ax.set_ylabel("S_i")
    family = traces[0].family if traces else "walk"
    ax.set_title(f"{family} walk sample")
    fig.tight_layout()
    path = os.path.join(out_dir, filename)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
