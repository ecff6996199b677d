"""CSV tables and figures for a benchmark summary.

Three views: how often each negation pattern produced a full patch, how the
chosen patches spread across scenarios, and classification accuracy against
the training fraction.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

from chainpatch.search import PATTERNS

TABLES = ("pattern_histogram", "scenario_distribution", "accuracy_by_fraction")


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def pattern_table(summary) -> str:
    hist = summary["pattern_histogram"]
    return _csv([(p, hist.get(p, 0)) for p in PATTERNS], ("pattern", "full_solutions"))


def scenario_table(summary) -> str:
    dist = summary["scenario_distribution"]
    return _csv([(k, dist[k]) for k in sorted(dist, key=int)], ("scenario", "patches"))


def accuracy_table(summary) -> str:
    rows = [(repr(a["fraction"]), a["entries"], repr(a["mean"]), repr(a["min"]), repr(a["max"]))
            for a in summary["accuracy_by_fraction"]]
    return _csv(rows, ("fraction", "entries", "mean", "min", "max"))


def write_tables(summary, out_dir) -> list:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in (("pattern_histogram.csv", pattern_table(summary)),
                       ("scenario_distribution.csv", scenario_table(summary)),
                       ("accuracy_by_fraction.csv", accuracy_table(summary))):
        (out / name).write_text(text, encoding="utf-8")
        written.append(out / name)
    return written


def write_figures(summary, out_dir) -> list:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    # fixed metadata keeps the PNG bytes stable across runs
    meta = {"Software": None}
    written = []

    hist = summary["pattern_histogram"]
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar(range(len(PATTERNS)), [hist.get(p, 0) for p in PATTERNS], color="tab:blue")
    ax.set_xticks(range(len(PATTERNS)))
    ax.set_xticklabels(PATTERNS, rotation=40, ha="right")
    ax.set_ylabel("full solutions")
    ax.set_title("Negation patterns in full solutions")
    fig.tight_layout()
    fig.savefig(out / "pattern_histogram.png", dpi=100, metadata=meta)
    plt.close(fig)
    written.append(out / "pattern_histogram.png")

    dist = summary["scenario_distribution"]
    keys = sorted(dist, key=int)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.bar([f"S{k}" for k in keys], [dist[k] for k in keys], color="tab:orange")
    ax.set_ylabel("patches")
    ax.set_title("Patches by scenario")
    fig.tight_layout()
    fig.savefig(out / "scenario_distribution.png", dpi=100, metadata=meta)
    plt.close(fig)
    written.append(out / "scenario_distribution.png")

    acc = summary["accuracy_by_fraction"]
    fig, ax = plt.subplots(figsize=(6, 4))
    if acc:
        xs = [a["fraction"] for a in acc]
        means = [a["mean"] for a in acc]
        lo = [a["mean"] - a["min"] for a in acc]
        hi = [a["max"] - a["mean"] for a in acc]
        ax.errorbar(xs, means, yerr=[lo, hi], marker="o", capsize=4)
        ax.set_xscale("log")
        ax.set_xticks(xs)
        ax.set_xticklabels([f"{x:g}" for x in xs])
    ax.set_ylim(0, 1.05)
    ax.set_xlabel("training fraction")
    ax.set_ylabel("accuracy (mean, min to max)")
    ax.set_title("Classification accuracy by training fraction")
    fig.tight_layout()
    fig.savefig(out / "accuracy_by_fraction.png", dpi=100, metadata=meta)
    plt.close(fig)
    written.append(out / "accuracy_by_fraction.png")
    return written


def render_report(summary, out_dir, figures: bool = True) -> list:
    written = write_tables(summary, out_dir)
    if figures:
        written += write_figures(summary, out_dir)
    return written
