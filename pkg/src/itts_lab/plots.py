"""Static SVG figures rendered from the stage CSVs."""

from __future__ import annotations

from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .drift import read_summary_csv  # noqa: E402
from .mushra import CONDITIONS, RatingSet  # noqa: E402

_LABELS = {"punctuation": "Punctuation", "space": "Space", "function_word": "Function word",
           "content_word": "Content word", "all": "All tokens"}
_MUSHRA_LABELS = {"k1": "k=1", "k2": "k=2", "k4": "k=4", "k6": "k=6", "ref": "Reference"}


def _save(fig, path) -> None:
    # fixed hash salt and no date keep the SVG byte-stable across runs
    with matplotlib.rc_context({"svg.hashsalt": "itts-lab", "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def plot_drift(summary_csv, path) -> None:
    """Mean drift with one-sd error bars against lookahead, one series per category."""
    table = read_summary_csv(summary_csv)
    series = defaultdict(list)
    for (k, cat), row in sorted(table.items()):
        series[cat].append((k, float(row["mean"]), float(row["std"])))
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for i, cat in enumerate(["all", "punctuation", "space", "function_word", "content_word"]):
        pts = series.get(cat)
        if not pts:
            continue
        ks = [p[0] + (i - 2) * 0.06 for p in pts]
        ax.errorbar(ks, [p[1] for p in pts], yerr=[p[2] for p in pts], marker="o", ms=3, capsize=2,
                    lw=1, label=_LABELS.get(cat, cat))
    ax.set_xlabel("lookahead k")
    ax.set_ylabel("cosine distance to full-context vector")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def plot_mushra(ratings: RatingSet, path) -> None:
    """Box plot of scores per condition (retained participants only)."""
    by_cond = defaultdict(list)
    for (_, _, c), v in sorted(ratings.scores.items()):
        by_cond[c].append(v)
    conds = [c for c in CONDITIONS if c in by_cond]
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    ax.boxplot([by_cond[c] for c in conds])
    ax.set_xticks(range(1, len(conds) + 1), [_MUSHRA_LABELS[c] for c in conds])
    ax.set_ylim(0, 100)
    ax.set_ylabel("MUSHRA score")
    fig.tight_layout()
    _save(fig, path)
