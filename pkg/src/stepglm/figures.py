"""Matplotlib renderings of an efficiency-experiment report.

Written next to the delimited output by the bench command: MSE ratios
and CI coverage per coordinate, and a one-step vs full-MLE timing bar.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_VARIANTS = [("onestep_subsample", "scaled subsample info"),
             ("onestep_full", "full-data info")]


def _coord_series(summary, exponent, key_fmt):
    labels = summary["labels"]
    out = {}
    for est, _ in _VARIANTS:
        vals = []
        for lbl in labels:
            entry = summary["coordinates"].get(f"{exponent:.6g}|{lbl}", {})
            vals.append(entry.get(key_fmt.format(est=est), np.nan))
        out[est] = vals
    return labels, out


def plot_mse_ratio(summary, exponent, path):
    labels, series = _coord_series(summary, exponent, "mse_ratio_{est}")
    x = np.arange(len(labels))
    fig, ax = plt.subplots(figsize=(1.6 + 1.2 * len(labels), 3.6))
    for i, (est, name) in enumerate(_VARIANTS):
        ax.bar(x + (i - 0.5) * 0.35, series[est], width=0.35, label=name)
    ax.axhline(1.0, color="k", lw=0.8, ls="--")
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=20, ha="right")
    ax.set_ylabel("MSE ratio vs full MLE")
    ax.set_title(f"One-step efficiency (exponent {exponent:.4g})")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_coverage(summary, exponent, path):
    labels, series = _coord_series(summary, exponent, "coverage_{est}")
    x = np.arange(len(labels))
    fig, ax = plt.subplots(figsize=(1.6 + 1.2 * len(labels), 3.6))
    for i, (est, name) in enumerate(_VARIANTS):
        ax.bar(x + (i - 0.5) * 0.35, series[est], width=0.35, label=name)
    ax.axhline(0.95, color="k", lw=0.8, ls="--")
    ax.set_ylim(0, 1.05)
    ax.set_xticks(x)
    ax.set_xticklabels(labels, rotation=20, ha="right")
    ax.set_ylabel("95% CI coverage")
    ax.set_title(f"Coverage of the truth (exponent {exponent:.4g})")
    ax.legend(frameon=False, fontsize=8, loc="lower right")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_timings(summary, path):
    times = summary.get("mean_time_s", {})
    names = {"onestep_subsample": "one-step", "full_mle": "full MLE (iterated)"}
    keys = [k for k in names if k in times]
    fig, ax = plt.subplots(figsize=(4.0, 3.2))
    ax.bar(range(len(keys)), [times[k] for k in keys], width=0.6, color="tab:blue")
    ax.set_xticks(range(len(keys)))
    ax.set_xticklabels([names[k] for k in keys])
    ax.set_ylabel("mean wall time (s)")
    ax.set_title("Fit cost per replicate")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_figures(report, outdir) -> list:
    """Write all figures for a report; returns the file paths."""
    os.makedirs(outdir, exist_ok=True)
    paths = []
    for e in report.exponents:
        tag = f"{e:.4g}".replace(".", "p")
        p1 = os.path.join(outdir, f"mse_ratio_{tag}.png")
        plot_mse_ratio(report.summary, e, p1)
        p2 = os.path.join(outdir, f"coverage_{tag}.png")
        plot_coverage(report.summary, e, p2)
        paths += [p1, p2]
    p3 = os.path.join(outdir, "timings.png")
    plot_timings(report.summary, p3)
    paths.append(p3)
    return paths
