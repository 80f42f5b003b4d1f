"""
infrastructure/plotting/svg_plots.py

Static SVG figures for suite artifacts: log-log tail plots, martingale
traces and histograms. Output is reproducible: fixed hash salt, no date
metadata, Agg backend.
"""
from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Mapping, Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

logger = logging.getLogger(__name__)

SVG_HASHSALT = "growthfrag"
GOLDEN_RATIO = (math.sqrt(5) - 1.0) / 2.0

plt.rcParams["svg.hashsalt"] = SVG_HASHSALT
plt.rcParams["svg.fonttype"] = "none"
plt.rcParams["font.size"] = 9
plt.rcParams["savefig.bbox"] = "tight"


def _figure(width: float = 5.0, height: Optional[float] = None):
    return plt.subplots(figsize=(width, height or width * GOLDEN_RATIO), facecolor="w")


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.debug("Plot written: %s", path)
    return path


def loglog_tail(
    samples: Mapping[str, Sequence[float]],
    path: Path,
    title: str = "",
    reference_slope: Optional[float] = None,
) -> Path:
    """Empirical survival functions P(X > x) on log-log axes, one curve per label."""
    fig, ax = _figure()
    anchor = None
    for label, values in samples.items():
        x = np.sort(np.asarray(values, dtype=float))
        x = x[np.isfinite(x) & (x > 0)]
        if x.size == 0:
            continue
        surv = 1.0 - np.arange(x.size) / x.size
        ax.loglog(x, surv, drawstyle="steps-post", linewidth=0.8, label=f"{label} (n={x.size})")
        if anchor is None:
            anchor = (float(np.quantile(x, 0.9)), 0.1, float(x[-1]))
    if reference_slope is not None and anchor is not None:
        x0, s0, x1 = anchor
        xs = np.geomspace(x0, max(x1, x0 * 10), 20)
        ax.loglog(xs, s0 * (xs / x0) ** (-reference_slope), "k--", linewidth=0.8, label=f"slope −{reference_slope:.3g}")
    ax.set_xlabel("x")
    ax.set_ylabel("P(X > x)")
    ax.set_title(title)
    ax.legend(frameon=False, fontsize=7)
    return _save(fig, path)


def trace_plot(
    times: Sequence[float],
    series: Mapping[str, tuple[Sequence[float], Sequence[float]]],
    path: Path,
    title: str = "",
    xlabel: str = "t",
    ylabel: str = "mean",
    reference: Optional[float] = None,
    loglog: bool = False,
) -> Path:
    """Means with ±3 SE bands against a time or generation grid."""
    fig, ax = _figure()
    t = np.asarray(times, dtype=float)
    for label, (means, ses) in series.items():
        m = np.asarray(means, dtype=float)
        s = np.asarray(ses, dtype=float)
        ax.plot(t, m, marker="o", markersize=3, linewidth=0.8, label=label)
        ax.fill_between(t, m - 3 * s, m + 3 * s, alpha=0.2)
    if reference is not None:
        ax.axhline(reference, color="k", linestyle="--", linewidth=0.8)
    if loglog:
        ax.set_xscale("log")
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(frameon=False, fontsize=7)
    return _save(fig, path)


def histogram_plot(
    samples: Mapping[str, Sequence[float]],
    path: Path,
    title: str = "",
    xlabel: str = "value",
    bins: int = 40,
    weights: Optional[Mapping[str, Sequence[float]]] = None,
) -> Path:
    """Overlaid density histograms on common bins."""
    fig, ax = _figure()
    finite = [np.asarray(v, dtype=float) for v in samples.values()]
    pooled = np.concatenate([v[np.isfinite(v)] for v in finite]) if finite else np.zeros(1)
    edges = np.histogram_bin_edges(pooled if pooled.size else np.zeros(1), bins=bins)
    for label, values in samples.items():
        v = np.asarray(values, dtype=float)
        w = None if weights is None or label not in weights else np.asarray(weights[label], dtype=float)
        keep = np.isfinite(v)
        ax.hist(v[keep], bins=edges, weights=None if w is None else w[keep], density=True,
                histtype="step", linewidth=0.9, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("density")
    ax.set_title(title)
    ax.legend(frameon=False, fontsize=7)
    return _save(fig, path)


def bar_plot(counts: Mapping[int, float], path: Path, title: str = "", xlabel: str = "generation") -> Path:
    fig, ax = _figure()
    keys = sorted(counts)
    ax.bar(keys, [counts[k] for k in keys], color="0.4")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("frequency")
    ax.set_title(title)
    return _save(fig, path)
