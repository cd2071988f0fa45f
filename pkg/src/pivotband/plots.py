"""Matplotlib rendering of coverage tables and region boundaries."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = ["save_coverage_figure", "save_region_figure"]

_METHOD_ORDER = ("pivot", "sandwich", "hc1", "hc2", "hc3", "hc4", "hc5", "mle_info")


def _method_sort_key(method: str) -> tuple[int, str]:
    try:
        return (_METHOD_ORDER.index(method), method)
    except ValueError:
        return (len(_METHOD_ORDER), method)


def save_coverage_figure(rows, out_path: str, alpha: float | None = None, title: str | None = None) -> str:
    """Plot coverage against sample size, one line per method."""
    rows = list(rows)
    if not rows:
        raise ValueError("no coverage rows to plot")
    methods = sorted({r["method"] for r in rows}, key=_method_sort_key)

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    for method in methods:
        sub = sorted((r for r in rows if r["method"] == method), key=lambda r: r["n"])
        ns = [r["n"] for r in sub]
        cov = [r["coverage"] for r in sub]
        err = [r["mc_stderr"] for r in sub]
        ax.errorbar(ns, cov, yerr=err, marker="o", markersize=3.5, capsize=2, label=method)
    if alpha is not None:
        ax.axhline(1.0 - alpha, color="black", linestyle="--", linewidth=0.8)
    ax.set_xlabel("sample size n")
    ax.set_ylabel("empirical coverage")
    ax.set_title(title or f"coverage: {rows[0]['scenario']}")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def save_region_figure(boundaries, center, out_path: str, title: str | None = None) -> str:
    """Plot closed 2-d region boundaries around the fitted center.

    ``boundaries`` maps method name to a sequence of (direction, radius)
    pairs; infinite radii are skipped.
    """
    fig, ax = plt.subplots(figsize=(5.5, 5.5))
    center = np.asarray(center, dtype=float)
    for method in sorted(boundaries, key=_method_sort_key):
        pts = [
            center - r * np.asarray(u, dtype=float)
            for u, r in boundaries[method]
            if np.isfinite(r)
        ]
        if not pts:
            continue
        loop = np.vstack([*pts, pts[0]])
        ax.plot(loop[:, 0], loop[:, 1], linewidth=1.2, label=method)
    ax.plot([center[0]], [center[1]], marker="+", color="black", markersize=10)
    ax.set_xlabel("coefficient 1")
    ax.set_ylabel("coefficient 2")
    ax.set_title(title or "confidence region boundaries")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    ax.set_aspect("equal", adjustable="datalim")
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
