"""Figure rendering for sweep and embedding outputs.

Figures are conveniences rendered next to the CSVs, which remain the
interface of record.  The Agg backend keeps rendering headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .trainer import END_TO_END, FUNC_REG

_LABELS = {END_TO_END: "end-to-end", FUNC_REG: "functional regularization"}
_COLORS = {END_TO_END: "tab:red", FUNC_REG: "tab:blue"}

_AXIS_LABELS = {
    "labeled_size": "labeled training points",
    "r": "signal dimension r",
    "d": "input dimension d",
    "none": "labeled training points",
}


def plot_sweep(result, path: str) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 4))
    axis = result.rows[0].axis if result.rows else "none"
    for method in (END_TO_END, FUNC_REG):
        rows = sorted((r for r in result.rows if r.method == method),
                      key=lambda r: r.axis_value)
        x = [r.axis_value for r in rows]
        y = [r.mean_test_mse for r in rows]
        err = [r.std_test_mse for r in rows]
        ax.errorbar(x, y, yerr=err, marker="o", capsize=3,
                    label=_LABELS[method], color=_COLORS[method])
    if axis in ("labeled_size", "none") and len({r.axis_value for r in result.rows}) > 1:
        ax.set_xscale("log")
    ax.set_xlabel(_AXIS_LABELS.get(axis, axis))
    ax.set_ylabel("test MSE")
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_reduction(result, path: str) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 4))
    rows = sorted(result.reductions, key=lambda r: r.axis_value)
    axis = rows[0].axis if rows else "none"
    x = [r.axis_value for r in rows]
    y = [r.reduction for r in rows]
    ax.plot(x, y, marker="s", color="tab:green")
    ax.axhline(0.0, color="gray", lw=0.8)
    ax.set_xlabel(_AXIS_LABELS.get(axis, axis))
    ax.set_ylabel("test MSE reduction")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_embedding(coords: np.ndarray, tags, path: str) -> None:
    fig, ax = plt.subplots(figsize=(5, 5))
    tags = np.asarray(tags)
    for tag in sorted(set(tags.tolist())):
        mask = tags == tag
        ax.scatter(coords[mask, 0], coords[mask, 1], s=14, alpha=0.7,
                   label=_LABELS.get(tag, tag), color=_COLORS.get(tag))
    ax.set_xlabel("dim 1")
    ax.set_ylabel("dim 2")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_bound_table(table, path: str, xlabel: str = "r") -> None:
    fig, ax = plt.subplots(figsize=(5.5, 4))
    x = [row[0] for row in table]
    y = [row[1] for row in table]
    ax.plot(x, y, marker="o", color="tab:purple")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("sample bound reduction")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
