"""Best-effort SVG charts next to the CSV outputs.

The CSVs are the contract; these exist so a run can be eyeballed without
further tooling.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .deltaq import DeltaQ

__all__ = ["save_cdf_chart", "save_line_chart", "save_heatmap_chart"]


def save_cdf_chart(curves: list[tuple[str, DeltaQ]], path, title="", xlabel="delay (us)"):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, dist in curves:
        if dist.atom_count == 0:
            continue
        x = np.concatenate(([dist.delays[0]], dist.delays))
        y = np.concatenate(([0.0], np.cumsum(dist.masses)))
        ax.step(x, y, where="post", label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("cumulative probability")
    ax.set_ylim(0.0, 1.05)
    if title:
        ax.set_title(title)
    if len(curves) > 1:
        ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def save_line_chart(x, series: dict[str, np.ndarray], path, xlabel, ylabel, title="", logx=False):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label, y in series.items():
        ax.plot(x, y, marker="o", label=label)
    if logx:
        ax.set_xscale("log", base=2)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(series) > 1:
        ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def save_heatmap_chart(matrix, x_values, y_values, path, xlabel, ylabel, title=""):
    matrix = np.asarray(matrix, dtype=float)
    span = float(np.max(np.abs(matrix))) or 1.0
    fig, ax = plt.subplots(figsize=(8, 4.5))
    image = ax.imshow(
        matrix,
        origin="lower",
        aspect="auto",
        cmap="RdBu_r",
        vmin=-span,
        vmax=span,
        extent=(min(x_values), max(x_values), min(y_values), max(y_values)),
    )
    fig.colorbar(image, ax=ax, label="% change")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
