"""Figure rendering for the report path. Headless only."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .grid import GridSpec

_PNG_META = {"Software": "ghostsim"}


def _imshow_panel(ax, values: np.ndarray, grid: GridSpec, title: str) -> None:
    half_x = grid.extent_x / 2.0 * 1e3
    half_y = grid.extent_y / 2.0 * 1e3
    im = ax.imshow(
        values,
        origin="lower",
        extent=(-half_x, half_x, -half_y, half_y),
        cmap="inferno",
        interpolation="nearest",
    )
    ax.set_title(title, fontsize=9)
    ax.set_xlabel("x (mm)", fontsize=8)
    ax.set_ylabel("y (mm)", fontsize=8)
    ax.tick_params(labelsize=7)
    plt.colorbar(im, ax=ax, fraction=0.046)


def render_map_grid(path, panels, grid: GridSpec) -> None:
    """2x2 (or fewer) panel figure of image-plane maps.

    panels: sequence of (title, 2-d array).
    """
    n = len(panels)
    ncols = 2 if n > 1 else 1
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(4.2 * ncols, 3.6 * nrows))
    axes = np.atleast_1d(axes).ravel()
    for ax, (title, values) in zip(axes, panels):
        _imshow_panel(ax, values, grid, title)
    for ax in axes[n:]:
        ax.axis("off")
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_PNG_META)
    plt.close(fig)


def render_thermal(path, report, title: str) -> None:
    """Histogram of intensity samples with the exponential-law overlay."""
    centers = np.asarray(report.bin_centers, dtype=np.float64)
    counts = np.asarray(report.counts, dtype=np.float64)
    expected = np.asarray(report.expected_counts, dtype=np.float64)
    width = centers[1] - centers[0] if centers.size > 1 else 1.0
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.bar(centers, counts, width=0.9 * width, color="#777777", label="samples")
    ax.plot(centers, expected, color="#d62728", lw=1.5, label="exponential law")
    ax.set_yscale("log")
    ax.set_ylim(bottom=0.5)
    ax.set_xlabel("intensity")
    ax.set_ylabel("count")
    ax.set_title(f"{title} (KS={report.ks_distance:.3f}, n={report.n_samples})", fontsize=9)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_PNG_META)
    plt.close(fig)


def render_sweep(path, parameter: str, values, nccs) -> None:
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    ax.plot(values, nccs, "o-", color="#1f77b4")
    ax.set_xlabel(parameter)
    ax.set_ylabel("recovered-image ncc")
    ax.set_ylim(-0.05, 1.05)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_PNG_META)
    plt.close(fig)
