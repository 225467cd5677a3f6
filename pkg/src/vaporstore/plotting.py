"""Figure rendering for CLI reports. Figures are written to files only."""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

GOLDEN = (math.sqrt(5) - 1.0) / 2.0

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "lines.linewidth": 1.4,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "image.cmap": "gray",
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}

# No timestamps or version strings in the files, so reruns are byte-identical.
_PNG_METADATA = {"Software": None}


def _figure(width=5.0, height=None, ncols=1, nrows=1):
    height = width * GOLDEN if height is None else height
    return plt.subplots(nrows, ncols, figsize=(width, height), squeeze=False)


def _save(fig, path):
    fig.savefig(path, metadata=_PNG_METADATA)
    plt.close(fig)
    return path


def plot_visibility_curves(curves: dict, path):
    """One line per labelled :class:`VisibilityCurve`, tau in microseconds."""
    with plt.rc_context(STYLE):
        fig, ax = _figure()
        ax = ax[0, 0]
        for label, curve in curves.items():
            ax.plot(curve.taus * 1e6, curve.visibility, "o-", ms=3, label=label)
        ax.set_xlabel(r"storage duration ($\mu$s)")
        ax.set_ylabel("visibility")
        ax.set_ylim(0, 1.05)
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_fit(measured, model_taus, model_vis, path, label="best fit"):
    with plt.rc_context(STYLE):
        fig, ax = _figure()
        ax = ax[0, 0]
        ax.plot(measured.taus * 1e6, measured.visibility, "ko", ms=4, label="measured")
        ax.plot(np.asarray(model_taus) * 1e6, model_vis, "r--", label=label)
        ax.set_xlabel(r"storage duration ($\mu$s)")
        ax.set_ylabel("visibility")
        ax.set_ylim(0, 1.05)
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_intensity_panels(images, titles, grid, path):
    """Side-by-side retrieved-intensity images, each normalized to its own peak."""
    n = len(images)
    half_x, half_y = grid.extent[0] / 2 * 1e3, grid.extent[1] / 2 * 1e3
    with plt.rc_context(STYLE):
        fig, axes = _figure(width=2.0 * n, height=2.2, ncols=n)
        for ax, img, title in zip(axes[0], images, titles):
            peak = img.max()
            ax.imshow(img / peak if peak > 0 else img, extent=(-half_x, half_x, half_y, -half_y), vmin=0, vmax=1)
            ax.set_title(title)
            ax.set_xlabel("x (mm)")
        axes[0, 0].set_ylabel("y (mm)")
        return _save(fig, path)


def plot_traces(traces: dict, path):
    """Input reference and output detector traces in microseconds."""
    with plt.rc_context(STYLE):
        fig, ax = _figure(width=6.0)
        ax = ax[0, 0]
        first = next(iter(traces.values()))
        ax.plot(first.times * 1e6, first.input_power, color="0.6", ls=":", label="input")
        for label, trace in traces.items():
            ax.plot(trace.times * 1e6, trace.power, label=label)
        ax.set_xlabel(r"time ($\mu$s)")
        ax.set_ylabel("probe power (arb.)")
        ax.legend(frameon=False)
        return _save(fig, path)
