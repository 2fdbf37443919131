"""Figure rendering for run reports.

All functions draw to files (SVG by default) with the Agg backend; nothing
opens a window.  Each returns the path it wrote.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_intensity_curve(path, phi, i_plus, i_minus) -> str:
    """Both output-channel intensities against the relative phase."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(phi, i_plus, label="plus channel")
    ax.plot(phi, i_minus, label="minus channel", linestyle="--")
    ax.set_xlabel("relative phase [rad]")
    ax.set_ylabel("output intensity")
    ax.legend(frameon=False)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return str(path)


def save_waveforms(path, t, curves, xlabel="t", ylabel="amplitude",
                   title=None) -> str:
    """Overlay labeled time series; ``curves`` maps label -> array."""
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    for label, y in curves.items():
        ax.plot(t, y, label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return str(path)


def save_profile(path, z, om01, om02, vartheta, theta) -> str:
    """Control envelopes and both mixing angles along the cell."""
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(6.0, 5.5), sharex=True)
    ax0.plot(z, om01, label="pair-1 control")
    ax0.plot(z, om02, label="pair-2 control", linestyle="--")
    ax0.set_ylabel("control amplitude")
    ax0.legend(frameon=False)
    ax0.grid(alpha=0.3)
    ax1.plot(z, vartheta, label="composition angle")
    ax1.plot(z, theta, label="transfer angle", linestyle="--")
    ax1.set_xlabel("z")
    ax1.set_ylabel("angle [rad]")
    ax1.legend(frameon=False)
    ax1.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return str(path)


def save_loglog(path, x, y, xlabel, ylabel, label=None, guide_slope=None,
                extra=None) -> str:
    """Log-log scatter/line with an optional power-law guide through the
    first point and optional extra labeled curves (dict label -> y)."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ax.loglog(x, y, marker="o", label=label)
    if guide_slope is not None and x.size and y[0] > 0:
        guide = y[0] * (x / x[0]) ** guide_slope
        ax.loglog(x, guide, linestyle=":", color="gray",
                  label=f"slope {guide_slope:g} guide")
    if extra:
        for lab, ycurve in extra.items():
            ax.loglog(x, ycurve, linestyle="--", label=lab)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if label or guide_slope is not None or extra:
        ax.legend(frameon=False)
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return str(path)


def save_histogram(path, values, xlabel, bins=40, vline=None) -> str:
    """Histogram of sampled values with an optional reference line."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.hist(values, bins=bins, color="steelblue", alpha=0.8)
    if vline is not None:
        ax.axvline(vline, color="crimson", linestyle="--", label="true value")
        ax.legend(frameon=False)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("trials")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return str(path)
