"""Render analysis results as PNG figures.

Only the CLI imports this module, and only behind --plots, so matplotlib
stays optional at library-use time.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analytics import AxisHistogram, MidlineProfile, OverlayMap


def save_overlay_png(overlay: OverlayMap, path: Path, title: str = "") -> Path:
    """Region map in gray with the lesion map overlaid in color."""
    fig, ax = plt.subplots(figsize=(6, 6))
    region = overlay.region_counts.T  # imshow wants (rows=y, cols=x)
    lesion = np.ma.masked_where(overlay.lesion_counts.T == 0, overlay.lesion_counts.T)
    im_region = ax.imshow(region, cmap="gray", origin="lower", interpolation="nearest")
    im_lesion = ax.imshow(lesion, cmap="hot", origin="lower", interpolation="nearest")
    fig.colorbar(im_region, ax=ax, fraction=0.046, label="region count")
    fig.colorbar(im_lesion, ax=ax, fraction=0.046, label="lesion count")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def save_histograms_png(x_hist: AxisHistogram, y_hist: AxisHistogram,
                        path: Path, title: str = "") -> Path:
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    axes[0].plot(x_hist.values)
    axes[0].set_xlabel("x")
    axes[0].set_ylabel("lesion intensity")
    axes[1].plot(y_hist.values)
    axes[1].set_xlabel("y")
    axes[1].set_ylabel("lesion intensity")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def save_midline_png(profile: MidlineProfile, path: Path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(profile.extent)
    ax.axhline(profile.h_max_mid, linestyle="--", linewidth=0.8,
               label=f"max extent = {profile.h_max_mid}")
    ax.set_xlabel("x")
    ax.set_ylabel("vertical extent E(x)")
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def save_budget_png(budget: dict, path: Path) -> Path:
    """Bar chart of voxels per patient across approaches."""
    approaches = list(budget.keys())
    voxels = [budget[a]["voxels_per_patient"] for a in approaches]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(approaches, voxels)
    ax.set_ylabel("voxels per patient")
    for i, v in enumerate(voxels):
        ax.text(i, v, f"{v:,}", ha="center", va="bottom", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
