"""Cohort analytics: overlay maps, axis histograms, midline profile, pixel budget."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .manifest import WV_RAW, CohortManifest
from .volumes import MaskGrid


@dataclass
class OverlayMap:
    """In-plane accumulation of region and lesion masks over all slices and patients.

    region_counts[x, y] is the number of (slice, patient) pairs with a
    non-zero region-mask voxel at that in-plane position; same for lesions.
    """

    region_counts: np.ndarray
    lesion_counts: np.ndarray
    n_patients: int
    n_slices: int


@dataclass
class AxisHistogram:
    direction: str  # "x" or "y"
    values: np.ndarray


@dataclass
class MidlineProfile:
    """Per-column vertical extent E(x) of the aggregated region map."""

    extent: np.ndarray
    h_max_mid: int


def overlay_map(mask_pairs: list[tuple[MaskGrid, MaskGrid]]) -> OverlayMap:
    if not mask_pairs:
        raise DataError("no masks to accumulate")
    width, height = mask_pairs[0][0].width, mask_pairs[0][0].height
    region = np.zeros((width, height), dtype=np.int64)
    lesion = np.zeros((width, height), dtype=np.int64)
    n_slices = 0
    for region_mask, lesion_mask in mask_pairs:
        for mask in (region_mask, lesion_mask):
            if (mask.width, mask.height) != (width, height):
                raise DataError(
                    f"mask in-plane shape {(mask.width, mask.height)} "
                    f"does not match {(width, height)}"
                )
        region += region_mask.data.sum(axis=2, dtype=np.int64)
        lesion += lesion_mask.data.sum(axis=2, dtype=np.int64)
        n_slices += region_mask.depth
    return OverlayMap(
        region_counts=region,
        lesion_counts=lesion,
        n_patients=len(mask_pairs),
        n_slices=n_slices,
    )


def axis_histograms(overlay: OverlayMap) -> tuple[AxisHistogram, AxisHistogram]:
    """Lesion-map intensity summed along the other axis."""
    x_hist = overlay.lesion_counts.sum(axis=1)
    y_hist = overlay.lesion_counts.sum(axis=0)
    return AxisHistogram("x", x_hist), AxisHistogram("y", y_hist)


def midline_profile(overlay: OverlayMap) -> MidlineProfile:
    """E(x) = last minus first non-zero row plus one, per column; 0 when empty."""
    present = overlay.region_counts > 0
    width = present.shape[0]
    extent = np.zeros(width, dtype=np.int64)
    for x in range(width):
        rows = np.flatnonzero(present[x])
        if rows.size:
            extent[x] = rows[-1] - rows[0] + 1
    return MidlineProfile(extent=extent, h_max_mid=int(extent.max(initial=0)))


def pixel_budget(manifests: list[CohortManifest]) -> dict:
    """Per-approach voxel counts per patient plus ratios versus WV_RAW."""
    rows = {}
    for man in manifests:
        if not man.patients:
            raise DataError(f"manifest {man.cohort_id} ({man.approach}) has no patients")
        shape = tuple(man.patients[0].shape)
        rows[man.approach] = {
            "shape": list(shape),
            "voxels_per_patient": int(shape[0] * shape[1] * shape[2]),
            "slices_per_patient": int(shape[2]),
            "patients": len(man.patients),
        }
    baseline = rows.get(WV_RAW)
    for row in rows.values():
        if baseline is not None:
            row["voxel_ratio_vs_wv_raw"] = row["voxels_per_patient"] / baseline["voxels_per_patient"]
            row["slice_ratio_vs_wv_raw"] = row["slices_per_patient"] / baseline["slices_per_patient"]
        else:
            row["voxel_ratio_vs_wv_raw"] = None
            row["slice_ratio_vs_wv_raw"] = None
    return rows
