"""Segmentation metrics: confusion counts, Dice/IoU/precision/recall, and
connected-component false-positive / false-negative volume analysis."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import DataError
from .volumes import MaskGrid, VolumeGrid, require_same_geometry

DEFAULT_BINS = (10.0, 20.0)

# 26-connectivity: all neighbors sharing a face, edge, or corner
_STRUCTURE_26 = np.ones((3, 3, 3), dtype=bool)


@dataclass
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise DataError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


@dataclass
class Component:
    kind: str  # "fp" or "fn"
    voxels: int
    volume_mm3: float
    bin: str
    centroid: tuple[float, float, float]
    z_range: tuple[int, int]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "voxels": self.voxels,
            "volume_mm3": self.volume_mm3,
            "bin": self.bin,
            "centroid": list(self.centroid),
            "z_range": list(self.z_range),
        }


@dataclass
class ComponentReport:
    fp_components: list[Component]
    fn_components: list[Component]
    connectivity: int
    threshold: float | None
    bins: tuple[float, float]
    bin_labels: tuple[str, str, str]
    voxel_volume_mm3: float

    def bin_counts(self, kind: str) -> dict[str, int]:
        comps = self.fp_components if kind == "fp" else self.fn_components
        counts = {label: 0 for label in self.bin_labels}
        for comp in comps:
            counts[comp.bin] += 1
        return counts

    def to_dict(self) -> dict:
        return {
            "connectivity": self.connectivity,
            "threshold": self.threshold,
            "bins_mm3": list(self.bins),
            "bin_labels": list(self.bin_labels),
            "voxel_volume_mm3": self.voxel_volume_mm3,
            "fp_components": [c.to_dict() for c in self.fp_components],
            "fn_components": [c.to_dict() for c in self.fn_components],
            "fp_bin_counts": self.bin_counts("fp"),
            "fn_bin_counts": self.bin_counts("fn"),
        }


def binarize(prob: VolumeGrid, threshold: float) -> MaskGrid:
    """Threshold a probability volume; a voxel equal to the threshold maps to 1."""
    data = prob.data
    if float(data.min()) < 0.0 or float(data.max()) > 1.0:
        raise DataError(
            f"probability volume has values outside [0,1]: "
            f"min {float(data.min()):.4g}, max {float(data.max()):.4g}"
        )
    return MaskGrid(
        data=(data >= threshold).astype(np.uint8), spacing=prob.spacing, affine=prob.affine
    )


def confusion(pred: MaskGrid, gt: MaskGrid) -> ConfusionCounts:
    require_same_geometry(pred, gt, "prediction and ground truth")
    p = pred.data.astype(bool)
    g = gt.data.astype(bool)
    tp = int(np.count_nonzero(p & g))
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    tn = int(np.count_nonzero(~p & ~g))
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def _ratio(num: int, den: int) -> float:
    # empty-vs-empty agreement counts as perfect
    return 1.0 if den == 0 else num / den


def dice(c: ConfusionCounts) -> float:
    return _ratio(2 * c.tp, 2 * c.tp + c.fn + c.fp)


def iou(c: ConfusionCounts) -> float:
    return _ratio(c.tp, c.tp + c.fn + c.fp)


def precision(c: ConfusionCounts) -> float:
    return _ratio(c.tp, c.tp + c.fp)


def recall(c: ConfusionCounts) -> float:
    return _ratio(c.tp, c.tp + c.fn)


def bin_labels(bins: tuple[float, float]) -> tuple[str, str, str]:
    b0, b1 = bins
    return (f"V<{b0:g}", f"{b0:g}<=V<{b1:g}", f"V>={b1:g}")


def assign_bin(volume_mm3: float, bins: tuple[float, float]) -> str:
    b0, b1 = bins
    labels = bin_labels(bins)
    if volume_mm3 < b0:
        return labels[0]
    if volume_mm3 < b1:
        return labels[1]
    return labels[2]


def _components(mask: np.ndarray, other: np.ndarray, kind: str,
                voxel_volume: float, bins: tuple[float, float]) -> list[Component]:
    """Connected components of `mask` with zero overlap against `other`."""
    labels, n = ndimage.label(mask, structure=_STRUCTURE_26)
    if n == 0:
        return []
    overlapping = set(np.unique(labels[other.astype(bool)])) - {0}
    pure = [label for label in range(1, n + 1) if label not in overlapping]
    if not pure:
        return []
    counts = np.bincount(labels.ravel(), minlength=n + 1)
    objects = ndimage.find_objects(labels)
    centroids = ndimage.center_of_mass(mask.astype(bool), labels, pure)
    out = []
    for label, centroid in zip(pure, centroids):
        voxels = int(counts[label])
        volume = voxels * voxel_volume
        zslice = objects[label - 1][2]
        out.append(
            Component(
                kind=kind,
                voxels=voxels,
                volume_mm3=volume,
                bin=assign_bin(volume, bins),
                centroid=tuple(float(v) for v in centroid),
                z_range=(int(zslice.start), int(zslice.stop - 1)),
            )
        )
    return out


def component_analysis(
    pred: MaskGrid,
    gt: MaskGrid,
    *,
    threshold: float | None = None,
    bins: tuple[float, float] = DEFAULT_BINS,
) -> ComponentReport:
    """Label 26-connected 3D components and split out pure FP / FN lesions.

    A predicted component with no ground-truth overlap is a false positive;
    a ground-truth component with no predicted overlap is a false negative.
    Components are binned by physical volume, half-open at the boundaries.
    """
    require_same_geometry(pred, gt, "prediction and ground truth")
    if bins[0] >= bins[1]:
        raise DataError(f"bin boundaries must increase, got {bins}")
    voxel_volume = pred.voxel_volume_mm3
    return ComponentReport(
        fp_components=_components(pred.data, gt.data, "fp", voxel_volume, bins),
        fn_components=_components(gt.data, pred.data, "fn", voxel_volume, bins),
        connectivity=26,
        threshold=threshold,
        bins=bins,
        bin_labels=bin_labels(bins),
        voxel_volume_mm3=voxel_volume,
    )
