"""Optimal-volume crop planning.

Scans the non-zero breast extent of region-masked volumes, takes the
cohort-wide maximum height, rounds it up to a multiple of 32 (model
compatibility), and crops each patient's volume flush to its chest line
with the rounding slack acting as a safe distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .volumes import VolumeGrid


@dataclass
class ExtentReport:
    """Per-patient breast extent along y, scanned from a region-masked volume."""

    patient_id: str
    per_slice_first: list[int | None]
    per_slice_last: list[int | None]
    y_min: int
    y_max: int
    chest_line: int
    required_height: int
    width: int
    height: int
    depth: int
    y_spacing_mm: float

    def to_dict(self) -> dict:
        return {
            "patient_id": self.patient_id,
            "y_min": self.y_min,
            "y_max": self.y_max,
            "chest_line": self.chest_line,
            "required_height": self.required_height,
            "width": self.width,
            "height": self.height,
            "depth": self.depth,
            "y_spacing_mm": self.y_spacing_mm,
        }


@dataclass
class CropPlan:
    """Cohort-wide crop rectangle; height is the only axis reduced."""

    required_height: int
    crop_height: int
    multiple: int
    safe_distance_px: int
    safe_distance_mm: float
    width: int
    height: int
    depth: int
    y_spacing_mm: float
    anchor: str = "chest_line"

    def to_dict(self) -> dict:
        return {
            "required_height": self.required_height,
            "crop_height": self.crop_height,
            "multiple": self.multiple,
            "safe_distance_px": self.safe_distance_px,
            "safe_distance_mm": self.safe_distance_mm,
            "width": self.width,
            "height": self.height,
            "depth": self.depth,
            "y_spacing_mm": self.y_spacing_mm,
            "anchor": self.anchor,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CropPlan":
        return cls(
            required_height=int(d["required_height"]),
            crop_height=int(d["crop_height"]),
            multiple=int(d["multiple"]),
            safe_distance_px=int(d["safe_distance_px"]),
            safe_distance_mm=float(d["safe_distance_mm"]),
            width=int(d["width"]),
            height=int(d["height"]),
            depth=int(d["depth"]),
            y_spacing_mm=float(d["y_spacing_mm"]),
            anchor=str(d.get("anchor", "chest_line")),
        )


def scan_extent(masked_vol: VolumeGrid, patient_id: str = "") -> ExtentReport:
    """First/last non-zero rows per slice plus the cohort-relevant aggregates.

    chest_line is the posterior-most non-zero row over all slices (the
    operational stand-in for the breast-chest boundary).
    """
    nz = masked_vol.data != 0
    per_first: list[int | None] = []
    per_last: list[int | None] = []
    for z in range(masked_vol.depth):
        rows = np.flatnonzero(nz[:, :, z].any(axis=0))
        if rows.size:
            per_first.append(int(rows[0]))
            per_last.append(int(rows[-1]))
        else:
            per_first.append(None)
            per_last.append(None)
    firsts = [v for v in per_first if v is not None]
    lasts = [v for v in per_last if v is not None]
    if not firsts:
        raise DataError(f"no breast content in volume (patient {patient_id!r})")
    y_min = min(firsts)
    y_max = max(lasts)
    return ExtentReport(
        patient_id=patient_id,
        per_slice_first=per_first,
        per_slice_last=per_last,
        y_min=y_min,
        y_max=y_max,
        chest_line=y_max,
        required_height=y_max - y_min + 1,
        width=masked_vol.width,
        height=masked_vol.height,
        depth=masked_vol.depth,
        y_spacing_mm=masked_vol.spacing[1],
    )


def plan_crop(reports: list[ExtentReport], multiple: int = 32) -> CropPlan:
    """Cohort crop plan: max required height rounded up to the next multiple."""
    if not reports:
        raise DataError("cannot plan a crop from zero extent reports")
    if multiple < 1:
        raise DataError(f"crop multiple must be >= 1, got {multiple}")
    heights = {r.height for r in reports}
    if len(heights) > 1:
        raise DataError(f"patients differ in image height: {sorted(heights)}")
    y_spacings = {round(r.y_spacing_mm, 6) for r in reports}
    if len(y_spacings) > 1:
        raise DataError(f"patients differ in y spacing: {sorted(y_spacings)}")
    height = reports[0].height
    required = max(r.required_height for r in reports)
    if required > height:
        raise DataError(f"required height {required} exceeds image height {height}")
    crop_height = -(-required // multiple) * multiple
    sd_px = crop_height - required
    return CropPlan(
        required_height=required,
        crop_height=crop_height,
        multiple=multiple,
        safe_distance_px=sd_px,
        safe_distance_mm=sd_px * reports[0].y_spacing_mm,
        width=reports[0].width,
        height=height,
        depth=reports[0].depth,
        y_spacing_mm=reports[0].y_spacing_mm,
    )


def crop_window(plan: CropPlan, report: ExtentReport) -> tuple[int, int]:
    """[y0, y1) window flush to the patient's chest line, clipped into bounds."""
    y0 = max(0, report.chest_line - plan.crop_height + 1)
    return y0, y0 + plan.crop_height


def apply_crop(vol: VolumeGrid, plan: CropPlan, report: ExtentReport) -> VolumeGrid:
    """Crop the height axis per the plan; width and depth pass through."""
    if plan.crop_height > vol.height:
        raise DataError(
            f"crop height {plan.crop_height} exceeds volume height {vol.height}"
        )
    if (report.width, report.height, report.depth) != vol.shape:
        raise DataError(
            f"extent report shape {(report.width, report.height, report.depth)} "
            f"does not match volume shape {vol.shape}"
        )
    y0, y1 = crop_window(plan, report)
    data = np.ascontiguousarray(vol.data[:, y0:y1, :])
    affine = None
    if vol.affine is not None:
        affine = vol.affine.copy()
        affine[:3, 3] = (vol.affine @ np.array([0.0, y0, 0.0, 1.0]))[:3]
    return type(vol)(data=data, spacing=vol.spacing, affine=affine)
