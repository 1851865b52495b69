"""Build the four approach datasets from paired contrast series.

Recipes:
  WV_RAW   canonicalized originals, oversampled to the cohort max depth
  BRS_WV   region-masked, oversampled to the cohort max depth
  BRS_SLS  region-masked, lesion slices only, oversampled to the cohort
           max lesion-slice count
  BRS_OV   BRS_SLS further cropped in height by a CropPlan

Masks are reshaped identically to their images at every step.
"""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import roi
from .errors import DataError
from .manifest import (
    APPROACHES,
    BRS_OV,
    BRS_SLS,
    BRS_WV,
    WV_RAW,
    CohortManifest,
    PatientEntry,
    save_manifest,
)
from .volumes import (
    MaskGrid,
    VolumeGrid,
    canonicalize_ras,
    load_mask,
    load_volume,
    require_same_geometry,
    save_volume,
)


@dataclass
class PatientCase:
    """One patient's paired volumes and masks, all sharing geometry."""

    patient_id: str
    pre_contrast: VolumeGrid
    first_post_contrast: VolumeGrid
    region_mask: MaskGrid
    lesion_mask: MaskGrid
    subtraction: VolumeGrid | None = None

    def __post_init__(self):
        for name in ("first_post_contrast", "region_mask", "lesion_mask"):
            require_same_geometry(
                self.pre_contrast, getattr(self, name), f"pre_contrast and {name}"
            )


@dataclass
class CaseFiles:
    """Role-to-path mapping produced by series pairing."""

    patient_id: str
    pre_contrast: Path
    first_post_contrast: Path
    region_mask: Path
    lesion_mask: Path


@dataclass
class ExclusionRecord:
    patient_id: str
    reason: str


@dataclass
class SeriesFile:
    descriptor: str
    path: Path


# first match wins; checked in order so "lesion mask" is not taken as a region mask
_ROLE_PATTERNS = (
    ("lesion_mask", re.compile(r"lesion|label|gt\b|ground[\s_-]?truth", re.I)),
    ("region_mask", re.compile(r"region|brs|breast[\s_-]?mask", re.I)),
    ("pre_contrast", re.compile(r"pre[\s_-]?contrast|\bpre\b|(^|[\s_-])pc([\s_-]|$)", re.I)),
    ("post_contrast", re.compile(r"post[\s_-]?contrast|\bpost\b|(^|[\s_-])fpc([\s_-]|$)", re.I)),
)
_POST_INDEX = re.compile(r"(\d+)")


def classify_series(descriptor: str) -> str | None:
    for role, pattern in _ROLE_PATTERNS:
        if pattern.search(descriptor):
            return role
    return None


def pair_contrast_series(
    patient_id: str, candidates: list[SeriesFile]
) -> CaseFiles | ExclusionRecord:
    """Identify the PC/FPC pair and both masks among a patient's series.

    Incomplete candidates are a domain outcome, not an error: the return
    value is an ExclusionRecord naming the missing element.
    """
    if not candidates:
        return ExclusionRecord(patient_id, "no series")
    by_role: dict[str, list[SeriesFile]] = {}
    for cand in candidates:
        role = classify_series(cand.descriptor)
        if role is not None:
            by_role.setdefault(role, []).append(cand)

    missing = []
    if "pre_contrast" not in by_role:
        missing.append("missing pre-contrast")
    if "post_contrast" not in by_role:
        missing.append("missing first post-contrast")
    if "region_mask" not in by_role:
        missing.append("missing region mask")
    if "lesion_mask" not in by_role:
        missing.append("missing lesion mask")
    if missing:
        return ExclusionRecord(patient_id, "; ".join(missing))

    def post_key(s: SeriesFile) -> int:
        m = _POST_INDEX.search(s.descriptor)
        return int(m.group(1)) if m else 1

    first_post = min(by_role["post_contrast"], key=post_key)
    return CaseFiles(
        patient_id=patient_id,
        pre_contrast=Path(by_role["pre_contrast"][0].path),
        first_post_contrast=Path(first_post.path),
        region_mask=Path(by_role["region_mask"][0].path),
        lesion_mask=Path(by_role["lesion_mask"][0].path),
    )


def load_case(files: CaseFiles) -> PatientCase:
    return PatientCase(
        patient_id=files.patient_id,
        pre_contrast=load_volume(files.pre_contrast),
        first_post_contrast=load_volume(files.first_post_contrast),
        region_mask=load_mask(files.region_mask),
        lesion_mask=load_mask(files.lesion_mask),
    )


def cases_from_manifest(manifest: CohortManifest) -> list[PatientCase]:
    cases = []
    for entry in manifest.patients:
        try:
            files = CaseFiles(
                patient_id=entry.patient_id,
                pre_contrast=manifest.resolve(entry.files["pre_contrast"]),
                first_post_contrast=manifest.resolve(entry.files["first_post_contrast"]),
                region_mask=manifest.resolve(entry.files["region_mask"]),
                lesion_mask=manifest.resolve(entry.files["lesion_mask"]),
            )
        except KeyError as exc:
            raise DataError(
                f"patient {entry.patient_id} is missing the {exc.args[0]} file role"
            ) from exc
        cases.append(load_case(files))
    return cases


def subtract(fpc: VolumeGrid, pc: VolumeGrid) -> VolumeGrid:
    """Contrast-enhancement image: voxelwise max(FPC - PC, 0)."""
    require_same_geometry(fpc, pc, "FPC and PC")
    data = np.maximum(
        fpc.data.astype(np.float32) - pc.data.astype(np.float32), np.float32(0)
    )
    return VolumeGrid(data=data, spacing=fpc.spacing, affine=fpc.affine)


def apply_region_mask(vol: VolumeGrid, mask: MaskGrid) -> VolumeGrid:
    """Voxelwise product; everything outside the mask becomes exactly 0."""
    require_same_geometry(vol, mask, "volume and mask")
    if not np.isin(mask.data, (0, 1)).all():
        raise DataError("region mask is not binary")
    data = vol.data * mask.data.astype(vol.data.dtype)
    return VolumeGrid(data=data, spacing=vol.spacing, affine=vol.affine)


def plan_oversample(depth: int, target_depth: int, rng: np.random.Generator) -> list[int]:
    """Output-to-source slice map: duplicates sit adjacent to their source."""
    if target_depth < depth:
        raise DataError(f"target depth {target_depth} is below current depth {depth}")
    counts = np.ones(depth, dtype=np.int64)
    for _ in range(target_depth - depth):
        counts[int(rng.integers(0, depth))] += 1
    return [src for src in range(depth) for _ in range(counts[src])]


def apply_slice_map(vol: VolumeGrid, slice_map: list[int]) -> VolumeGrid:
    data = np.ascontiguousarray(vol.data[:, :, list(slice_map)])
    return type(vol)(data=data, spacing=vol.spacing, affine=vol.affine)


def oversample_depth(
    vol: VolumeGrid, target_depth: int, seed: int | np.random.Generator
) -> tuple[VolumeGrid, list[int]]:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    slice_map = plan_oversample(vol.depth, target_depth, rng)
    return apply_slice_map(vol, slice_map), slice_map


def select_lesion_slices(lesion_mask: MaskGrid) -> list[int]:
    """z indices with at least one lesion voxel, ascending."""
    return [int(z) for z in np.flatnonzero(lesion_mask.data.any(axis=(0, 1)))]


def normalize_minmax(vol: VolumeGrid) -> VolumeGrid:
    """Per-volume min-max rescale to [0, 1]; constant volumes map to zeros."""
    data = vol.data.astype(np.float32)
    lo, hi = float(data.min()), float(data.max())
    if hi > lo:
        data = (data - lo) / (hi - lo)
    else:
        data = np.zeros_like(data)
    return VolumeGrid(data=data, spacing=vol.spacing, affine=vol.affine)


def _volume_ext(compress: bool) -> str:
    return ".nii.gz" if compress else ".nii"


def assemble_approach(
    cases: list[PatientCase],
    approach: str,
    out_dir,
    *,
    seed: int = 0,
    crop_plan: roi.CropPlan | None = None,
    normalize: bool = True,
    compress: bool = True,
    jobs: int = 1,
    cohort_id: str = "cohort",
    exclusions: list[ExclusionRecord] | None = None,
) -> CohortManifest:
    """Write one approach dataset and its manifest under out_dir."""
    if approach not in APPROACHES:
        raise DataError(f"unknown approach {approach!r}; expected one of {APPROACHES}")
    if approach == BRS_OV and crop_plan is None:
        raise DataError("BRS_OV requires a crop plan (run the optimizer first)")
    if not cases:
        raise DataError("no cases to assemble")

    cases = sorted(cases, key=lambda c: c.patient_id)
    in_plane = {(c.pre_contrast.width, c.pre_contrast.height) for c in cases}
    if len(in_plane) > 1:
        raise DataError(f"patients differ in in-plane shape: {sorted(in_plane)}")
    spacings = {tuple(round(s, 6) for s in c.pre_contrast.spacing) for c in cases}
    if len(spacings) > 1:
        raise DataError(f"inconsistent spacing across patients: {sorted(spacings)}")

    if approach in (WV_RAW, BRS_WV):
        target_depth = max(c.pre_contrast.depth for c in cases)
    else:
        counts = {c.patient_id: len(select_lesion_slices(c.lesion_mask)) for c in cases}
        empty = sorted(pid for pid, n in counts.items() if n == 0)
        if empty:
            raise DataError(f"patients with no lesion slices cannot enter {approach}: {empty}")
        target_depth = max(counts.values())

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    streams = np.random.SeedSequence(seed).spawn(len(cases))

    def build_entry(idx: int) -> PatientEntry:
        case = cases[idx]
        rng = np.random.default_rng(streams[idx])
        grids = {
            "pre_contrast": canonicalize_ras(case.pre_contrast),
            "first_post_contrast": canonicalize_ras(case.first_post_contrast),
            "region_mask": canonicalize_ras(case.region_mask),
            "lesion_mask": canonicalize_ras(case.lesion_mask),
        }
        grids["subtraction"] = subtract(grids["first_post_contrast"], grids["pre_contrast"])

        if approach != WV_RAW:
            for key in ("pre_contrast", "first_post_contrast", "subtraction"):
                grids[key] = apply_region_mask(grids[key], grids["region_mask"])

        slice_indices = None
        if approach in (BRS_SLS, BRS_OV):
            slice_indices = select_lesion_slices(grids["lesion_mask"])
            grids = {k: apply_slice_map(g, slice_indices) for k, g in grids.items()}

        slice_map = plan_oversample(grids["pre_contrast"].depth, target_depth, rng)
        grids = {k: apply_slice_map(g, slice_map) for k, g in grids.items()}

        crop_offset = None
        if approach == BRS_OV:
            report = roi.scan_extent(grids["region_mask"], patient_id=case.patient_id)
            if report.required_height > crop_plan.crop_height:
                raise DataError(
                    f"patient {case.patient_id} breast extent {report.required_height} "
                    f"exceeds planned crop height {crop_plan.crop_height}"
                )
            crop_offset, _ = roi.crop_window(crop_plan, report)
            grids = {k: roi.apply_crop(g, crop_plan, report) for k, g in grids.items()}

        if normalize:
            for key in ("pre_contrast", "first_post_contrast", "subtraction"):
                grids[key] = normalize_minmax(grids[key])

        patient_dir = out_dir / case.patient_id
        patient_dir.mkdir(parents=True, exist_ok=True)
        files = {}
        for key, grid in grids.items():
            if isinstance(grid, MaskGrid):
                grid = replace(grid)  # already uint8
            else:
                grid = VolumeGrid(
                    data=grid.data.astype(np.float32), spacing=grid.spacing, affine=grid.affine
                )
            rel = f"{case.patient_id}/{key}{_volume_ext(compress)}"
            save_volume(grid, out_dir / rel)
            files[key] = rel
        shape = grids["pre_contrast"].shape
        return PatientEntry(
            patient_id=case.patient_id,
            files=files,
            shape=shape,
            spacing=grids["pre_contrast"].spacing,
            oversample_map=[int(v) for v in slice_map],
            slice_indices=slice_indices,
            crop_offset=crop_offset,
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            entries = list(pool.map(build_entry, range(len(cases))))
    else:
        entries = [build_entry(i) for i in range(len(cases))]

    manifest = CohortManifest(
        cohort_id=cohort_id,
        approach=approach,
        seed=seed,
        patients=entries,
        crop_plan=crop_plan.to_dict() if crop_plan is not None else None,
        exclusions=[
            {"patient_id": e.patient_id, "reason": e.reason} for e in (exclusions or [])
        ],
    )
    save_manifest(manifest, out_dir / "manifest.json")
    return manifest
