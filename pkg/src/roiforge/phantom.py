"""Synthetic DCE-MRI-like cohorts with known ground truth.

Each patient is two half-ellipsoid breasts anchored to a flat chest line
(larger y is posterior), optional bright heart blob behind the chest line,
optional low-intensity speckle noise anterior to the breasts, and lesion
spheres strictly inside the breast tissue. The first post-contrast volume
adds a mild global enhancement inside the breast plus a strong lesion
enhancement, so every pipeline stage has a brute-force-checkable oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import DataError
from .manifest import SOURCE, CohortManifest, PatientEntry, save_manifest
from .prep import PatientCase
from .volumes import MaskGrid, VolumeGrid, ras_affine, save_volume

# arbitrary-unit intensity model
TISSUE_BASE = 100.0
TISSUE_NOISE = 20.0
GLOBAL_ENHANCEMENT = 15.0
HEART_INTENSITY = 180.0
HEART_ENHANCEMENT = 80.0
NOISE_INTENSITY = 25.0
NOISE_DENSITY = 0.002


@dataclass
class PhantomSpec:
    n_patients: int = 8
    shape: tuple[int, int, int] = (64, 64, 20)
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    seed: int = 0
    chest_line_frac: float = 0.62
    chest_jitter_px: int = 2
    breast_halfwidth_frac: float = 0.20
    breast_height_frac: float = 0.42
    breast_depth_frac: float = 0.42
    geometry_jitter: float = 0.15
    lesion_count: tuple[int, int] = (1, 3)
    lesion_radius_mm: tuple[float, float] = (1.5, 3.5)
    lesion_contrast: float = 120.0
    heart: bool = True
    anterior_noise: bool = True
    depth_jitter: int = 0

    def __post_init__(self):
        if self.n_patients < 1:
            raise DataError("phantom needs at least one patient")
        if min(self.shape) < 8:
            raise DataError(f"all phantom dimensions must be >= 8, got {self.shape}")
        if any(s <= 0 for s in self.spacing):
            raise DataError(f"spacing must be positive, got {self.spacing}")
        if self.lesion_count[0] < 0 or self.lesion_count[0] > self.lesion_count[1]:
            raise DataError(f"bad lesion count range {self.lesion_count}")
        if self.lesion_radius_mm[0] <= 0 or self.lesion_radius_mm[0] > self.lesion_radius_mm[1]:
            raise DataError(f"bad lesion radius range {self.lesion_radius_mm}")
        if self.depth_jitter < 0 or self.depth_jitter > self.shape[2] - 4:
            raise DataError(f"depth jitter {self.depth_jitter} out of range for depth {self.shape[2]}")


def _ellipsoid(shape, center, semiaxes, condition=None) -> np.ndarray:
    xs = np.arange(shape[0])[:, None, None]
    ys = np.arange(shape[1])[None, :, None]
    zs = np.arange(shape[2])[None, None, :]
    cx, cy, cz = center
    ax, ay, az = semiaxes
    inside = ((xs - cx) / ax) ** 2 + ((ys - cy) / ay) ** 2 + ((zs - cz) / az) ** 2 <= 1.0
    if condition is not None:
        inside &= condition(xs, ys, zs)
    return inside


def _stamp_sphere(shape, center, radius_mm: float, spacing) -> np.ndarray:
    rad_vox = np.array([radius_mm / s for s in spacing])
    lo = np.maximum(np.floor(center - rad_vox).astype(int), 0)
    hi = np.minimum(np.ceil(center + rad_vox).astype(int) + 1, shape)
    xs = np.arange(lo[0], hi[0])[:, None, None]
    ys = np.arange(lo[1], hi[1])[None, :, None]
    zs = np.arange(lo[2], hi[2])[None, None, :]
    sphere = (
        ((xs - center[0]) * spacing[0]) ** 2
        + ((ys - center[1]) * spacing[1]) ** 2
        + ((zs - center[2]) * spacing[2]) ** 2
    ) <= radius_mm**2
    out = np.zeros(shape, dtype=bool)
    out[lo[0]:hi[0], lo[1]:hi[1], lo[2]:hi[2]] = sphere
    return out


def _place_lesion(interior_dist: np.ndarray, spacing, radius_mm: float, radius_min: float,
                  rng: np.random.Generator) -> np.ndarray:
    """Sphere strictly inside the breast: center where the physical distance to
    background exceeds the radius. Oversized draws are clamped to the largest
    feasible radius; a configured minimum that cannot fit is a hard error."""
    max_feasible = float(interior_dist.max())
    if radius_min >= max_feasible:
        raise DataError(
            f"infeasible geometry: minimum lesion radius {radius_min} mm "
            f"exceeds the breast interior (max feasible {max_feasible:.2f} mm)"
        )
    radius = min(radius_mm, np.nextafter(max_feasible, 0.0))
    candidates = np.argwhere(interior_dist > radius)
    center = candidates[int(rng.integers(0, len(candidates)))]
    return _stamp_sphere(interior_dist.shape, center, radius, spacing)


def synthesize_case(spec: PhantomSpec, patient_id: str,
                    rng: np.random.Generator) -> PatientCase:
    """Build one patient's PC/FPC volumes and region/lesion masks in memory."""
    width, height, max_depth = spec.shape
    depth = int(max_depth - rng.integers(0, spec.depth_jitter + 1))
    shape = (width, height, depth)
    jit = spec.geometry_jitter

    chest = int(round(spec.chest_line_frac * height))
    chest += int(rng.integers(-spec.chest_jitter_px, spec.chest_jitter_px + 1))
    chest = min(max(chest, height // 3), height - 4)

    region = np.zeros(shape, dtype=bool)
    for cx_frac in (0.28, 0.72):
        ax = spec.breast_halfwidth_frac * width * rng.uniform(1 - jit, 1 + jit)
        ay = spec.breast_height_frac * height * rng.uniform(1 - jit, 1 + jit)
        az = spec.breast_depth_frac * depth * rng.uniform(1 - jit, 1 + jit)
        ay = min(ay, chest - 1)  # keep content inside the image anteriorly
        cx = cx_frac * width + rng.uniform(-jit, jit) * width * 0.05
        cz = depth / 2.0 + rng.uniform(-1.0, 1.0)
        region |= _ellipsoid(
            shape, (cx, chest, cz), (ax, ay, az), condition=lambda xs, ys, zs: ys <= chest
        )
    if not region.any():
        raise DataError("infeasible geometry: empty breast region")

    lesion = np.zeros(shape, dtype=bool)
    n_lesions = int(rng.integers(spec.lesion_count[0], spec.lesion_count[1] + 1))
    if n_lesions > 0:
        interior_dist = ndimage.distance_transform_edt(region, sampling=spec.spacing)
        for _ in range(n_lesions):
            radius = float(rng.uniform(*spec.lesion_radius_mm))
            lesion |= _place_lesion(
                interior_dist, spec.spacing, radius, spec.lesion_radius_mm[0], rng
            )

    pc = np.zeros(shape, dtype=np.float32)
    pc[region] = TISSUE_BASE + rng.uniform(0, TISSUE_NOISE, int(region.sum()))

    heart = np.zeros(shape, dtype=bool)
    if spec.heart:
        # strictly posterior to the chest line
        ay = max(2.0, 0.45 * (height - chest - 2))
        cy = chest + 2 + ay
        heart = _ellipsoid(
            shape,
            (width / 2.0, cy, depth / 2.0),
            (0.18 * width, ay, 0.35 * depth),
            condition=lambda xs, ys, zs: ys > chest,
        )
        pc[heart] = HEART_INTENSITY + rng.uniform(0, TISSUE_NOISE, int(heart.sum()))

    if spec.anterior_noise:
        front = int(np.flatnonzero(region.any(axis=(0, 2)))[0])
        if front > 1:
            speckle = rng.random(shape) < NOISE_DENSITY
            speckle[:, front:, :] = False
            pc[speckle] = rng.uniform(5.0, NOISE_INTENSITY, int(speckle.sum()))

    fpc = pc.copy()
    fpc[region] += GLOBAL_ENHANCEMENT
    fpc[lesion] += spec.lesion_contrast
    fpc[heart] += HEART_ENHANCEMENT

    affine = ras_affine(spec.spacing)
    return PatientCase(
        patient_id=patient_id,
        pre_contrast=VolumeGrid(data=pc, spacing=spec.spacing, affine=affine),
        first_post_contrast=VolumeGrid(data=fpc, spacing=spec.spacing, affine=affine),
        region_mask=MaskGrid(data=region.astype(np.uint8), spacing=spec.spacing, affine=affine),
        lesion_mask=MaskGrid(data=lesion.astype(np.uint8), spacing=spec.spacing, affine=affine),
    )


def synthesize_cohort(spec: PhantomSpec) -> list[PatientCase]:
    """All patients in memory, deterministically derived from the master seed."""
    streams = np.random.SeedSequence(spec.seed).spawn(spec.n_patients)
    digits = max(3, len(str(spec.n_patients)))
    return [
        synthesize_case(spec, f"p{i + 1:0{digits}d}", np.random.default_rng(streams[i]))
        for i in range(spec.n_patients)
    ]


def generate_cohort(spec: PhantomSpec, out_dir, compress: bool = True) -> CohortManifest:
    """Write a source cohort (PC, FPC, region and lesion masks) plus manifest."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ext = ".nii.gz" if compress else ".nii"
    entries = []
    for case in synthesize_cohort(spec):
        patient_dir = out_dir / case.patient_id
        patient_dir.mkdir(parents=True, exist_ok=True)
        files = {}
        for role in ("pre_contrast", "first_post_contrast", "region_mask", "lesion_mask"):
            rel = f"{case.patient_id}/{role}{ext}"
            save_volume(getattr(case, role), out_dir / rel)
            files[role] = rel
        entries.append(
            PatientEntry(
                patient_id=case.patient_id,
                files=files,
                shape=case.pre_contrast.shape,
                spacing=case.pre_contrast.spacing,
            )
        )
    manifest = CohortManifest(
        cohort_id=f"phantom-{spec.seed}",
        approach=SOURCE,
        seed=spec.seed,
        patients=entries,
    )
    save_manifest(manifest, out_dir / "manifest.json")
    return manifest
