"""Volume containers and NIfTI-backed load/save with RAS reorientation.

A :class:`VolumeGrid` is a 3D scalar array indexed (x, y, z) where x runs
left-right (width W), y anterior-posterior (height H) and z is the slice
index (depth D), plus per-axis voxel spacing in mm and an optional voxel-
to-world affine.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import nifti
from .errors import DataError

RAS_CODES = ("R", "A", "S")

_AXIS_LETTERS = {
    (0, 1): "R",
    (0, -1): "L",
    (1, 1): "A",
    (1, -1): "P",
    (2, 1): "S",
    (2, -1): "I",
}


def axis_codes(affine: np.ndarray | None) -> tuple[str, str, str] | None:
    """Dominant-direction orientation codes of a voxel-to-world affine."""
    if affine is None:
        return None
    rot = np.asarray(affine)[:3, :3]
    codes = []
    for j in range(3):
        col = rot[:, j]
        i = int(np.argmax(np.abs(col)))
        if col[i] == 0:
            return None
        codes.append(_AXIS_LETTERS[(i, 1 if col[i] > 0 else -1)])
    return tuple(codes)


@dataclass
class VolumeGrid:
    """3D scalar image with spacing (mm) and optional world affine."""

    data: np.ndarray
    spacing: tuple[float, float, float]
    affine: np.ndarray | None = None

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.ndim != 3:
            raise DataError(f"volume data must be 3D, got {self.data.ndim}D")
        if min(self.data.shape) < 1:
            raise DataError(f"degenerate volume shape {self.data.shape}")
        self.spacing = tuple(float(s) for s in self.spacing)
        if len(self.spacing) != 3 or any(s <= 0 for s in self.spacing):
            raise DataError(f"spacing must be three positive values, got {self.spacing}")
        if self.affine is not None:
            self.affine = np.asarray(self.affine, dtype=float)
            if self.affine.shape != (4, 4):
                raise DataError(f"affine must be 4x4, got {self.affine.shape}")

    @property
    def width(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def depth(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    @property
    def orientation(self) -> tuple[str, str, str] | None:
        return axis_codes(self.affine)

    @property
    def voxel_volume_mm3(self) -> float:
        return self.spacing[0] * self.spacing[1] * self.spacing[2]


@dataclass
class MaskGrid(VolumeGrid):
    """Binary mask sharing VolumeGrid geometry; voxel values restricted to {0, 1}."""

    def __post_init__(self):
        super().__post_init__()
        if not np.isin(self.data, (0, 1)).all():
            raise DataError("mask voxels must all be 0 or 1")
        if self.data.dtype != np.uint8:
            self.data = self.data.astype(np.uint8)


def same_geometry(a: VolumeGrid, b: VolumeGrid) -> bool:
    return a.shape == b.shape and np.allclose(a.spacing, b.spacing, rtol=1e-5, atol=1e-6)


def require_same_geometry(a: VolumeGrid, b: VolumeGrid, what: str = "volumes") -> None:
    if a.shape != b.shape:
        raise DataError(f"{what} differ in shape: {a.shape} vs {b.shape}")
    if not np.allclose(a.spacing, b.spacing, rtol=1e-5, atol=1e-6):
        raise DataError(f"{what} differ in spacing: {a.spacing} vs {b.spacing}")


def load_volume(path) -> VolumeGrid:
    """Load a 3D NIfTI-1 volume, keeping the on-disk datatype."""
    data, affine, spacing = nifti.read_nifti(path)
    return VolumeGrid(data=data, spacing=spacing, affine=affine)


def load_mask(path) -> MaskGrid:
    """Load a NIfTI-1 volume and validate it as a binary mask."""
    data, affine, spacing = nifti.read_nifti(path)
    if not np.isin(data, (0, 1)).all():
        raise DataError(f"mask file contains values outside {{0,1}}: {path}")
    return MaskGrid(data=data.astype(np.uint8), spacing=spacing, affine=affine)


def save_volume(vol: VolumeGrid, path) -> None:
    """Write a grid as single-file NIfTI-1 (.nii, or .nii.gz when path ends in .gz)."""
    nifti.write_nifti(path, vol.data, vol.affine, vol.spacing)


def canonicalize_ras(vol: VolumeGrid) -> VolumeGrid:
    """Reorient an axis-aligned grid to RAS, preserving world coordinates.

    Only permutations and flips are applied; oblique affines are rejected
    since resampling would silently change geometry.
    """
    if vol.affine is None:
        raise DataError("cannot reorient: orientation metadata missing")
    rot = vol.affine[:3, :3]

    perm = [-1, -1, -1]  # perm[k] = voxel axis that points along world axis k
    signs = [1, 1, 1]
    for j in range(3):
        col = rot[:, j]
        i = int(np.argmax(np.abs(col)))
        if abs(col[i]) == 0:
            raise DataError("cannot reorient: singular affine")
        others = [k for k in range(3) if k != i]
        if np.any(np.abs(col[others]) > 1e-6 * abs(col[i])):
            raise DataError(
                "cannot reorient: oblique orientation (resampling is not supported)"
            )
        if perm[i] != -1:
            raise DataError("cannot reorient: degenerate affine axes")
        perm[i] = j
        signs[i] = 1 if col[i] > 0 else -1

    if perm == [0, 1, 2] and signs == [1, 1, 1]:
        return replace(vol)

    data = np.transpose(vol.data, axes=perm)
    # voxel map: old_index[perm[k]] = n_k, then flip where the axis pointed negative
    move = np.zeros((4, 4))
    move[3, 3] = 1.0
    for k in range(3):
        j = perm[k]
        if signs[k] > 0:
            move[j, k] = 1.0
        else:
            move[j, k] = -1.0
            move[j, 3] = vol.data.shape[j] - 1
            data = np.flip(data, axis=k)
    affine = vol.affine @ move
    spacing = tuple(float(np.linalg.norm(affine[:3, j])) for j in range(3))
    return type(vol)(data=np.ascontiguousarray(data), spacing=spacing, affine=affine)


def ras_affine(spacing, origin=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Convenience RAS affine with the given spacing and world origin."""
    affine = np.eye(4)
    affine[0, 0], affine[1, 1], affine[2, 2] = spacing
    affine[:3, 3] = origin
    return affine
