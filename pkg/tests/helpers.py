"""Shared test fixtures and independent brute-force oracles.

The oracles here deliberately use plain Python loops / BFS so they share no
code path with the implementations they check.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from roiforge.prep import PatientCase
from roiforge.volumes import MaskGrid, VolumeGrid, ras_affine


def make_grid(data, spacing=(1.0, 1.0, 1.0)) -> VolumeGrid:
    return VolumeGrid(data=np.asarray(data), spacing=spacing, affine=ras_affine(spacing))


def make_mask(data, spacing=(1.0, 1.0, 1.0)) -> MaskGrid:
    return MaskGrid(
        data=np.asarray(data).astype(np.uint8), spacing=spacing, affine=ras_affine(spacing)
    )


def build_case(patient_id, region, lesion, spacing=(1.0, 1.0, 1.0),
               base=100.0, enhancement=15.0, contrast=120.0) -> PatientCase:
    """PatientCase with deterministic intensities from boolean region/lesion arrays."""
    region = np.asarray(region).astype(bool)
    lesion = np.asarray(lesion).astype(bool)
    assert not (lesion & ~region).any(), "lesion must lie inside region"
    pc = np.zeros(region.shape, dtype=np.float32)
    pc[region] = base
    fpc = pc.copy()
    fpc[region] += enhancement
    fpc[lesion] += contrast
    return PatientCase(
        patient_id=patient_id,
        pre_contrast=make_grid(pc, spacing),
        first_post_contrast=make_grid(fpc, spacing),
        region_mask=make_mask(region, spacing),
        lesion_mask=make_mask(lesion, spacing),
    )


# ------------------------------------------------------------------ oracles


def confusion_loop(pred: np.ndarray, gt: np.ndarray) -> tuple[int, int, int, int]:
    """Literal voxel loop: (tp, fp, fn, tn)."""
    tp = fp = fn = tn = 0
    w, h, d = pred.shape
    for x in range(w):
        for y in range(h):
            for z in range(d):
                p, g = pred[x, y, z] != 0, gt[x, y, z] != 0
                if p and g:
                    tp += 1
                elif p and not g:
                    fp += 1
                elif not p and g:
                    fn += 1
                else:
                    tn += 1
    return tp, fp, fn, tn


def flood_fill_components(mask: np.ndarray) -> list[set[tuple[int, int, int]]]:
    """26-connected components by BFS; returns voxel sets."""
    mask = np.asarray(mask).astype(bool)
    seen = np.zeros(mask.shape, dtype=bool)
    shape = mask.shape
    offsets = [
        (dx, dy, dz)
        for dx in (-1, 0, 1)
        for dy in (-1, 0, 1)
        for dz in (-1, 0, 1)
        if (dx, dy, dz) != (0, 0, 0)
    ]
    components = []
    for start in map(tuple, np.argwhere(mask)):
        if seen[start]:
            continue
        queue = deque([start])
        seen[start] = True
        comp = {start}
        while queue:
            x, y, z = queue.popleft()
            for dx, dy, dz in offsets:
                nx, ny, nz = x + dx, y + dy, z + dz
                if 0 <= nx < shape[0] and 0 <= ny < shape[1] and 0 <= nz < shape[2]:
                    if mask[nx, ny, nz] and not seen[nx, ny, nz]:
                        seen[nx, ny, nz] = True
                        comp.add((nx, ny, nz))
                        queue.append((nx, ny, nz))
        components.append(comp)
    return components


def overlay_loop(mask_pairs) -> tuple[np.ndarray, np.ndarray]:
    """Triple-loop accumulation of (region_counts, lesion_counts)."""
    w, h = mask_pairs[0][0].width, mask_pairs[0][0].height
    region = np.zeros((w, h), dtype=np.int64)
    lesion = np.zeros((w, h), dtype=np.int64)
    for region_mask, lesion_mask in mask_pairs:
        for x in range(w):
            for y in range(h):
                for z in range(region_mask.depth):
                    if region_mask.data[x, y, z]:
                        region[x, y] += 1
                    if lesion_mask.data[x, y, z]:
                        lesion[x, y] += 1
    return region, lesion
