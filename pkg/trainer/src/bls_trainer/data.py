"""Slice datasets over cohort manifests.

Training runs slice by slice: each sample is one z slice of a patient, with
either two channels (pre-contrast + first post-contrast) or one (subtraction).
Arrays arrive indexed (x, y, z) and are transposed to torch's (C, H, W).
"""

from __future__ import annotations

import numpy as np
import torch
from torch.utils.data import Dataset

from .manifest import Manifest
from .nifti_io import read_volume

CHANNEL_MODES = ("pc_fpc", "subtraction")


def _channel_roles(mode: str) -> tuple[str, ...]:
    if mode == "pc_fpc":
        return ("pre_contrast", "first_post_contrast")
    if mode == "subtraction":
        return ("subtraction",)
    raise ValueError(f"unknown channel mode {mode!r}; expected one of {CHANNEL_MODES}")


class SliceDataset(Dataset):
    """All z slices of the given patients, in (patient, z) order."""

    def __init__(self, manifest: Manifest, patient_ids: list[str], channels: str = "pc_fpc"):
        self.roles = _channel_roles(channels)
        self.inputs: list[np.ndarray] = []
        self.targets: list[np.ndarray] = []
        self.index: list[tuple[str, int]] = []
        for pid in patient_ids:
            patient = manifest.patient(pid)
            vols = [read_volume(patient.files[role])[0].astype(np.float32)
                    for role in self.roles]
            mask, _ = read_volume(patient.files["lesion_mask"])
            mask = mask.astype(np.float32)
            for z in range(mask.shape[2]):
                # (x, y) -> (H, W) = (y, x)
                self.inputs.append(np.stack([v[:, :, z].T for v in vols]))
                self.targets.append(mask[:, :, z].T[None, :, :])
                self.index.append((pid, z))

    def __len__(self) -> int:
        return len(self.index)

    def __getitem__(self, i: int):
        return torch.from_numpy(self.inputs[i]), torch.from_numpy(self.targets[i])


def load_patient_channels(manifest: Manifest, patient_id: str, channels: str):
    """(stacked channel volumes (C, x, y, z), affine) for prediction."""
    patient = manifest.patient(patient_id)
    roles = _channel_roles(channels)
    vols = []
    affine = None
    for role in roles:
        data, affine = read_volume(patient.files[role])
        vols.append(data.astype(np.float32))
    return np.stack(vols), affine
