"""Export per-patient probability volumes for the external evaluator."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from .data import load_patient_channels
from .manifest import Manifest, load_manifest
from .model import UNetPlusPlus


def load_checkpoint(path, device: str = "cpu") -> tuple[UNetPlusPlus, dict]:
    payload = torch.load(path, map_location=device, weights_only=True)
    model = UNetPlusPlus(in_channels=int(payload["in_channels"]))
    model.load_state_dict(payload["model_state"])
    model.eval()
    return model, payload


def predict_patient(model: UNetPlusPlus, manifest: Manifest, patient_id: str,
                    channels: str, device: str = "cpu") -> tuple[np.ndarray, np.ndarray]:
    """Probability volume (x, y, z) in [0, 1] with the patient's affine."""
    stacked, affine = load_patient_channels(manifest, patient_id, channels)
    _, width, height, depth = stacked.shape
    out = np.empty((width, height, depth), dtype=np.float32)
    with torch.no_grad():
        for z in range(depth):
            planes = np.stack([stacked[c, :, :, z].T for c in range(stacked.shape[0])])
            batch = torch.from_numpy(planes[None]).to(device)
            prob = model(batch)[0, 0].cpu().numpy()  # (H, W)
            out[:, :, z] = prob.T
    return np.clip(out, 0.0, 1.0), affine


def predict_cohort(checkpoint_path, manifest_path, out_dir,
                   patient_ids: list[str] | None = None, device: str = "cpu") -> list[Path]:
    """Write one probability NIfTI per patient; file stem = patient id."""
    from .nifti_io import write_volume

    model, payload = load_checkpoint(checkpoint_path, device=device)
    manifest = load_manifest(manifest_path)
    ids = patient_ids if patient_ids is not None else manifest.patient_ids()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for pid in ids:
        volume, affine = predict_patient(model, manifest, pid, payload["channels"], device)
        path = out_dir / f"{pid}.nii.gz"
        write_volume(path, volume, affine)
        written.append(path)
    return written
