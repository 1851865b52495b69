"""roiforge: breast DCE-MRI cohort builder with optimal-volume cropping,
cohort analytics, segmentation metrics, and carbon accounting."""

__version__ = "0.1.0"

from .errors import DataError, RoiforgeError
from .volumes import (
    MaskGrid,
    VolumeGrid,
    canonicalize_ras,
    load_mask,
    load_volume,
    ras_affine,
    save_volume,
)
from .manifest import CohortManifest, PatientEntry, load_manifest, save_manifest, validate_manifest

__all__ = [
    "__version__",
    "DataError",
    "RoiforgeError",
    "VolumeGrid",
    "MaskGrid",
    "load_volume",
    "load_mask",
    "save_volume",
    "canonicalize_ras",
    "ras_affine",
    "CohortManifest",
    "PatientEntry",
    "load_manifest",
    "save_manifest",
    "validate_manifest",
]
