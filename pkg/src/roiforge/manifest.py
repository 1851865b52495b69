"""Cohort manifests: the JSON contract every pipeline stage reads and writes.

File paths inside a manifest are stored relative to the manifest's own
directory so cohorts stay relocatable and reports stay byte-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError

SCHEMA_VERSION = "1"

SOURCE = "SOURCE"
WV_RAW = "WV_RAW"
BRS_WV = "BRS_WV"
BRS_SLS = "BRS_SLS"
BRS_OV = "BRS_OV"
APPROACHES = (WV_RAW, BRS_WV, BRS_SLS, BRS_OV)

FILE_ROLES = ("pre_contrast", "first_post_contrast", "subtraction", "region_mask", "lesion_mask")


@dataclass
class PatientEntry:
    patient_id: str
    files: dict[str, str]
    shape: tuple[int, int, int]
    spacing: tuple[float, float, float]
    oversample_map: list[int] | None = None
    slice_indices: list[int] | None = None
    crop_offset: int | None = None

    def to_dict(self) -> dict:
        return {
            "patient_id": self.patient_id,
            "files": dict(self.files),
            "shape": list(self.shape),
            "spacing": list(self.spacing),
            "oversample_map": self.oversample_map,
            "slice_indices": self.slice_indices,
            "crop_offset": self.crop_offset,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PatientEntry":
        return cls(
            patient_id=str(d["patient_id"]),
            files=dict(d["files"]),
            shape=tuple(int(v) for v in d["shape"]),
            spacing=tuple(float(v) for v in d["spacing"]),
            oversample_map=d.get("oversample_map"),
            slice_indices=d.get("slice_indices"),
            crop_offset=d.get("crop_offset"),
        )


@dataclass
class CohortManifest:
    cohort_id: str
    approach: str
    seed: int | None = None
    patients: list[PatientEntry] = field(default_factory=list)
    crop_plan: dict | None = None
    exclusions: list[dict] = field(default_factory=list)
    root: Path | None = None  # directory of the manifest file; not serialized

    def __post_init__(self):
        if self.approach != SOURCE and self.approach not in APPROACHES:
            raise DataError(
                f"unknown approach {self.approach!r}; expected one of {APPROACHES} or {SOURCE!r}"
            )

    def resolve(self, relpath: str) -> Path:
        if self.root is None:
            raise DataError("manifest has no root directory; load it from disk first")
        return self.root / relpath

    def patient(self, patient_id: str) -> PatientEntry:
        for entry in self.patients:
            if entry.patient_id == patient_id:
                return entry
        raise DataError(f"patient {patient_id!r} not in manifest")

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "cohort_id": self.cohort_id,
            "approach": self.approach,
            "seed": self.seed,
            "crop_plan": self.crop_plan,
            "patients": [p.to_dict() for p in self.patients],
            "exclusions": list(self.exclusions),
        }

    @classmethod
    def from_dict(cls, d: dict, root: Path | None = None) -> "CohortManifest":
        if str(d.get("schema_version")) != SCHEMA_VERSION:
            raise DataError(
                f"unsupported manifest schema_version {d.get('schema_version')!r}"
            )
        return cls(
            cohort_id=str(d["cohort_id"]),
            approach=str(d["approach"]),
            seed=d.get("seed"),
            patients=[PatientEntry.from_dict(p) for p in d.get("patients", [])],
            crop_plan=d.get("crop_plan"),
            exclusions=list(d.get("exclusions", [])),
            root=root,
        )


def save_manifest(manifest: CohortManifest, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n")
    manifest.root = path.parent
    return path


def load_manifest(path) -> CohortManifest:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"manifest not found: {path}")
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"manifest is not valid JSON: {path}: {exc}") from exc
    return CohortManifest.from_dict(payload, root=path.parent)


def validate_manifest(manifest: CohortManifest) -> None:
    """Check id uniqueness, file existence, and per-approach shape uniformity."""
    ids = [p.patient_id for p in manifest.patients]
    if len(set(ids)) != len(ids):
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        raise DataError(f"duplicate patient ids in manifest: {dupes}")
    for entry in manifest.patients:
        for role, rel in entry.files.items():
            full = manifest.resolve(rel)
            if not full.is_file():
                raise DataError(
                    f"manifest references missing file: {full} "
                    f"(patient {entry.patient_id}, role {role})"
                )
    if manifest.approach in APPROACHES and manifest.patients:
        shapes = {tuple(p.shape) for p in manifest.patients}
        if len(shapes) > 1:
            raise DataError(
                f"approach {manifest.approach} requires one shape for all patients, "
                f"found {sorted(shapes)}"
            )
