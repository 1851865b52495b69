"""Read-only consumer of cohort manifest JSON files."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path


@dataclass
class PatientFiles:
    patient_id: str
    files: dict[str, Path]
    shape: tuple[int, int, int]


@dataclass
class Manifest:
    cohort_id: str
    approach: str
    seed: int | None
    patients: list[PatientFiles]

    def patient_ids(self) -> list[str]:
        return [p.patient_id for p in self.patients]

    def patient(self, patient_id: str) -> PatientFiles:
        for p in self.patients:
            if p.patient_id == patient_id:
                return p
        raise KeyError(f"patient {patient_id!r} not in manifest")


def load_manifest(path) -> Manifest:
    path = Path(path)
    payload = json.loads(path.read_text())
    if str(payload.get("schema_version")) != "1":
        raise ValueError(f"unsupported manifest schema_version: {payload.get('schema_version')}")
    patients = []
    for entry in payload["patients"]:
        patients.append(
            PatientFiles(
                patient_id=str(entry["patient_id"]),
                files={role: path.parent / rel for role, rel in entry["files"].items()},
                shape=tuple(int(v) for v in entry["shape"]),
            )
        )
    return Manifest(
        cohort_id=str(payload["cohort_id"]),
        approach=str(payload["approach"]),
        seed=payload.get("seed"),
        patients=patients,
    )
