"""Carbon-footprint accounting for training runs.

CFP converts wall-clock training time to kg CO2 at a configurable grid
intensity (default 0.475 kg/kWh, one-kW draw assumed). The normalized
score is implemented exactly as published even though its dimensional
form is unusual; a conventional min-max score is reported beside it,
clearly labeled.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .errors import DataError

GRID_KG_PER_KWH = 0.475


@dataclass
class EnergyRecord:
    fold: int
    tt_seconds: float
    cfp_kg: float
    epochs: int | None = None
    best_epoch: int | None = None
    norm_cfp: float | None = None
    minmax_score: float | None = None

    def to_dict(self) -> dict:
        return {
            "fold": self.fold,
            "tt_seconds": self.tt_seconds,
            "cfp_kg": self.cfp_kg,
            "epochs": self.epochs,
            "best_epoch": self.best_epoch,
            "norm_cfp": self.norm_cfp,
            "minmax_score": self.minmax_score,
        }


def carbon_footprint(tt_seconds: float, grid_kg_per_kwh: float = GRID_KG_PER_KWH) -> float:
    """kg CO2 for a training run of tt_seconds wall-clock time."""
    if tt_seconds < 0:
        raise DataError(f"training time must be non-negative, got {tt_seconds}")
    return grid_kg_per_kwh * tt_seconds / 3600.0


def normalized_cfp(cfp: float, cfp_max: float, cfp_min: float) -> float:
    """Published normalization: 1 - (cfp_max - cfp_min) * (cfp / cfp_max).

    Higher is better. Can go negative for wide CFP ranges; reported as is.
    """
    if cfp_max <= 0:
        raise DataError(f"cfp_max must be positive, got {cfp_max}")
    if not (0 <= cfp_min <= cfp <= cfp_max):
        raise DataError(
            f"need 0 <= cfp_min <= cfp <= cfp_max, got cfp={cfp}, "
            f"min={cfp_min}, max={cfp_max}"
        )
    return 1.0 - (cfp_max - cfp_min) * (cfp / cfp_max)


def minmax_score(cfp: float, cfp_max: float, cfp_min: float) -> float:
    """Conventional min-max normalization (1 best, 0 worst). Not the published form."""
    if not (0 <= cfp_min <= cfp <= cfp_max):
        raise DataError(
            f"need 0 <= cfp_min <= cfp <= cfp_max, got cfp={cfp}, "
            f"min={cfp_min}, max={cfp_max}"
        )
    if cfp_max == cfp_min:
        return 1.0
    return (cfp_max - cfp) / (cfp_max - cfp_min)


def ingest_training_log(path, grid_kg_per_kwh: float = GRID_KG_PER_KWH) -> list[EnergyRecord]:
    """Parse a JSON-lines fold-timing log into EnergyRecords.

    Each line: {"fold": int, "tt_seconds": float, "epochs": int, "best_epoch": int}.
    Normalized scores are filled from the min/max CFP within this log.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"training log not found: {path}")
    records: list[EnergyRecord] = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{lineno}: malformed JSON line: {exc}") from exc
        try:
            fold = int(row["fold"])
            tt = float(row["tt_seconds"])
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: missing or invalid fold/tt_seconds") from exc
        if not math.isfinite(tt) or tt < 0:
            raise DataError(f"{path}:{lineno}: training time must be non-negative, got {tt}")
        records.append(
            EnergyRecord(
                fold=fold,
                tt_seconds=tt,
                cfp_kg=carbon_footprint(tt, grid_kg_per_kwh),
                epochs=int(row["epochs"]) if row.get("epochs") is not None else None,
                best_epoch=int(row["best_epoch"]) if row.get("best_epoch") is not None else None,
            )
        )
    if records:
        cfp_min = min(r.cfp_kg for r in records)
        cfp_max = max(r.cfp_kg for r in records)
        for rec in records:
            if cfp_max > 0:
                rec.norm_cfp = normalized_cfp(rec.cfp_kg, cfp_max, cfp_min)
            rec.minmax_score = minmax_score(rec.cfp_kg, cfp_max, cfp_min)
    return records


def summarize(records: list[EnergyRecord]) -> dict:
    """Mean/std training time and CFP across folds, Table-style."""
    if not records:
        return {"folds": 0}
    tts = [r.tt_seconds for r in records]
    cfps = [r.cfp_kg for r in records]

    def mean(xs):
        return sum(xs) / len(xs)

    def std(xs):
        m = mean(xs)
        return math.sqrt(sum((x - m) ** 2 for x in xs) / len(xs))

    return {
        "folds": len(records),
        "tt_minutes_mean": mean(tts) / 60.0,
        "tt_minutes_std": std(tts) / 60.0,
        "cfp_kg_mean": mean(cfps),
        "cfp_kg_std": std(cfps),
        "cfp_kg_min": min(cfps),
        "cfp_kg_max": max(cfps),
    }
