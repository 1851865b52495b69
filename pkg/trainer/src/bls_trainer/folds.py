"""Patient-level cross-validation splits with a global holdout."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class FoldSplit:
    fold: int
    train: list[str]
    validation: list[str]
    holdout: list[str]

    def to_dict(self) -> dict:
        return {
            "fold": self.fold,
            "train": list(self.train),
            "validation": list(self.validation),
            "holdout": list(self.holdout),
        }


def make_folds(patient_ids: list[str], k: int = 5, holdout: int = 2,
               seed: int = 0) -> list[FoldSplit]:
    """Shuffle patients, set aside `holdout` of them globally, split the rest
    into k validation folds. Each non-holdout patient validates exactly once."""
    ids = sorted(set(patient_ids))
    if len(ids) != len(patient_ids):
        raise ValueError("patient ids must be unique")
    if len(ids) < k + holdout:
        raise ValueError(
            f"too few patients: need at least {k + holdout}, got {len(ids)}"
        )
    rng = np.random.default_rng(seed)
    order = [ids[i] for i in rng.permutation(len(ids))]
    held = sorted(order[:holdout])
    pool = order[holdout:]
    splits = []
    for fold in range(k):
        validation = sorted(pool[fold::k])
        train = sorted(set(pool) - set(validation))
        splits.append(FoldSplit(fold=fold, train=train, validation=validation, holdout=held))
    return splits
