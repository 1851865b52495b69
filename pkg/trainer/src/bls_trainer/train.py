"""Fold training: RAdam + plateau scheduler, early stopping, timing log.

Each fold writes a best-validation checkpoint and appends one JSON line
{"fold", "tt_seconds", "epochs", "best_epoch"} to the timing log, which is
the contract consumed by the cohort toolkit's footprint stage. A fold whose
loss turns non-finite is aborted and logged with "status": "diverged".
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import torch
from torch.optim import RAdam
from torch.optim.lr_scheduler import ReduceLROnPlateau
from torch.utils.data import DataLoader

from .data import SliceDataset
from .folds import FoldSplit, make_folds
from .losses import DEFAULT_WEIGHTS, FOCAL_ALPHA, FOCAL_GAMMA, hybrid_loss
from .manifest import Manifest, load_manifest
from .model import UNetPlusPlus


@dataclass
class TrainConfig:
    manifest_path: str
    out_dir: str
    channels: str = "pc_fpc"
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS
    focal_alpha: float = FOCAL_ALPHA
    focal_gamma: float = FOCAL_GAMMA
    learning_rate: float = 0.001
    scheduler_factor: float = 0.5
    scheduler_patience: int = 5
    batch_size: int = 8
    k_folds: int = 5
    holdout: int = 2
    seed: int = 0
    max_epochs: int = 50
    early_stop_patience: int = 10
    fold_ids: list[int] | None = None  # subset of folds to run; None = all
    device: str = "cpu"

    def __post_init__(self):
        if abs(sum(self.weights) - 1.0) > 1e-6:
            raise ValueError(f"loss weights must sum to 1, got {self.weights}")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")


@dataclass
class FoldResult:
    fold: int
    tt_seconds: float
    epochs: int
    best_epoch: int
    best_val_loss: float
    checkpoint: str | None
    status: str = "ok"


def _in_channels(channels: str) -> int:
    return 2 if channels == "pc_fpc" else 1


def _run_epoch(model, loader, device, weights, focal_alpha, focal_gamma,
               optimizer=None) -> float:
    training = optimizer is not None
    model.train(training)
    total, batches = 0.0, 0
    with torch.set_grad_enabled(training):
        for inputs, targets in loader:
            inputs = inputs.to(device)
            targets = targets.to(device)
            pred = model(inputs)
            loss = hybrid_loss(pred, targets, weights=weights,
                               focal_alpha=focal_alpha, focal_gamma=focal_gamma)
            if not torch.isfinite(loss):
                raise FloatingPointError(f"non-finite loss: {loss.item()}")
            if training:
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
            total += float(loss.item())
            batches += 1
    return total / max(batches, 1)


def train_fold(config: TrainConfig, manifest: Manifest, split: FoldSplit) -> FoldResult:
    torch.manual_seed(config.seed * 1000 + split.fold)
    device = torch.device(config.device)
    train_set = SliceDataset(manifest, split.train, channels=config.channels)
    val_set = SliceDataset(manifest, split.validation, channels=config.channels)
    generator = torch.Generator().manual_seed(config.seed * 1000 + split.fold)
    train_loader = DataLoader(train_set, batch_size=config.batch_size, shuffle=True,
                              generator=generator)
    val_loader = DataLoader(val_set, batch_size=config.batch_size, shuffle=False)

    model = UNetPlusPlus(in_channels=_in_channels(config.channels)).to(device)
    optimizer = RAdam(model.parameters(), lr=config.learning_rate)
    scheduler = ReduceLROnPlateau(optimizer, factor=config.scheduler_factor,
                                  patience=config.scheduler_patience)

    out_dir = Path(config.out_dir) / f"fold_{split.fold}"
    out_dir.mkdir(parents=True, exist_ok=True)
    checkpoint_path = out_dir / "best.pt"

    best_val = math.inf
    best_epoch = 0
    epochs_run = 0
    started = time.perf_counter()
    status = "ok"
    for epoch in range(1, config.max_epochs + 1):
        try:
            _run_epoch(model, train_loader, device, config.weights,
                       config.focal_alpha, config.focal_gamma, optimizer=optimizer)
            val_loss = _run_epoch(model, val_loader, device, config.weights,
                                  config.focal_alpha, config.focal_gamma)
        except FloatingPointError:
            status = "diverged"
            epochs_run = epoch
            break
        epochs_run = epoch
        scheduler.step(val_loss)
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            torch.save(
                {
                    "model_state": model.state_dict(),
                    "in_channels": _in_channels(config.channels),
                    "channels": config.channels,
                    "fold": split.fold,
                    "epoch": epoch,
                    "val_loss": val_loss,
                    "holdout": split.holdout,
                },
                checkpoint_path,
            )
        if epoch - best_epoch >= config.early_stop_patience:
            break
    elapsed = time.perf_counter() - started
    return FoldResult(
        fold=split.fold,
        tt_seconds=elapsed,
        epochs=epochs_run,
        best_epoch=best_epoch,
        best_val_loss=best_val if best_val < math.inf else float("nan"),
        checkpoint=str(checkpoint_path) if checkpoint_path.exists() else None,
        status=status,
    )


def train_folds(config: TrainConfig) -> list[FoldResult]:
    """Run the configured folds sequentially, appending to the timing log."""
    manifest = load_manifest(config.manifest_path)
    splits = make_folds(manifest.patient_ids(), k=config.k_folds,
                        holdout=config.holdout, seed=config.seed)
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "folds.json").write_text(
        json.dumps([s.to_dict() for s in splits], indent=2) + "\n"
    )
    wanted = set(config.fold_ids) if config.fold_ids is not None else None
    log_path = out_dir / "train_log.jsonl"
    results = []
    with log_path.open("a") as log:
        for split in splits:
            if wanted is not None and split.fold not in wanted:
                continue
            result = train_fold(config, manifest, split)
            record = {
                "fold": result.fold,
                "tt_seconds": result.tt_seconds,
                "epochs": result.epochs,
                "best_epoch": result.best_epoch,
            }
            if result.status != "ok":
                record["status"] = result.status
            log.write(json.dumps(record) + "\n")
            log.flush()
            results.append(result)
    return results
