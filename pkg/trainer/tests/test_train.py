"""Training behavior: overfit sanity, timing log, divergence handling."""

import json

import numpy as np
import pytest
import torch
from torch.optim import RAdam

from bls_trainer.data import SliceDataset
from bls_trainer.losses import hybrid_loss
from bls_trainer.manifest import load_manifest
from bls_trainer.model import UNetPlusPlus
from bls_trainer.train import TrainConfig, train_folds


def test_overfit_single_phantom_batch(ov_cohort):
    torch.manual_seed(0)
    manifest = load_manifest(ov_cohort)
    dataset = SliceDataset(manifest, manifest.patient_ids(), channels="subtraction")
    # the four slices with the strongest lesion signal form the batch
    order = sorted(range(len(dataset)), key=lambda i: -float(dataset[i][1].sum()))[:4]
    inputs = torch.stack([dataset[i][0] for i in order])
    targets = torch.stack([dataset[i][1] for i in order])

    model = UNetPlusPlus(in_channels=1)
    optimizer = RAdam(model.parameters(), lr=0.001)
    final = None
    for epoch in range(200):
        for _ in range(8):  # one epoch = eight passes over the same batch
            optimizer.zero_grad()
            loss = hybrid_loss(model(inputs), targets)
            loss.backward()
            optimizer.step()
        final = float(loss.detach())
        if final < 0.05:
            break
    assert final < 0.05, f"single-batch loss stuck at {final:.4f}"


def test_train_folds_writes_contract_log(ov_cohort, tmp_path):
    config = TrainConfig(
        manifest_path=str(ov_cohort),
        out_dir=str(tmp_path / "run"),
        channels="subtraction",
        max_epochs=2,
        k_folds=5,
        holdout=2,
        seed=1,
        fold_ids=[0, 1],
    )
    results = train_folds(config)
    assert [r.fold for r in results] == [0, 1]
    log_lines = (tmp_path / "run" / "train_log.jsonl").read_text().splitlines()
    assert len(log_lines) == 2
    for line in log_lines:
        record = json.loads(line)
        assert set(record) >= {"fold", "tt_seconds", "epochs", "best_epoch"}
        assert record["tt_seconds"] > 0
        assert record["epochs"] == 2
    assert (tmp_path / "run" / "fold_0" / "best.pt").is_file()
    assert (tmp_path / "run" / "folds.json").is_file()


def test_full_log_has_one_line_per_fold(ov_cohort, tmp_path):
    config = TrainConfig(
        manifest_path=str(ov_cohort),
        out_dir=str(tmp_path / "run"),
        channels="subtraction",
        max_epochs=1,
        seed=2,
    )
    results = train_folds(config)
    assert len(results) == 5
    log_lines = (tmp_path / "run" / "train_log.jsonl").read_text().splitlines()
    assert len(log_lines) == 5
    assert sorted(json.loads(l)["fold"] for l in log_lines) == [0, 1, 2, 3, 4]


def test_nan_input_aborts_fold_with_diagnostic(ov_cohort, tmp_path, monkeypatch):
    import bls_trainer.data as data_mod

    original = data_mod.read_volume

    def poisoned(path):
        data, affine = original(path)
        if "subtraction" in str(path):
            data = data.astype(np.float32).copy()
            data[0, 0, 0] = np.nan
        return data, affine

    monkeypatch.setattr(data_mod, "read_volume", poisoned)
    config = TrainConfig(
        manifest_path=str(ov_cohort),
        out_dir=str(tmp_path / "run"),
        channels="subtraction",
        max_epochs=3,
        seed=3,
        fold_ids=[0],
    )
    results = train_folds(config)
    assert results[0].status == "diverged"
    record = json.loads((tmp_path / "run" / "train_log.jsonl").read_text().splitlines()[0])
    assert record["status"] == "diverged"


def test_bad_weights_rejected(tmp_path):
    with pytest.raises(ValueError, match="sum to 1"):
        TrainConfig(manifest_path="m.json", out_dir=str(tmp_path), weights=(0.3, 0.3, 0.3))
