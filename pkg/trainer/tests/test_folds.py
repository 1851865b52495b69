"""Fold split invariants over many seeded trials."""

import pytest

from bls_trainer.folds import make_folds


def _ids(n):
    return [f"p{i:03d}" for i in range(n)]


def test_twelve_patients_give_five_folds_of_two():
    splits = make_folds(_ids(12), k=5, holdout=2, seed=1)
    assert len(splits) == 5
    assert all(len(s.validation) == 2 for s in splits)
    assert all(len(s.holdout) == 2 for s in splits)
    assert all(len(s.train) == 8 for s in splits)


def test_seven_patients_boundary_gives_folds_of_one():
    splits = make_folds(_ids(7), k=5, holdout=2, seed=1)
    assert [len(s.validation) for s in splits] == [1, 1, 1, 1, 1]


def test_six_patients_is_an_error():
    with pytest.raises(ValueError, match="too few patients"):
        make_folds(_ids(6), k=5, holdout=2, seed=1)


def test_duplicate_ids_rejected():
    with pytest.raises(ValueError, match="unique"):
        make_folds(["a", "a", "b", "c", "d", "e", "f"], k=5, holdout=2)


def test_invariants_hold_over_100_seeded_trials():
    ids = _ids(13)
    for seed in range(100):
        splits = make_folds(ids, k=5, holdout=2, seed=seed)
        held = set(splits[0].holdout)
        assert len(held) == 2
        seen_validation = []
        for split in splits:
            train, val = set(split.train), set(split.validation)
            assert train.isdisjoint(val)
            assert held.isdisjoint(train | val)
            assert set(split.holdout) == held
            assert train | val | held == set(ids)
            seen_validation.extend(split.validation)
        # union of validation sets covers each non-holdout patient exactly once
        assert sorted(seen_validation) == sorted(set(ids) - held)


def test_deterministic_per_seed_and_varies_across_seeds():
    a = make_folds(_ids(10), seed=3)
    b = make_folds(_ids(10), seed=3)
    assert [s.to_dict() for s in a] == [s.to_dict() for s in b]
    c = make_folds(_ids(10), seed=4)
    assert [s.to_dict() for s in a] != [s.to_dict() for s in c]
