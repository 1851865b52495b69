"""blstrain command line: train folds and export probability volumes."""

from __future__ import annotations

import argparse
import sys

from .predict import predict_cohort
from .train import TrainConfig, train_folds


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blstrain", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("train", help="train UNet++ with patient-level cross-validation")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--channels", choices=("pc_fpc", "subtraction"), default="pc_fpc")
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--holdout", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--early-stop", type=int, default=10)
    p.add_argument("--fold", type=int, action="append", dest="fold_ids",
                   help="run only this fold (repeatable)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="write per-patient probability volumes")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--patients", help="comma-separated patient ids (default: all)")
    p.set_defaults(func=cmd_predict)
    return parser


def cmd_train(args) -> int:
    config = TrainConfig(
        manifest_path=args.manifest,
        out_dir=args.out,
        channels=args.channels,
        max_epochs=args.epochs,
        batch_size=args.batch_size,
        k_folds=args.folds,
        holdout=args.holdout,
        seed=args.seed,
        learning_rate=args.lr,
        early_stop_patience=args.early_stop,
        fold_ids=args.fold_ids,
    )
    results = train_folds(config)
    for r in results:
        print(
            f"fold {r.fold}: {r.status}, {r.epochs} epochs, best {r.best_epoch} "
            f"(val loss {r.best_val_loss:.4f}), {r.tt_seconds:.1f}s"
        )
    return 0 if all(r.status == "ok" for r in results) else 1


def cmd_predict(args) -> int:
    ids = args.patients.split(",") if args.patients else None
    written = predict_cohort(args.checkpoint, args.manifest, args.out, patient_ids=ids)
    print(f"wrote {len(written)} probability volumes to {args.out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"blstrain: error: {exc}", file=sys.stderr)
        return 2


def run() -> None:
    sys.exit(main())
