"""roiforge command line: phantom, prep, optimize, analyze, evaluate, footprint, pipeline.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 internal error.
All reports are JSON-first with CSV renditions of table-shaped data; PNG
figures are rendered behind --plots. Reports carry no timestamps and no
absolute paths, so a fixed seed reproduces them byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import traceback
from pathlib import Path

import numpy as np

from . import __version__, analytics, energy, metrics, prep, roi
from .errors import DataError, RoiforgeError
from .manifest import (
    APPROACHES,
    BRS_OV,
    BRS_SLS,
    BRS_WV,
    WV_RAW,
    CohortManifest,
    load_manifest,
    validate_manifest,
)
from .phantom import PhantomSpec, generate_cohort
from .volumes import load_mask, load_volume


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _parse_shape(text: str) -> tuple[int, int, int]:
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected WxHxD, got {text!r}")
    return tuple(int(p) for p in parts)


def _parse_range(text: str) -> tuple[int, int]:
    parts = text.split("..")
    if len(parts) == 1:
        lo = hi = int(parts[0])
    elif len(parts) == 2:
        lo, hi = int(parts[0]), int(parts[1])
    else:
        raise argparse.ArgumentTypeError(f"expected LO..HI, got {text!r}")
    return lo, hi

def _parse_floats(text: str, n: int) -> tuple[float, ...]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != n:
        raise argparse.ArgumentTypeError(f"expected {n} comma-separated values, got {text!r}")
    return tuple(parts)


def _provenance(subcommand: str, **params) -> dict:
    return {
        "tool": "roiforge",
        "version": __version__,
        "subcommand": subcommand,
        "params": params,
    }


def write_json(payload: dict, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_csv(rows: list[dict], path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not rows:
        path.write_text("")
        return
    fields = list(rows[0].keys())
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)


# ---------------------------------------------------------------- phantom


def cmd_phantom(args) -> int:
    spec = PhantomSpec(
        n_patients=args.patients,
        shape=args.shape,
        spacing=args.spacing,
        seed=args.seed,
        lesion_count=args.lesions,
        lesion_radius_mm=args.lesion_radius,
        heart=not args.no_heart,
        anterior_noise=not args.no_noise,
        depth_jitter=args.depth_jitter,
    )
    manifest = generate_cohort(spec, args.out, compress=not args.no_compress)
    print(f"wrote {len(manifest.patients)} phantom patients to {args.out}")
    return 0


# ---------------------------------------------------------------- prep


def _load_candidates(path: Path) -> tuple[list[prep.PatientCase], list[prep.ExclusionRecord]]:
    try:
        listing = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read candidates listing {path}: {exc}") from exc
    cases, exclusions = [], []
    for patient in listing.get("patients", []):
        series = [
            prep.SeriesFile(descriptor=s["descriptor"], path=path.parent / s["path"])
            for s in patient.get("series", [])
        ]
        paired = prep.pair_contrast_series(str(patient["patient_id"]), series)
        if isinstance(paired, prep.ExclusionRecord):
            exclusions.append(paired)
        else:
            cases.append(prep.load_case(paired))
    return cases, exclusions


def cmd_prep(args) -> int:
    if (args.source is None) == (args.candidates is None):
        raise DataError("provide exactly one of --source or --candidates")
    exclusions: list[prep.ExclusionRecord] = []
    if args.source is not None:
        manifest = load_manifest(args.source)
        validate_manifest(manifest)
        cases = prep.cases_from_manifest(manifest)
        cohort_id = manifest.cohort_id
    else:
        cases, exclusions = _load_candidates(Path(args.candidates))
        cohort_id = Path(args.candidates).stem
    crop_plan = None
    if args.plan is not None:
        plan_path = Path(args.plan)
        if not plan_path.is_file():
            raise DataError(f"crop plan not found: {plan_path}")
        crop_plan = roi.CropPlan.from_dict(json.loads(plan_path.read_text())["plan"])
    manifest = prep.assemble_approach(
        cases,
        args.approach,
        args.out,
        seed=args.seed,
        crop_plan=crop_plan,
        normalize=not args.no_normalize,
        compress=not args.no_compress,
        jobs=args.jobs,
        cohort_id=cohort_id,
        exclusions=exclusions,
    )
    shape = tuple(manifest.patients[0].shape) if manifest.patients else None
    print(
        f"assembled {args.approach}: {len(manifest.patients)} patients, shape {shape}, "
        f"{len(exclusions)} excluded"
    )
    return 0


# ---------------------------------------------------------------- optimize


def _scan_manifest_extents(manifest: CohortManifest) -> list[roi.ExtentReport]:
    reports = []
    for entry in manifest.patients:
        mask = load_mask(manifest.resolve(entry.files["region_mask"]))
        reports.append(roi.scan_extent(mask, patient_id=entry.patient_id))
    return reports


def cmd_optimize(args) -> int:
    manifest = load_manifest(args.manifest)
    validate_manifest(manifest)
    reports = _scan_manifest_extents(manifest)
    plan = roi.plan_crop(reports, multiple=args.multiple)
    write_json(
        {
            "provenance": _provenance("optimize", multiple=args.multiple),
            "cohort_id": manifest.cohort_id,
            "approach": manifest.approach,
            "plan": plan.to_dict(),
            "extents": [r.to_dict() for r in reports],
        },
        args.out,
    )
    print(
        f"crop plan: required {plan.required_height} -> crop {plan.crop_height} "
        f"(safe distance {plan.safe_distance_px} px / {plan.safe_distance_mm:.2f} mm)"
    )
    return 0


# ---------------------------------------------------------------- analyze


def _analyze_manifest(manifest: CohortManifest) -> dict:
    pairs = []
    for entry in manifest.patients:
        region = load_mask(manifest.resolve(entry.files["region_mask"]))
        lesion = load_mask(manifest.resolve(entry.files["lesion_mask"]))
        pairs.append((region, lesion))
    overlay = analytics.overlay_map(pairs)
    x_hist, y_hist = analytics.axis_histograms(overlay)
    profile = analytics.midline_profile(overlay)
    budget = analytics.pixel_budget([manifest])
    return {
        "overlay": overlay,
        "x_hist": x_hist,
        "y_hist": y_hist,
        "profile": profile,
        "budget": budget[manifest.approach],
    }


def _analysis_report(manifest: CohortManifest, result: dict) -> dict:
    overlay = result["overlay"]
    return {
        "approach": manifest.approach,
        "cohort_id": manifest.cohort_id,
        "patients": overlay.n_patients,
        "slices": overlay.n_slices,
        "overlay": {
            "width": int(overlay.region_counts.shape[0]),
            "height": int(overlay.region_counts.shape[1]),
            "region_count_max": int(overlay.region_counts.max(initial=0)),
            "lesion_count_max": int(overlay.lesion_counts.max(initial=0)),
            "lesion_count_total": int(overlay.lesion_counts.sum()),
        },
        "histograms": {
            "x": [int(v) for v in result["x_hist"].values],
            "y": [int(v) for v in result["y_hist"].values],
        },
        "midline": {
            "extent": [int(v) for v in result["profile"].extent],
            "h_max_mid": result["profile"].h_max_mid,
        },
        "pixel_budget": result["budget"],
    }


def _write_analysis_tables(result: dict, out: Path) -> None:
    stem = out.with_suffix("")
    x_vals = result["x_hist"].values
    y_vals = result["y_hist"].values
    n = max(len(x_vals), len(y_vals))
    rows = []
    for i in range(n):
        rows.append(
            {
                "index": i,
                "x_hist": int(x_vals[i]) if i < len(x_vals) else "",
                "y_hist": int(y_vals[i]) if i < len(y_vals) else "",
            }
        )
    write_csv(rows, Path(f"{stem}_histograms.csv"))
    write_csv(
        [{"x": i, "extent": int(v)} for i, v in enumerate(result["profile"].extent)],
        Path(f"{stem}_midline.csv"),
    )


def _render_analysis_plots(manifest: CohortManifest, result: dict, plot_dir: Path) -> None:
    from . import plotting

    plot_dir.mkdir(parents=True, exist_ok=True)
    tag = manifest.approach.lower()
    plotting.save_overlay_png(
        result["overlay"], plot_dir / f"{tag}_overlay.png", title=f"{manifest.approach} overlay"
    )
    plotting.save_histograms_png(
        result["x_hist"], result["y_hist"], plot_dir / f"{tag}_histograms.png",
        title=f"{manifest.approach} lesion histograms",
    )
    plotting.save_midline_png(
        result["profile"], plot_dir / f"{tag}_midline.png",
        title=f"{manifest.approach} region extent",
    )


def cmd_analyze(args) -> int:
    manifest = load_manifest(args.manifest)
    validate_manifest(manifest)
    result = _analyze_manifest(manifest)
    report = {"provenance": _provenance("analyze")}
    report.update(_analysis_report(manifest, result))
    out = Path(args.out)
    write_json(report, out)
    _write_analysis_tables(result, out)
    if args.plots is not None:
        _render_analysis_plots(manifest, result, Path(args.plots))
    print(
        f"analyzed {manifest.approach}: {result['overlay'].n_patients} patients, "
        f"H_max|mid {result['profile'].h_max_mid}"
    )
    return 0


# ---------------------------------------------------------------- evaluate


def _volume_stem(path: Path) -> str:
    name = path.name
    for suffix in (".nii.gz", ".nii"):
        if name.endswith(suffix):
            return name[: -len(suffix)]
    return path.stem


def _evaluate_pair(prob_path: Path, gt_path: Path, threshold: float,
                   bins: tuple[float, float]) -> dict:
    prob = load_volume(prob_path)
    gt = load_mask(gt_path)
    pred = metrics.binarize(prob, threshold)
    counts = metrics.confusion(pred, gt)
    report = metrics.component_analysis(pred, gt, threshold=threshold, bins=bins)
    return {
        "confusion": counts.to_dict(),
        "dice": metrics.dice(counts),
        "iou": metrics.iou(counts),
        "precision": metrics.precision(counts),
        "recall": metrics.recall(counts),
        "fp_bin_counts": report.bin_counts("fp"),
        "fn_bin_counts": report.bin_counts("fn"),
        "components": report,
    }


def _aggregate_evaluation(per_patient: dict[str, dict], bins: tuple[float, float]) -> dict:
    labels = metrics.bin_labels(bins)
    avg = {
        key: (sum(row[key] for row in per_patient.values()) / len(per_patient))
        if per_patient else None
        for key in ("dice", "iou", "precision", "recall")
    }
    totals = {
        kind: {
            label: sum(row[f"{kind}_bin_counts"][label] for row in per_patient.values())
            for label in labels
        }
        for kind in ("fp", "fn")
    }
    return {"average": avg, "component_totals": totals}


def cmd_evaluate(args) -> int:
    pred_dir, gt_dir = Path(args.pred), Path(args.gt)
    for d in (pred_dir, gt_dir):
        if not d.is_dir():
            raise DataError(f"directory not found: {d}")
    pred_files = sorted(
        [p for p in pred_dir.iterdir() if p.name.endswith((".nii", ".nii.gz"))]
    )
    if not pred_files:
        raise DataError(f"no NIfTI volumes found in {pred_dir}")
    bins = tuple(args.bins)
    per_patient: dict[str, dict] = {}
    for prob_path in pred_files:
        stem = _volume_stem(prob_path)
        gt_path = None
        for suffix in (".nii.gz", ".nii"):
            cand = gt_dir / f"{stem}{suffix}"
            if cand.is_file():
                gt_path = cand
                break
        if gt_path is None:
            raise DataError(f"no ground-truth volume for {stem!r} in {gt_dir}")
        row = _evaluate_pair(prob_path, gt_path, args.threshold, bins)
        row.pop("components")
        per_patient[stem] = row
    summary = _aggregate_evaluation(per_patient, bins)
    report = {
        "provenance": _provenance("evaluate", threshold=args.threshold, bins=list(bins)),
        "threshold": args.threshold,
        "bins_mm3": list(bins),
        "bin_labels": list(metrics.bin_labels(bins)),
        "connectivity": 26,
        "per_patient": per_patient,
        "average": summary["average"],
        "component_totals": summary["component_totals"],
    }
    out = Path(args.out)
    write_json(report, out)
    rows = [
        {
            "patient": pid,
            "dice": row["dice"],
            "iou": row["iou"],
            "precision": row["precision"],
            "recall": row["recall"],
            "tp": row["confusion"]["tp"],
            "fp": row["confusion"]["fp"],
            "fn": row["confusion"]["fn"],
            "tn": row["confusion"]["tn"],
        }
        for pid, row in per_patient.items()
    ]
    write_csv(rows, out.with_suffix("").with_name(out.with_suffix("").name + "_patients.csv"))
    avg = summary["average"]
    print(
        f"evaluated {len(per_patient)} patients: dice {avg['dice']:.4f}, "
        f"iou {avg['iou']:.4f}, precision {avg['precision']:.4f}, recall {avg['recall']:.4f}"
    )
    return 0


# ---------------------------------------------------------------- footprint


def cmd_footprint(args) -> int:
    records = energy.ingest_training_log(args.log, grid_kg_per_kwh=args.grid_intensity)
    report = {
        "provenance": _provenance("footprint", grid_kg_per_kwh=args.grid_intensity),
        "grid_kg_per_kwh": args.grid_intensity,
        "normalization_note": (
            "norm_cfp follows the published form and can be negative; "
            "minmax_score is the conventional alternative"
        ),
        "folds": [r.to_dict() for r in records],
        "summary": energy.summarize(records),
    }
    out = Path(args.out)
    write_json(report, out)
    write_csv([r.to_dict() for r in records], out.with_suffix(".csv"))
    print(f"footprint: {len(records)} folds ingested")
    return 0


# ---------------------------------------------------------------- pipeline

_PIPELINE_DEFAULTS = {
    "patients": 6,
    "shape": (64, 64, 20),
    "spacing": (1.0, 1.0, 1.0),
    "lesions": (1, 3),
    "lesion_radius": (1.5, 3.5),
    "depth_jitter": 4,
    "seed": 0,
    "multiple": 32,
    "threshold": 0.5,
    "bins": (10.0, 20.0),
    "jobs": 1,
    "compress": True,
    "train_log": None,
}


def _pipeline_config(args) -> dict:
    cfg = dict(_PIPELINE_DEFAULTS)
    if args.config is not None:
        config_path = Path(args.config)
        if not config_path.is_file():
            raise DataError(f"config file not found: {config_path}")
        try:
            loaded = json.loads(config_path.read_text())
        except json.JSONDecodeError as exc:
            raise DataError(f"config is not valid JSON: {config_path}: {exc}") from exc
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise DataError(f"unknown config keys: {sorted(unknown)}")
        for key in ("shape", "spacing", "lesions", "lesion_radius", "bins"):
            if key in loaded and isinstance(loaded[key], list):
                loaded[key] = tuple(loaded[key])
        if loaded.get("train_log"):
            loaded["train_log"] = str(config_path.parent / loaded["train_log"])
        cfg.update(loaded)
    for key in cfg:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if args.no_compress:
        cfg["compress"] = False
    return cfg


def cmd_pipeline(args) -> int:
    cfg = _pipeline_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg["train_log"] is not None and not Path(cfg["train_log"]).is_file():
        raise DataError(f"training log not found: {cfg['train_log']}")

    echo = {
        k: (list(v) if isinstance(v, tuple) else v)
        for k, v in cfg.items()
        if k != "train_log"
    }
    echo["train_log_attached"] = cfg["train_log"] is not None
    provenance = _provenance("pipeline", **echo)

    spec = PhantomSpec(
        n_patients=cfg["patients"],
        shape=cfg["shape"],
        spacing=cfg["spacing"],
        seed=cfg["seed"],
        lesion_count=cfg["lesions"],
        lesion_radius_mm=cfg["lesion_radius"],
        depth_jitter=cfg["depth_jitter"],
    )
    source = generate_cohort(spec, out / "source", compress=cfg["compress"])
    cases = prep.cases_from_manifest(source)

    manifests: dict[str, CohortManifest] = {}
    for approach in (WV_RAW, BRS_WV, BRS_SLS):
        manifests[approach] = prep.assemble_approach(
            cases,
            approach,
            out / approach.lower(),
            seed=cfg["seed"],
            compress=cfg["compress"],
            jobs=cfg["jobs"],
            cohort_id=source.cohort_id,
        )

    reports = _scan_manifest_extents(manifests[BRS_SLS])
    plan = roi.plan_crop(reports, multiple=cfg["multiple"])
    write_json(
        {
            "provenance": provenance,
            "plan": plan.to_dict(),
            "extents": [r.to_dict() for r in reports],
        },
        out / "plan.json",
    )
    manifests[BRS_OV] = prep.assemble_approach(
        cases,
        BRS_OV,
        out / BRS_OV.lower(),
        seed=cfg["seed"],
        crop_plan=plan,
        compress=cfg["compress"],
        jobs=cfg["jobs"],
        cohort_id=source.cohort_id,
    )

    budget = analytics.pixel_budget([manifests[a] for a in APPROACHES])
    analysis_summary = {}
    for approach in APPROACHES:
        manifest = manifests[approach]
        result = _analyze_manifest(manifest)
        report = {"provenance": provenance}
        report.update(_analysis_report(manifest, result))
        path = out / "analysis" / f"{approach.lower()}.json"
        write_json(report, path)
        _write_analysis_tables(result, path)
        if args.plots:
            _render_analysis_plots(manifest, result, out / "plots")
        analysis_summary[approach] = {
            "h_max_mid": result["profile"].h_max_mid,
            "lesion_count_total": int(result["overlay"].lesion_counts.sum()),
            "patients": result["overlay"].n_patients,
            "slices": result["overlay"].n_slices,
        }
    if args.plots:
        from . import plotting

        (out / "plots").mkdir(parents=True, exist_ok=True)
        plotting.save_budget_png(budget, out / "plots" / "pixel_budget.png")

    # Tables 4/5-shaped section using the subtraction volume as a stand-in
    # probability map; real predictions come from the external trainer.
    bins = tuple(cfg["bins"])
    evaluation = {"prediction_source": "subtraction-heuristic", "per_approach": {}}
    for approach in APPROACHES:
        manifest = manifests[approach]
        per_patient = {}
        for entry in manifest.patients:
            row = _evaluate_pair(
                manifest.resolve(entry.files["subtraction"]),
                manifest.resolve(entry.files["lesion_mask"]),
                cfg["threshold"],
                bins,
            )
            row.pop("components")
            per_patient[entry.patient_id] = row
        summary = _aggregate_evaluation(per_patient, bins)
        eval_report = {
            "provenance": provenance,
            "approach": approach,
            "prediction_source": "subtraction-heuristic",
            "threshold": cfg["threshold"],
            "bins_mm3": list(bins),
            "per_patient": per_patient,
            "average": summary["average"],
            "component_totals": summary["component_totals"],
        }
        write_json(eval_report, out / "eval" / f"{approach.lower()}.json")
        evaluation["per_approach"][approach] = {
            "average": summary["average"],
            "fp_bin_counts": summary["component_totals"]["fp"],
            "fn_bin_counts": summary["component_totals"]["fn"],
        }

    energy_section = None
    if cfg["train_log"] is not None:
        records = energy.ingest_training_log(cfg["train_log"])
        energy_section = {
            "folds": [r.to_dict() for r in records],
            "summary": energy.summarize(records),
        }

    h_wv = analysis_summary[BRS_WV]["h_max_mid"]
    h_sls = analysis_summary[BRS_SLS]["h_max_mid"]
    h_ov = analysis_summary[BRS_OV]["h_max_mid"]
    comparison = {
        "provenance": provenance,
        "pixel_budget": budget,
        "crop_plan": plan.to_dict(),
        "analytics": analysis_summary,
        "h_max_mid_ordering_ov_le_sls_le_wv": bool(h_ov <= h_sls <= h_wv),
        "evaluation": evaluation,
        "energy": energy_section,
    }
    write_json(comparison, out / "comparison.json")

    write_csv(
        [
            {
                "approach": a,
                "shape": "x".join(str(v) for v in budget[a]["shape"]),
                "voxels_per_patient": budget[a]["voxels_per_patient"],
                "slices_per_patient": budget[a]["slices_per_patient"],
                "voxel_ratio_vs_wv_raw": budget[a]["voxel_ratio_vs_wv_raw"],
                "slice_ratio_vs_wv_raw": budget[a]["slice_ratio_vs_wv_raw"],
                "h_max_mid": analysis_summary[a]["h_max_mid"],
            }
            for a in APPROACHES
        ],
        out / "comparison_budget.csv",
    )
    write_csv(
        [
            {"approach": a, **{k: evaluation["per_approach"][a]["average"][k]
                               for k in ("dice", "iou", "precision", "recall")}}
            for a in APPROACHES
        ],
        out / "comparison_metrics.csv",
    )
    write_csv(
        [
            {
                "approach": a,
                **{f"fp {label}": evaluation["per_approach"][a]["fp_bin_counts"][label]
                   for label in metrics.bin_labels(bins)},
                **{f"fn {label}": evaluation["per_approach"][a]["fn_bin_counts"][label]
                   for label in metrics.bin_labels(bins)},
            }
            for a in APPROACHES
        ],
        out / "comparison_components.csv",
    )
    if energy_section is not None:
        write_csv(energy_section["folds"], out / "comparison_energy.csv")

    shapes = {a: tuple(manifests[a].patients[0].shape) for a in APPROACHES}
    print("pipeline complete:")
    for a in APPROACHES:
        print(f"  {a:8s} shape {shapes[a]}  voxels/patient {budget[a]['voxels_per_patient']:,}")
    print(f"  crop height {plan.crop_height} (safe distance {plan.safe_distance_px} px)")
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> _Parser:
    parser = _Parser(prog="roiforge", description=__doc__)
    parser.add_argument("--version", action="version", version=f"roiforge {__version__}")
    sub = parser.add_subparsers(dest="subcommand", parser_class=_Parser, required=True)

    p = sub.add_parser("phantom", help="generate a synthetic cohort with ground truth")
    p.add_argument("--patients", type=int, default=8)
    p.add_argument("--shape", type=_parse_shape, default=(64, 64, 20), metavar="WxHxD")
    p.add_argument("--spacing", type=lambda s: _parse_floats(s, 3), default=(1.0, 1.0, 1.0),
                   metavar="SX,SY,SZ")
    p.add_argument("--lesions", type=_parse_range, default=(1, 3), metavar="LO..HI")
    p.add_argument("--lesion-radius", type=lambda s: _parse_floats(s, 2), default=(1.5, 3.5),
                   metavar="LO,HI", help="lesion radius range in mm")
    p.add_argument("--depth-jitter", type=int, default=0,
                   help="randomly shorten each patient's depth by up to this many slices")
    p.add_argument("--no-heart", action="store_true")
    p.add_argument("--no-noise", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-compress", action="store_true", help="write .nii instead of .nii.gz")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("prep", help="assemble one approach dataset")
    p.add_argument("--source", help="source cohort manifest JSON")
    p.add_argument("--candidates", help="series-candidates listing JSON (runs pairing)")
    p.add_argument("--approach", choices=APPROACHES, required=True)
    p.add_argument("--plan", help="crop plan JSON (required for BRS_OV)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--no-compress", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_prep)

    p = sub.add_parser("optimize", help="plan the optimal-volume crop from a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--multiple", type=int, default=32)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("analyze", help="overlay maps, histograms, midline profile")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--plots", help="directory for PNG figures")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("evaluate", help="segmentation metrics and FP/FN components")
    p.add_argument("--pred", required=True, help="directory of probability volumes")
    p.add_argument("--gt", required=True, help="directory of ground-truth masks")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--bins", type=lambda s: _parse_floats(s, 2), default=(10.0, 20.0),
                   metavar="B0,B1", help="component volume bin boundaries in mm^3")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("footprint", help="carbon accounting from a fold-timing log")
    p.add_argument("--log", required=True, help="JSON-lines timing log")
    p.add_argument("--grid-intensity", type=float, default=energy.GRID_KG_PER_KWH,
                   help="kg CO2 per kWh")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_footprint)

    p = sub.add_parser("pipeline", help="phantom -> prep x4 -> optimize -> analyze -> evaluate")
    p.add_argument("--config", help="JSON config document; explicit flags override it")
    p.add_argument("--patients", type=int)
    p.add_argument("--shape", type=_parse_shape, metavar="WxHxD")
    p.add_argument("--spacing", type=lambda s: _parse_floats(s, 3), metavar="SX,SY,SZ")
    p.add_argument("--lesions", type=_parse_range, metavar="LO..HI")
    p.add_argument("--lesion-radius", type=lambda s: _parse_floats(s, 2), metavar="LO,HI")
    p.add_argument("--depth-jitter", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--multiple", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--bins", type=lambda s: _parse_floats(s, 2), metavar="B0,B1")
    p.add_argument("--jobs", type=int)
    p.add_argument("--train-log", dest="train_log", help="optional fold-timing JSONL")
    p.add_argument("--no-compress", action="store_true")
    p.add_argument("--plots", action="store_true", help="render PNG figures under OUT/plots")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return args.func(args)
    except DataError as exc:
        print(f"roiforge: error: {exc}", file=sys.stderr)
        return 2
    except RoiforgeError as exc:
        print(f"roiforge: error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 3


def run() -> None:
    sys.exit(main())
