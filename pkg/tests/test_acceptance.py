"""Acceptance suite: one test per release criterion, at its stated tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS line per
criterion.
"""

import json
import time
from fractions import Fraction

import numpy as np
import pytest

from roiforge.analytics import midline_profile, overlay_map, pixel_budget
from roiforge.cli import main
from roiforge.energy import carbon_footprint, normalized_cfp
from roiforge.manifest import BRS_OV, BRS_SLS, BRS_WV, WV_RAW
from roiforge.metrics import (
    ConfusionCounts,
    component_analysis,
    confusion,
    dice,
    iou,
    precision,
    recall,
)
from roiforge.phantom import PhantomSpec, synthesize_cohort
from roiforge.prep import (
    apply_region_mask,
    apply_slice_map,
    assemble_approach,
    select_lesion_slices,
)
from roiforge.roi import apply_crop, plan_crop, scan_extent
from roiforge.volumes import load_mask

from helpers import build_case, confusion_loop, make_mask


def _passed(name: str) -> None:
    print(f"\n[ACCEPTANCE] {name}: PASS")


# ------------------------------------------------- paper-scale cohort


@pytest.fixture(scope="module")
def paper_scale(tmp_path_factory):
    """Two 352x352 patients: depths 150/120, lesion-slice counts 42/20,
    breast extents 176/140. Built through the full prep + optimize path."""
    root = tmp_path_factory.mktemp("paper_scale")
    started = time.perf_counter()

    def slab_case(pid, depth, rows, lesion_z):
        region = np.zeros((352, 352, depth), dtype=bool)
        region[40:311, rows[0] : rows[1] + 1, :] = True
        lesion = np.zeros_like(region)
        lesion[170:181, 150:161, lesion_z[0] : lesion_z[1] + 1] = True
        return build_case(pid, region, lesion)

    cases = [
        slab_case("pa", 150, (100, 275), (50, 91)),   # extent 176, 42 lesion slices
        slab_case("pb", 120, (120, 259), (30, 49)),   # extent 140, 20 lesion slices
    ]
    manifests = {}
    for approach in (WV_RAW, BRS_WV, BRS_SLS):
        manifests[approach] = assemble_approach(
            cases, approach, root / approach.lower(), seed=0, compress=False
        )
    sls = manifests[BRS_SLS]
    reports = [
        scan_extent(load_mask(sls.resolve(e.files["region_mask"])), e.patient_id)
        for e in sls.patients
    ]
    plan = plan_crop(reports, multiple=32)
    manifests[BRS_OV] = assemble_approach(
        cases, BRS_OV, root / "brs_ov", seed=0, compress=False, crop_plan=plan
    )
    elapsed = time.perf_counter() - started
    return {"manifests": manifests, "plan": plan, "elapsed": elapsed}


def test_shape_arithmetic_reproduction(paper_scale):
    manifests = paper_scale["manifests"]
    shapes = {a: tuple(manifests[a].patients[0].shape) for a in manifests}
    assert shapes[WV_RAW] == (352, 352, 150)
    assert shapes[BRS_WV] == (352, 352, 150)
    assert shapes[BRS_SLS] == (352, 352, 42)
    assert shapes[BRS_OV] == (352, 192, 42)
    for manifest in manifests.values():
        for entry in manifest.patients:
            assert tuple(entry.shape) == tuple(manifest.patients[0].shape)
    plan = paper_scale["plan"]
    assert plan.required_height == 176
    assert plan.crop_height == 192
    assert plan.safe_distance_px == 16
    assert paper_scale["elapsed"] < 60.0, f"took {paper_scale['elapsed']:.1f}s"
    _passed("shape arithmetic reproduction (Table-2 geometry, SD=16, <1 min)")


def test_voxel_budget_claim(paper_scale):
    budget = pixel_budget(list(paper_scale["manifests"].values()))
    wv = budget[WV_RAW]["voxels_per_patient"]
    ov = budget[BRS_OV]["voxels_per_patient"]
    assert wv == 352 * 352 * 150 == 18_585_600
    assert ov == 352 * 192 * 42 == 2_838_528
    assert Fraction(ov, wv) == Fraction(8064, 52800)
    assert budget[BRS_OV]["voxel_ratio_vs_wv_raw"] == 8064 / 52800
    assert Fraction(budget[BRS_SLS]["slices_per_patient"],
                    budget[WV_RAW]["slices_per_patient"]) == Fraction(42, 150)
    assert budget[BRS_SLS]["slice_ratio_vs_wv_raw"] == 0.28
    _passed("voxel budget (OV/WV = 8064/52800, SLS/WV slices = 0.28)")


def test_metrics_oracle_suite():
    rng = np.random.default_rng(2024)
    checked = 0
    for trial in range(100):
        if trial < 2:
            shape = (32, 32, 32)
        else:
            shape = tuple(int(rng.integers(1, 33)) for _ in range(3))
        density = rng.uniform(0.2, 0.8)
        pred = (rng.random(shape) < density).astype(np.uint8)
        gt = (rng.random(shape) < rng.uniform(0.2, 0.8)).astype(np.uint8)
        counts = confusion(make_mask(pred), make_mask(gt))
        tp, fp, fn, tn = confusion_loop(pred, gt)
        assert (counts.tp, counts.fp, counts.fn, counts.tn) == (tp, fp, fn, tn)

        def expect(num, den):
            return 1.0 if den == 0 else num / den

        assert dice(counts) == expect(2 * tp, 2 * tp + fn + fp)
        assert iou(counts) == expect(tp, tp + fn + fp)
        assert precision(counts) == expect(tp, tp + fp)
        assert recall(counts) == expect(tp, tp + fn)

        d, j = dice(counts), iou(counts)
        assert abs(d - 2 * j / (1 + j)) < 1e-12
        checked += 1
    assert checked == 100
    # identity also on raw random count triples
    for _ in range(1000):
        counts = ConfusionCounts(
            tp=int(rng.integers(0, 10**6)),
            fp=int(rng.integers(0, 10**6)),
            fn=int(rng.integers(0, 10**6)),
            tn=0,
        )
        d, j = dice(counts), iou(counts)
        assert abs(d - 2 * j / (1 + j)) < 1e-12
    _passed("metrics oracle suite (100 brute-force pairs, identity to 1e-12)")


def test_component_analysis_hand_counts():
    shape = (24, 24, 24)

    def blob(x0, nx, y0, ny, z0, nz):
        out = np.zeros(shape, dtype=np.uint8)
        out[x0 : x0 + nx, y0 : y0 + ny, z0 : z0 + nz] = 1
        return out

    # identical masks: nothing to report
    gt = blob(2, 3, 2, 3, 2, 3)
    report = component_analysis(make_mask(gt), make_mask(gt))
    assert report.fp_components == [] and report.fn_components == []

    # three isolated predicted blobs of 8, 10, and 20 voxels at 1 mm iso,
    # empty ground truth: one FP per bin including both boundary values
    pred = blob(0, 2, 0, 2, 0, 2) | blob(6, 2, 6, 5, 6, 1) | blob(12, 4, 12, 5, 12, 1)
    report = component_analysis(make_mask(pred), make_mask(np.zeros(shape, np.uint8)))
    assert len(report.fp_components) == 3
    assert report.bin_counts("fp") == {"V<10": 1, "10<=V<20": 1, "V>=20": 1}
    by_voxels = {c.voxels: c.bin for c in report.fp_components}
    assert by_voxels == {8: "V<10", 10: "10<=V<20", 20: "V>=20"}
    assert report.fn_components == []

    # fully missed 27-voxel lesion: one FN in the top bin
    gt = blob(1, 3, 1, 3, 1, 3)
    report = component_analysis(make_mask(np.zeros(shape, np.uint8)), make_mask(gt))
    assert len(report.fn_components) == 1
    assert report.fn_components[0].voxels == 27
    assert report.fn_components[0].bin == "V>=20"

    # boundary volumes driven by spacing: 8 voxels x 1.25 mm^3 = exactly 10 mm^3
    pred8 = blob(0, 2, 0, 2, 0, 2)
    spaced = component_analysis(
        make_mask(pred8, spacing=(1.0, 1.0, 1.25)),
        make_mask(np.zeros(shape, np.uint8), spacing=(1.0, 1.0, 1.25)),
    )
    assert spaced.fp_components[0].volume_mm3 == pytest.approx(10.0)
    assert spaced.fp_components[0].bin == "10<=V<20"

    # 16 voxels x 1.25 mm^3 = exactly 20 mm^3 -> top bin under the half-open rule
    pred16 = blob(0, 4, 0, 2, 0, 2)
    spaced = component_analysis(
        make_mask(pred16, spacing=(1.0, 1.0, 1.25)),
        make_mask(np.zeros(shape, np.uint8), spacing=(1.0, 1.0, 1.25)),
    )
    assert spaced.fp_components[0].volume_mm3 == pytest.approx(20.0)
    assert spaced.fp_components[0].bin == "V>=20"

    # partial overlap disqualifies both FP and FN status
    pred = blob(4, 3, 4, 3, 4, 1)
    gt = blob(6, 3, 6, 3, 4, 1)
    report = component_analysis(make_mask(pred), make_mask(gt))
    assert report.fp_components == [] and report.fn_components == []
    _passed("component analysis (hand counts, 10/20 mm^3 boundaries half-open)")


def test_carbon_accounting():
    cfp_wv = carbon_footprint(4500.0)
    cfp_ov = carbon_footprint(960.0)
    assert cfp_wv == pytest.approx(0.59375)
    assert cfp_ov == pytest.approx(0.12666667, abs=1e-6)
    assert abs(cfp_wv - 0.59) < 0.005
    assert abs(cfp_ov - 0.13) < 0.005
    assert normalized_cfp(0.13, 0.59, 0.13) == pytest.approx(0.8986, abs=1e-4)
    _passed("carbon accounting (0.59375 kg, 0.12667 kg, Norm 0.8986)")


def test_lossless_crop_and_midline_ordering_over_50_cohorts():
    for seed in range(1000, 1050):
        spec = PhantomSpec(
            n_patients=3,
            shape=(48, 48, 12),
            seed=seed,
            depth_jitter=3,
            lesion_radius_mm=(1.2, 2.4),
        )
        cases = synthesize_cohort(spec)

        sls_masked, sls_region, sls_lesion, reports = [], [], [], []
        for case in cases:
            masked = apply_region_mask(case.first_post_contrast, case.region_mask)
            slices = select_lesion_slices(case.lesion_mask)
            assert slices, "phantom guarantees at least one lesion"
            sls_masked.append(apply_slice_map(masked, slices))
            sls_region.append(apply_slice_map(case.region_mask, slices))
            sls_lesion.append(apply_slice_map(case.lesion_mask, slices))
            reports.append(scan_extent(sls_region[-1], case.patient_id))

        plan = plan_crop(reports, multiple=32)
        ov_region, ov_lesion = [], []
        for masked, region, lesion, report in zip(
            sls_masked, sls_region, sls_lesion, reports
        ):
            cropped = apply_crop(masked, plan, report)
            assert np.count_nonzero(cropped.data) == np.count_nonzero(masked.data), (
                f"seed {seed}: crop dropped non-zero voxels"
            )
            lesion_cropped = apply_crop(lesion, plan, report)
            assert lesion_cropped.data.sum() == lesion.data.sum(), (
                f"seed {seed}: crop dropped lesion voxels"
            )
            ov_region.append(apply_crop(region, plan, report))
            ov_lesion.append(apply_crop(lesion, plan, report))

        h_wv = midline_profile(
            overlay_map([(c.region_mask, c.lesion_mask) for c in cases])
        ).h_max_mid
        h_sls = midline_profile(
            overlay_map(list(zip(sls_region, sls_lesion)))
        ).h_max_mid
        h_ov = midline_profile(overlay_map(list(zip(ov_region, ov_lesion)))).h_max_mid
        assert h_ov <= h_sls <= h_wv, f"seed {seed}: ordering {h_ov}, {h_sls}, {h_wv}"
    _passed("lossless crop + H_max|mid ordering over 50 seeded cohorts")


def test_pipeline_determinism(tmp_path):
    argv = [
        "pipeline", "--patients", "3", "--shape", "48x64x10", "--seed", "17",
        "--depth-jitter", "3",
    ]
    assert main(argv + ["--out", str(tmp_path / "run_a")]) == 0
    assert main(argv + ["--out", str(tmp_path / "run_b")]) == 0
    files_a = sorted(p for p in (tmp_path / "run_a").rglob("*") if p.is_file())
    files_b = sorted(p for p in (tmp_path / "run_b").rglob("*") if p.is_file())
    rel_a = [p.relative_to(tmp_path / "run_a") for p in files_a]
    rel_b = [p.relative_to(tmp_path / "run_b") for p in files_b]
    assert rel_a == rel_b
    assert any(p.suffix == ".json" for p in rel_a)
    for pa, pb in zip(files_a, files_b):
        assert pa.read_bytes() == pb.read_bytes(), f"{pa.name} differs between runs"
    # reports are valid JSON with the config echoed
    comparison = json.loads((tmp_path / "run_a" / "comparison.json").read_text())
    assert comparison["provenance"]["params"]["seed"] == 17
    _passed("pipeline determinism (byte-identical reports, volumes included)")
