"""Fixtures: cohorts are built through the cohort toolkit's CLI so the
trainer is exercised purely against its file-level contract."""

import json
import subprocess
import sys

import pytest


def roiforge(*argv) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "roiforge", *map(str, argv)],
        capture_output=True,
        text=True,
    )


@pytest.fixture(scope="session")
def ov_cohort(tmp_path_factory):
    """Eight-patient BRS_OV dataset at 32x32 in-plane (multiple-of-32 safe)."""
    root = tmp_path_factory.mktemp("cohort")
    source = root / "source"
    proc = roiforge(
        "phantom", "--patients", 8, "--shape", "32x64x8", "--seed", 23,
        "--lesion-radius", "2.5,4.0", "--depth-jitter", 2, "--out", source,
    )
    assert proc.returncode == 0, proc.stderr
    sls = root / "sls"
    proc = roiforge("prep", "--source", source / "manifest.json", "--approach", "BRS_SLS",
                    "--seed", 23, "--out", sls)
    assert proc.returncode == 0, proc.stderr
    plan = root / "plan.json"
    proc = roiforge("optimize", "--manifest", sls / "manifest.json", "--multiple", 32,
                    "--out", plan)
    assert proc.returncode == 0, proc.stderr
    ov = root / "ov"
    proc = roiforge("prep", "--source", source / "manifest.json", "--approach", "BRS_OV",
                    "--seed", 23, "--plan", plan, "--out", ov)
    assert proc.returncode == 0, proc.stderr
    manifest = json.loads((ov / "manifest.json").read_text())
    assert all(p["shape"][1] % 32 == 0 for p in manifest["patients"])
    return ov / "manifest.json"
