"""Round-trip and failure-mode tests for the NIfTI-1 layer."""

import gzip
import os
import struct

import numpy as np
import pytest

from roiforge import nifti
from roiforge.errors import DataError
from roiforge.volumes import VolumeGrid, load_mask, load_volume, ras_affine, save_volume

from helpers import make_grid, make_mask


def _roundtrip(tmp_path, data, spacing=(1.0, 0.7, 2.5), suffix=".nii.gz"):
    path = tmp_path / f"vol{suffix}"
    save_volume(VolumeGrid(data=data, spacing=spacing, affine=ras_affine(spacing)), path)
    return load_volume(path)


@pytest.mark.parametrize("suffix", [".nii", ".nii.gz"])
def test_roundtrip_random_float32(tmp_path, suffix):
    rng = np.random.default_rng(0)
    data = rng.random((64, 64, 20)).astype(np.float32)
    back = _roundtrip(tmp_path, data, suffix=suffix)
    assert back.shape == (64, 64, 20)
    assert np.array_equal(back.data, data)
    assert back.data.dtype == np.float32


@pytest.mark.parametrize(
    "dtype", [np.uint8, np.int16, np.int32, np.float32, np.float64]
)
def test_roundtrip_all_supported_dtypes(tmp_path, dtype):
    rng = np.random.default_rng(1)
    if np.issubdtype(dtype, np.floating):
        data = rng.standard_normal((7, 5, 3)).astype(dtype)
    else:
        info = np.iinfo(dtype)
        data = rng.integers(info.min, info.max, size=(7, 5, 3)).astype(dtype)
    back = _roundtrip(tmp_path, data)
    assert np.array_equal(back.data, data)
    assert back.data.dtype == dtype


def test_roundtrip_binary_mask(tmp_path):
    rng = np.random.default_rng(2)
    data = (rng.random((10, 12, 6)) > 0.5).astype(np.uint8)
    path = tmp_path / "mask.nii.gz"
    save_volume(make_mask(data), path)
    back = load_mask(path)
    assert np.array_equal(back.data, data)
    assert set(np.unique(back.data)) <= {0, 1}


def test_roundtrip_spacing_within_tolerance(tmp_path):
    spacing = (0.7, 1.3, 2.9)
    back = _roundtrip(tmp_path, np.zeros((4, 4, 4), dtype=np.float32), spacing=spacing)
    assert np.allclose(back.spacing, spacing, atol=1e-6)


def test_missing_file_error(tmp_path):
    with pytest.raises(DataError, match="file not found"):
        load_volume(tmp_path / "nope.nii.gz")


def test_reject_4d_timeseries(tmp_path):
    # extend the writer by hand: a two-timepoint file must be refused
    path = tmp_path / "t4d.nii"
    data = np.zeros((4, 4, 4, 2), dtype=np.float32)
    grid3 = np.zeros((4, 4, 4), dtype=np.float32)
    save_volume(make_grid(grid3), path)
    raw = bytearray(path.read_bytes())
    dim = struct.pack("<8h", 4, 4, 4, 4, 2, 1, 1, 1)
    raw[40:56] = dim
    raw = raw[: nifti.VOX_OFFSET] + data.tobytes(order="F")
    path.write_bytes(bytes(raw))
    with pytest.raises(DataError, match="expected 3D volume"):
        load_volume(path)


def test_trailing_singleton_dim_is_squeezed(tmp_path):
    path = tmp_path / "t1.nii"
    save_volume(make_grid(np.ones((3, 4, 5), dtype=np.float32)), path)
    raw = bytearray(path.read_bytes())
    raw[40:56] = struct.pack("<8h", 4, 3, 4, 5, 1, 1, 1, 1)
    path.write_bytes(bytes(raw))
    back = load_volume(path)
    assert back.shape == (3, 4, 5)


def test_not_a_nifti_file(tmp_path):
    path = tmp_path / "junk.nii"
    path.write_bytes(b"\x00" * 400)
    with pytest.raises(DataError, match="sizeof_hdr"):
        load_volume(path)


def test_save_to_missing_directory(tmp_path):
    grid = make_grid(np.zeros((4, 4, 4), dtype=np.float32))
    with pytest.raises(DataError, match="directory does not exist"):
        save_volume(grid, tmp_path / "absent" / "v.nii")


def test_save_to_unwritable_path(tmp_path):
    blocker = tmp_path / "file.txt"
    blocker.write_text("in the way")
    grid = make_grid(np.zeros((4, 4, 4), dtype=np.float32))
    with pytest.raises(DataError):
        save_volume(grid, blocker / "v.nii")  # parent is a regular file


@pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
def test_save_to_readonly_directory(tmp_path):
    ro = tmp_path / "ro"
    ro.mkdir()
    os.chmod(ro, 0o500)
    grid = make_grid(np.zeros((4, 4, 4), dtype=np.float32))
    try:
        with pytest.raises(DataError, match="cannot write"):
            save_volume(grid, ro / "v.nii")
    finally:
        os.chmod(ro, 0o700)


def test_gzip_output_is_deterministic(tmp_path):
    data = np.arange(60, dtype=np.float32).reshape(3, 4, 5)
    save_volume(make_grid(data), tmp_path / "a.nii.gz")
    save_volume(make_grid(data), tmp_path / "b.nii.gz")
    assert (tmp_path / "a.nii.gz").read_bytes() == (tmp_path / "b.nii.gz").read_bytes()


def test_plain_and_gz_payloads_match(tmp_path):
    data = np.arange(24, dtype=np.float32).reshape(2, 3, 4)
    save_volume(make_grid(data), tmp_path / "a.nii")
    save_volume(make_grid(data), tmp_path / "a.nii.gz")
    with gzip.open(tmp_path / "a.nii.gz") as fh:
        assert fh.read() == (tmp_path / "a.nii").read_bytes()


def test_orientation_populated_from_header(tmp_path):
    back = _roundtrip(tmp_path, np.zeros((4, 4, 4), dtype=np.float32))
    assert back.orientation == ("R", "A", "S")
    assert back.affine is not None
