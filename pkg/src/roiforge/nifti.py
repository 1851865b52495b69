"""Minimal NIfTI-1 reader/writer.

Covers the subset of the format this toolkit produces and consumes:
single-file ``.nii`` / ``.nii.gz``, 3D scalar payloads, little- or
big-endian headers, sform/qform orientation. Voxel data is kept in
(x, y, z) index order exactly as stored on disk (x fastest).
"""

from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np

from .errors import DataError

HEADER_SIZE = 348
VOX_OFFSET = 352
_MAGIC_SINGLE = b"n+1\x00"

# sizeof_hdr .. magic, in on-disk order; calcsize must be 348.
_FIELDS_FMT = (
    "i"      # sizeof_hdr
    "10s"    # data_type (unused)
    "18s"    # db_name (unused)
    "i"      # extents
    "h"      # session_error
    "B"      # regular
    "B"      # dim_info
    "8h"     # dim
    "3f"     # intent_p1..p3
    "h"      # intent_code
    "h"      # datatype
    "h"      # bitpix
    "h"      # slice_start
    "8f"     # pixdim
    "f"      # vox_offset
    "f"      # scl_slope
    "f"      # scl_inter
    "h"      # slice_end
    "B"      # slice_code
    "B"      # xyzt_units
    "f"      # cal_max
    "f"      # cal_min
    "f"      # slice_duration
    "f"      # toffset
    "i"      # glmax
    "i"      # glmin
    "80s"    # descrip
    "24s"    # aux_file
    "h"      # qform_code
    "h"      # sform_code
    "6f"     # quatern_b,c,d qoffset_x,y,z
    "12f"    # srow_x, srow_y, srow_z
    "16s"    # intent_name
    "4s"     # magic
)

assert struct.calcsize("<" + _FIELDS_FMT) == HEADER_SIZE

_DTYPE_BY_CODE = {
    2: np.dtype(np.uint8),
    4: np.dtype(np.int16),
    8: np.dtype(np.int32),
    16: np.dtype(np.float32),
    64: np.dtype(np.float64),
    256: np.dtype(np.int8),
    512: np.dtype(np.uint16),
}
_CODE_BY_DTYPE = {
    np.dtype(np.uint8): 2,
    np.dtype(np.int16): 4,
    np.dtype(np.int32): 8,
    np.dtype(np.float32): 16,
    np.dtype(np.float64): 64,
}


def _open_read(path: Path):
    raw = path.open("rb")
    head = raw.read(2)
    raw.seek(0)
    if head == b"\x1f\x8b":
        return gzip.open(raw)
    return raw


def _quaternion_rotation(b: float, c: float, d: float, qfac: float) -> np.ndarray:
    a = np.sqrt(max(0.0, 1.0 - (b * b + c * c + d * d)))
    rot = np.array(
        [
            [a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)],
            [2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)],
            [2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - b * b - c * c],
        ]
    )
    rot[:, 2] *= qfac
    return rot


def read_nifti(path) -> tuple[np.ndarray, np.ndarray | None, tuple[float, float, float]]:
    """Read a 3D NIfTI-1 file.

    Returns (data, affine, spacing). The affine is None when the header
    carries neither an sform nor a qform. Trailing singleton dimensions
    (e.g. a 4D file with one time point) are squeezed away.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"file not found: {path}")
    with _open_read(path) as fh:
        header = fh.read(HEADER_SIZE)
        if len(header) < HEADER_SIZE:
            raise DataError(f"truncated NIfTI header: {path}")
        order = "<"
        if struct.unpack_from("<i", header)[0] != HEADER_SIZE:
            order = ">"
            if struct.unpack_from(">i", header)[0] != HEADER_SIZE:
                raise DataError(f"not a NIfTI-1 file (bad sizeof_hdr): {path}")
        vals = struct.unpack(order + _FIELDS_FMT, header)
        dim = vals[7:15]
        datatype = vals[19]
        pixdim = vals[22:30]
        vox_offset = int(vals[30])
        scl_slope, scl_inter = vals[31], vals[32]
        qform_code, sform_code = vals[44], vals[45]
        quat = vals[46:52]
        srows = vals[52:64]
        magic = vals[65]

        if magic not in (b"n+1\x00", b"ni1\x00"):
            raise DataError(f"unsupported NIfTI magic {magic!r}: {path}")
        if magic == b"ni1\x00":
            raise DataError(f"two-file (.hdr/.img) NIfTI is not supported: {path}")

        ndim = dim[0]
        if ndim < 1 or ndim > 7:
            raise DataError(f"corrupt dimension count {ndim}: {path}")
        shape = [max(1, int(d)) for d in dim[1 : ndim + 1]]
        while len(shape) > 3 and shape[-1] == 1:
            shape.pop()
        if len(shape) != 3:
            raise DataError(
                f"expected 3D volume, got {len(shape)}D with shape {tuple(shape)}: {path}"
            )

        if datatype not in _DTYPE_BY_CODE:
            raise DataError(f"unsupported NIfTI datatype code {datatype}: {path}")
        dtype = _DTYPE_BY_CODE[datatype].newbyteorder(order)

        fh.seek(vox_offset)
        count = int(np.prod(shape))
        buf = fh.read(count * dtype.itemsize)
        if len(buf) < count * dtype.itemsize:
            raise DataError(f"truncated NIfTI payload: {path}")
        data = np.frombuffer(buf, dtype=dtype, count=count)
        data = data.astype(dtype.newbyteorder("="))
        data = data.reshape(shape, order="F")

    if scl_slope not in (0.0, 1.0) or scl_inter != 0.0:
        if scl_slope == 0.0:
            scl_slope = 1.0
        data = data.astype(np.float32) * scl_slope + scl_inter

    spacing = tuple(abs(float(p)) or 1.0 for p in pixdim[1:4])
    affine = None
    if sform_code > 0:
        affine = np.eye(4)
        affine[0, :] = srows[0:4]
        affine[1, :] = srows[4:8]
        affine[2, :] = srows[8:12]
    elif qform_code > 0:
        qfac = -1.0 if pixdim[0] < 0 else 1.0
        rot = _quaternion_rotation(quat[0], quat[1], quat[2], qfac)
        affine = np.eye(4)
        affine[:3, :3] = rot * np.asarray(spacing)
        affine[:3, 3] = quat[3:6]
    if affine is not None:
        spacing = tuple(float(np.linalg.norm(affine[:3, j])) for j in range(3))
    return data, affine, spacing


def write_nifti(path, data: np.ndarray, affine: np.ndarray | None, spacing) -> None:
    """Write a 3D array as a single-file NIfTI-1 volume (gzipped for .gz paths)."""
    path = Path(path)
    data = np.asarray(data)
    if data.ndim != 3:
        raise DataError(f"expected 3D volume to write, got {data.ndim}D: {path}")
    dtype = data.dtype.newbyteorder("=")
    if dtype not in _CODE_BY_DTYPE:
        raise DataError(f"unsupported dtype for NIfTI export: {data.dtype}")
    if not path.parent.is_dir():
        raise DataError(f"directory does not exist: {path.parent}")

    dim = [3, data.shape[0], data.shape[1], data.shape[2], 1, 1, 1, 1]
    pixdim = [1.0, float(spacing[0]), float(spacing[1]), float(spacing[2]), 0, 0, 0, 0]
    if affine is not None:
        sform_code = 1
        srows = [float(v) for v in np.asarray(affine)[:3, :].ravel()]
    else:
        sform_code = 0
        srows = [0.0] * 12

    vals = [
        HEADER_SIZE,        # sizeof_hdr
        b"", b"",           # data_type, db_name
        0, 0, ord("r"), 0,  # extents, session_error, regular, dim_info
        *dim,
        0.0, 0.0, 0.0, 0,   # intent_p1..3, intent_code
        _CODE_BY_DTYPE[dtype],
        dtype.itemsize * 8,  # bitpix
        0,                  # slice_start
        *pixdim,
        float(VOX_OFFSET),
        1.0, 0.0,           # scl_slope, scl_inter
        0, 0, 2,            # slice_end, slice_code, xyzt_units (mm)
        0.0, 0.0, 0.0, 0.0,  # cal_max, cal_min, slice_duration, toffset
        0, 0,               # glmax, glmin
        b"roiforge", b"",   # descrip, aux_file
        0, sform_code,      # qform_code, sform_code
        0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        *srows,
        b"",
        _MAGIC_SINGLE,
    ]
    header = struct.pack("<" + _FIELDS_FMT, *vals)
    payload = np.asarray(data, dtype=dtype.newbyteorder("<")).tobytes(order="F")

    try:
        with path.open("wb") as raw:
            if path.suffix == ".gz":
                # mtime pinned so identical volumes produce identical bytes
                with gzip.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0) as fh:
                    fh.write(header + b"\x00" * (VOX_OFFSET - HEADER_SIZE))
                    fh.write(payload)
            else:
                raw.write(header + b"\x00" * (VOX_OFFSET - HEADER_SIZE))
                raw.write(payload)
    except OSError as exc:
        raise DataError(f"cannot write volume to {path}: {exc}") from exc
