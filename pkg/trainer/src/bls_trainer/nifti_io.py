"""Self-contained NIfTI-1 reading and writing.

The trainer talks to the cohort toolkit purely through files, so it carries
its own small implementation of the single-file NIfTI-1 layout instead of
importing the toolkit. Little-endian, 3D payloads, x fastest on disk.
"""

from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np

_DTYPES = {2: np.uint8, 4: np.int16, 8: np.int32, 16: np.float32, 64: np.float64}
_CODES = {np.dtype(np.uint8): (2, 8), np.dtype(np.float32): (16, 32)}


def read_volume(path) -> tuple[np.ndarray, np.ndarray]:
    """Return (data indexed (x, y, z), 4x4 voxel-to-world affine)."""
    path = Path(path)
    with path.open("rb") as raw:
        blob = raw.read(2)
        raw.seek(0)
        fh = gzip.open(raw) if blob == b"\x1f\x8b" else raw
        header = fh.read(352)
        if struct.unpack_from("<i", header, 0)[0] != 348:
            raise ValueError(f"not a little-endian NIfTI-1 file: {path}")
        dim = struct.unpack_from("<8h", header, 40)
        datatype = struct.unpack_from("<h", header, 70)[0]
        vox_offset = int(struct.unpack_from("<f", header, 108)[0])
        sform_code = struct.unpack_from("<h", header, 254)[0]
        srows = struct.unpack_from("<12f", header, 280)

        ndim = dim[0]
        shape = [max(1, d) for d in dim[1 : ndim + 1]]
        while len(shape) > 3 and shape[-1] == 1:
            shape.pop()
        if len(shape) != 3:
            raise ValueError(f"expected a 3D volume: {path}")
        if datatype not in _DTYPES:
            raise ValueError(f"unsupported datatype code {datatype}: {path}")

        fh.seek(vox_offset)
        count = int(np.prod(shape))
        dtype = np.dtype(_DTYPES[datatype])
        data = np.frombuffer(fh.read(count * dtype.itemsize), dtype=dtype, count=count)
        data = data.reshape(shape, order="F")

    affine = np.eye(4)
    if sform_code > 0:
        affine[0, :] = srows[0:4]
        affine[1, :] = srows[4:8]
        affine[2, :] = srows[8:12]
    return data, affine


def write_volume(path, data: np.ndarray, affine: np.ndarray) -> None:
    """Write a float32 or uint8 volume as single-file NIfTI-1 (.nii / .nii.gz)."""
    path = Path(path)
    data = np.asarray(data)
    if data.ndim != 3:
        raise ValueError(f"expected 3D data, got {data.ndim}D")
    dtype = np.dtype(np.uint8) if data.dtype == np.uint8 else np.dtype(np.float32)
    datatype, bitpix = _CODES[dtype]
    spacing = [float(np.linalg.norm(affine[:3, j])) or 1.0 for j in range(3)]

    header = bytearray(352)
    struct.pack_into("<i", header, 0, 348)
    struct.pack_into("<8h", header, 40, 3, *data.shape, 1, 1, 1, 1)
    struct.pack_into("<2h", header, 70, datatype, bitpix)
    struct.pack_into("<8f", header, 76, 1.0, *spacing, 0, 0, 0, 0)
    struct.pack_into("<f", header, 108, 352.0)
    struct.pack_into("<2f", header, 112, 1.0, 0.0)  # scl_slope, scl_inter
    struct.pack_into("<B", header, 123, 2)  # xyzt_units: mm
    struct.pack_into("<2h", header, 252, 0, 1)  # qform off, sform on
    struct.pack_into("<12f", header, 280, *np.asarray(affine, float)[:3, :].ravel())
    struct.pack_into("<4s", header, 344, b"n+1\x00")

    payload = data.astype(dtype).tobytes(order="F")
    with path.open("wb") as raw:
        if path.suffix == ".gz":
            with gzip.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0) as fh:
                fh.write(bytes(header))
                fh.write(payload)
        else:
            raw.write(bytes(header))
            raw.write(payload)
