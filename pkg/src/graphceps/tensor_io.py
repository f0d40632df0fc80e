"""Binary tensor files, JSON sidecars and CSV export.

Layout of a ``.gct`` file (all little-endian)::

    magic   4 bytes  b"GCT1"
    dtype   u1       1=float64, 2=float32, 3=complex128, 4=int64
    ndim    u1
    pad     u2       zero
    dims    ndim x u8
    payload row-major (C order) values
"""

from __future__ import annotations

import csv
import io
import json
import struct
from pathlib import Path

import numpy as np

from .audio_io import _atomic_write
from .errors import DataError

MAGIC = b"GCT1"
_CODES = {1: "<f8", 2: "<f4", 3: "<c16", 4: "<i8"}
_DTYPES = {np.dtype(v): k for k, v in _CODES.items()}


def encode_tensor(array) -> bytes:
    arr = np.asarray(array)
    code = _DTYPES.get(arr.dtype.newbyteorder("<"))
    if code is None:
        raise TypeError(f"unsupported tensor dtype {arr.dtype}")
    if arr.ndim > 255:
        raise ValueError("too many dimensions")
    header = MAGIC + struct.pack("<BBH", code, arr.ndim, 0)
    header += struct.pack(f"<{arr.ndim}Q", *arr.shape)
    payload = np.ascontiguousarray(arr, dtype=_CODES[code]).tobytes()
    return header + payload


def decode_tensor(blob: bytes) -> np.ndarray:
    if blob[:4] != MAGIC:
        raise DataError("not a graphceps tensor file (bad magic)")
    code, ndim, _ = struct.unpack("<BBH", blob[4:8])
    if code not in _CODES:
        raise DataError(f"unknown tensor dtype code {code}")
    dims = struct.unpack(f"<{ndim}Q", blob[8 : 8 + 8 * ndim])
    dtype = np.dtype(_CODES[code])
    start = 8 + 8 * ndim
    expected = int(np.prod(dims, dtype=np.int64)) * dtype.itemsize
    if len(blob) - start != expected:
        raise DataError(f"tensor payload is {len(blob) - start} bytes, header says {expected}")
    return np.frombuffer(blob[start:], dtype=dtype).reshape(dims).astype(dtype.newbyteorder("="))


def save_tensor(path, array, meta: dict | None = None) -> None:
    """Write ``array`` to ``path`` and, when given, ``meta`` to ``path + .json``."""
    path = Path(path)
    blob = encode_tensor(array)
    _atomic_write(path, lambda fh: fh.write(blob))
    if meta is not None:
        save_json(sidecar_path(path), meta)


def load_tensor(path) -> np.ndarray:
    return decode_tensor(Path(path).read_bytes())


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def save_json(path, obj) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    _atomic_write(Path(path), lambda fh: fh.write(text.encode()))


def load_json(path):
    return json.loads(Path(path).read_text())


def to_csv(array, header=None, row_labels=None) -> str:
    """Format a 1-D or 2-D real array as CSV text (``repr`` precision)."""
    arr = np.atleast_2d(np.asarray(array))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header is not None:
        writer.writerow(([""] if row_labels is not None else []) + list(header))
    for i, row in enumerate(arr):
        cells = [repr(float(v)) for v in row]
        writer.writerow(([row_labels[i]] if row_labels is not None else []) + cells)
    return buf.getvalue()


def save_csv(path, array, header=None, row_labels=None) -> None:
    text = to_csv(array, header, row_labels)
    _atomic_write(Path(path), lambda fh: fh.write(text.encode()))


def save_rows(path, fieldnames, rows) -> None:
    """Write a list of dicts as CSV."""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    text = buf.getvalue()
    _atomic_write(Path(path), lambda fh: fh.write(text.encode()))
