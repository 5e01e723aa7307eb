"""Minimal binary tensor container with bit-exact round trips.

Single-tensor layout (little-endian throughout, independent of host):

    bytes 0..5   magic ``ARHQT1``
    byte  6      dtype code: 0 = float32, 1 = float64
    byte  7      ndim
    next ndim*8  shape, unsigned 64-bit
    rest         payload, row-major scalars

A multi-tensor archive replaces byte 6 with the marker ``0xFF`` followed by
a 32-bit entry count; each entry is a 16-bit name length, the UTF-8 name,
and then the single-tensor body (dtype, ndim, shape, payload).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from arhq.errors import DimensionError, FormatError

__all__ = ["save_tensor", "load_tensor", "save_archive", "load_archive"]

MAGIC = b"ARHQT1"
ARCHIVE_MARKER = 0xFF
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_CODES = {"f32": 0, "f64": 1}
_MAX_NDIM = 8


def _dtype_code(dtype: str) -> int:
    if dtype not in _CODES:
        raise FormatError(f"unsupported dtype {dtype!r}, expected one of {sorted(_CODES)}")
    return _CODES[dtype]


def _encode_body(x: np.ndarray, code: int) -> bytes:
    if x.ndim < 1 or x.ndim > _MAX_NDIM:
        raise DimensionError(f"tensor rank must be in [1, {_MAX_NDIM}], got {x.ndim}")
    if x.size == 0:
        raise DimensionError(f"empty tensors are not storable, got shape {x.shape}")
    parts = [bytes([code, x.ndim])]
    for dim in x.shape:
        parts.append(struct.pack("<Q", dim))
    parts.append(np.ascontiguousarray(x, dtype=_DTYPES[code]).tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, blob: bytes, path):
        self.blob = blob
        self.pos = 0
        self.path = path

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.blob):
            raise FormatError(
                f"{self.path}: truncated {what} at byte offset {self.pos} "
                f"(need {n} bytes, have {len(self.blob) - self.pos})"
            )
        out = self.blob[self.pos : self.pos + n]
        self.pos += n
        return out

    def read_body(self) -> np.ndarray:
        at = self.pos
        code = self.take(1, "dtype byte")[0]
        if code not in _DTYPES:
            raise FormatError(f"{self.path}: bad dtype code {code} at byte offset {at}")
        ndim = self.take(1, "rank byte")[0]
        if not 1 <= ndim <= _MAX_NDIM:
            raise FormatError(f"{self.path}: bad rank {ndim} at byte offset {at + 1}")
        shape = tuple(
            struct.unpack("<Q", self.take(8, "shape entry"))[0] for _ in range(ndim)
        )
        if any(dim == 0 for dim in shape):
            raise FormatError(f"{self.path}: zero-sized dimension at byte offset {at + 2}")
        count = int(np.prod(shape))
        payload = self.take(count * _DTYPES[code].itemsize, "payload")
        return np.frombuffer(payload, dtype=_DTYPES[code]).reshape(shape).copy()


def save_tensor(x, path, dtype: str = "f64") -> None:
    """Write one tensor; ``dtype`` selects the stored precision."""
    x = np.asarray(x)
    Path(path).write_bytes(MAGIC + _encode_body(x, _dtype_code(dtype)))


def _open(path) -> _Reader:
    reader = _Reader(Path(path).read_bytes(), path)
    magic = reader.take(len(MAGIC), "magic")
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r} at byte offset 0")
    return reader


def load_tensor(path) -> np.ndarray:
    """Read a single-tensor file; returns the stored dtype unchanged."""
    reader = _open(path)
    if reader.blob[reader.pos] == ARCHIVE_MARKER:
        raise FormatError(f"{path}: file is a multi-tensor archive, use load_archive")
    out = reader.read_body()
    if reader.pos != len(reader.blob):
        raise FormatError(
            f"{path}: {len(reader.blob) - reader.pos} trailing bytes at offset {reader.pos}"
        )
    return out


def save_archive(tensors: dict, path, dtype: str = "f64") -> None:
    """Write named tensors as one archive; insertion order is preserved."""
    if not tensors:
        raise DimensionError("archive must contain at least one tensor")
    code = _dtype_code(dtype)
    parts = [MAGIC, bytes([ARCHIVE_MARKER]), struct.pack("<I", len(tensors))]
    for name, x in tensors.items():
        raw = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
        parts.append(_encode_body(np.asarray(x), code))
    Path(path).write_bytes(b"".join(parts))


def load_archive(path) -> dict:
    """Read a multi-tensor archive into an ordered name -> array dict."""
    reader = _open(path)
    marker = reader.take(1, "archive marker")[0]
    if marker != ARCHIVE_MARKER:
        raise FormatError(f"{path}: not an archive (marker byte {marker} at offset 6)")
    (count,) = struct.unpack("<I", reader.take(4, "entry count"))
    out = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<H", reader.take(2, "name length"))
        name = reader.take(name_len, "name").decode("utf-8")
        out[name] = reader.read_body()
    if reader.pos != len(reader.blob):
        raise FormatError(
            f"{path}: {len(reader.blob) - reader.pos} trailing bytes at offset {reader.pos}"
        )
    return out
