"""Flat binary container for field snapshots.

Layout (all little-endian)::

    magic      4 bytes   b"SWFC"
    version    uint32
    d, n       uint32, uint32
    M, eps     float64, float64
    seed       int64     (-1 when not applicable)
    count      uint32    number of field blocks
    then per block:
        name_len  uint16
        name      utf-8
        values    n**d float64, row-major (C order)
"""
from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"SWFC"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIIddqI")
_NAME_LEN = struct.Struct("<H")


@dataclass
class Snapshot:
    d: int
    M: float
    n: int
    eps: float
    seed: int | None
    fields: dict[str, np.ndarray] = field(default_factory=dict)


def to_bytes(snap: Snapshot) -> bytes:
    parts = [
        _HEADER.pack(MAGIC, FORMAT_VERSION, snap.d, snap.n, float(snap.M), float(snap.eps),
                     -1 if snap.seed is None else int(snap.seed), len(snap.fields))
    ]
    shape = (snap.n,) * snap.d
    for name, values in snap.fields.items():
        values = np.asarray(values, dtype="<f8")
        if values.shape != shape:
            raise ValueError(f"block {name!r} has shape {values.shape}, expected {shape}")
        raw = name.encode("utf-8")
        parts.append(_NAME_LEN.pack(len(raw)))
        parts.append(raw)
        parts.append(np.ascontiguousarray(values).tobytes(order="C"))
    return b"".join(parts)


def from_bytes(buf: bytes) -> Snapshot:
    magic, version, d, n, M, eps, seed, count = _HEADER.unpack_from(buf, 0)
    if magic != MAGIC:
        raise ValueError("not a field container (bad magic)")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported container version {version}")
    pos = _HEADER.size
    size = n**d
    fields = {}
    for _ in range(count):
        (length,) = _NAME_LEN.unpack_from(buf, pos)
        pos += _NAME_LEN.size
        name = buf[pos:pos + length].decode("utf-8")
        pos += length
        values = np.frombuffer(buf, dtype="<f8", count=size, offset=pos)
        fields[name] = values.reshape((n,) * d).astype(float)
        pos += 8 * size
    if pos != len(buf):
        raise ValueError("trailing bytes after last block")
    return Snapshot(d, M, n, eps, None if seed == -1 else seed, fields)


def write_atomic(path, data: bytes | str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = os.fspath(path)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)), prefix=".tmp-")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save(path, snap: Snapshot) -> None:
    write_atomic(path, to_bytes(snap))


def load(path) -> Snapshot:
    with open(path, "rb") as fh:
        return from_bytes(fh.read())
