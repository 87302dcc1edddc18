"""Snapshot files and CSV tables.

Binary snapshot layout (all little-endian)::

    magic    4 bytes   b"ELSN"
    version  uint32    1
    d        uint32
    n        uint32
    t        float64
    nfields  uint32
    nfields x (uint16 name length, UTF-8 name)
    nfields x n**d float64 values, row-major (C order)

Vector fields are stored one component per entry, named ``u_1``, ``u_2``.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

__all__ = ["MAGIC", "VERSION", "Snapshot", "write_snapshot", "read_snapshot", "write_csv_mirror", "write_rows"]

MAGIC = b"ELSN"
VERSION = 1
_HEAD = struct.Struct("<4sIIIdI")


@dataclass(frozen=True, eq=False)
class Snapshot:
    d: int
    n: int
    t: float
    fields: dict

    def vector(self, name: str) -> np.ndarray:
        """Reassemble ``name_1 .. name_d`` into a ``(d, ...)`` array."""
        return np.stack([self.fields[f"{name}_{i + 1}"] for i in range(self.d)])


def _flatten(fields: Mapping[str, np.ndarray], d: int, n: int) -> dict:
    shape = (n,) * d
    out = {}
    for name, arr in fields.items():
        arr = np.asarray(arr, dtype=float)
        if arr.shape == shape:
            out[name] = arr
        elif arr.shape[1:] == shape:
            for i, comp in enumerate(arr):
                out[f"{name}_{i + 1}"] = comp
        else:
            raise ValueError(f"field {name!r} has shape {arr.shape}, expected {shape} or (k, *{shape})")
    return out


def write_snapshot(path, d: int, n: int, t: float, fields: Mapping[str, np.ndarray]) -> Path:
    path = Path(path)
    flat = _flatten(fields, d, n)
    with open(path, "wb") as fh:
        fh.write(_HEAD.pack(MAGIC, VERSION, d, n, float(t), len(flat)))
        for name in flat:
            raw = name.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)) + raw)
        for arr in flat.values():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return path


def read_snapshot(path) -> Snapshot:
    data = Path(path).read_bytes()
    if len(data) < _HEAD.size:
        raise ValueError(f"{path}: truncated header")
    magic, version, d, n, t, count = _HEAD.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"{path}: not a snapshot file (magic {magic!r})")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported format version {version}")
    pos = _HEAD.size
    names = []
    for _ in range(count):
        (size,) = struct.unpack_from("<H", data, pos)
        pos += 2
        names.append(data[pos : pos + size].decode("utf-8"))
        pos += size
    shape = (n,) * d
    block = 8 * n**d
    if len(data) != pos + count * block:
        raise ValueError(f"{path}: size does not match header")
    fields = {}
    for name in names:
        fields[name] = np.frombuffer(data, dtype="<f8", count=n**d, offset=pos).reshape(shape).astype(float)
        pos += block
    return Snapshot(d, n, t, fields)


def write_csv_mirror(path, x: np.ndarray, fields: Mapping[str, np.ndarray]) -> Path:
    """Column-per-field text copy of a one-dimensional snapshot."""
    path = Path(path)
    flat = _flatten(fields, 1, x.size)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", *flat])
        for i in range(x.size):
            writer.writerow([repr(float(x[i]))] + [repr(float(a[i])) for a in flat.values()])
    return path


def write_rows(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return path
