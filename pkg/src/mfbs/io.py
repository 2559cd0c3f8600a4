"""Binary field files and CSV tables.

Field file layout (all little-endian)::

    magic    5 bytes  b"MFBS1"
    version  u16
    N        u16
    d        u16
    counts   N x u32
    bounds   N x (f64 lo, f64 hi)
    seed     u64
    sampler  u8
    payload  prod(counts) * d x f64, row-major
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import FormatError
from .simulate import SAMPLER_TAGS, FieldSample, Grid

MAGIC = b"MFBS1"
VERSION = 1
_TAG_NAMES = {v: k for k, v in SAMPLER_TAGS.items()}


@dataclass
class BinaryArrayFile:
    """Decoded header plus payload of a field file."""

    version: int
    n_dims: int
    d: int
    counts: tuple
    bounds: tuple
    seed: int
    sampler: str
    values: np.ndarray

    def to_field(self) -> FieldSample:
        if self.sampler == "covariance":
            raise FormatError("file holds a covariance matrix, not a field")
        return FieldSample(Grid(self.bounds, self.counts), self.d, self.values, self.seed,
                           self.sampler)

    def header(self) -> dict:
        return {"version": self.version, "N": self.n_dims, "d": self.d,
                "counts": list(self.counts), "bounds": [list(b) for b in self.bounds],
                "seed": self.seed, "sampler": self.sampler}


def encode(counts: Sequence[int], bounds, d: int, seed: int, sampler: str,
           values: np.ndarray) -> bytes:
    counts = [int(c) for c in counts]
    bounds = np.asarray(bounds, dtype="<f8").reshape(-1, 2)
    if len(counts) != bounds.shape[0]:
        raise FormatError("counts and bounds disagree on N")
    if sampler not in SAMPLER_TAGS:
        raise FormatError(f"unknown sampler tag {sampler!r}")
    payload = np.ascontiguousarray(values, dtype="<f8").reshape(-1)
    if payload.size != int(np.prod(counts)) * d:
        raise FormatError("payload size does not match counts * d")
    head = MAGIC + struct.pack("<HHH", VERSION, len(counts), d)
    head += struct.pack(f"<{len(counts)}I", *counts)
    head += bounds.tobytes()
    head += struct.pack("<QB", int(seed) & 0xFFFFFFFFFFFFFFFF, SAMPLER_TAGS[sampler])
    return head + payload.tobytes()


def decode(buf: bytes) -> BinaryArrayFile:
    if buf[:5] != MAGIC:
        raise FormatError(f"bad magic {buf[:5]!r}, expected {MAGIC!r}")
    pos = 5
    if len(buf) < pos + 6:
        raise FormatError("truncated header")
    version, n, d = struct.unpack_from("<HHH", buf, pos)
    pos += 6
    if version != VERSION:
        raise FormatError(f"unsupported version {version}, expected {VERSION}")
    head_len = pos + 4 * n + 16 * n + 9
    if len(buf) < head_len:
        raise FormatError(f"truncated header: expected {head_len} bytes, got {len(buf)}")
    counts = struct.unpack_from(f"<{n}I", buf, pos)
    pos += 4 * n
    bounds = np.frombuffer(buf, dtype="<f8", count=2 * n, offset=pos).reshape(n, 2)
    pos += 16 * n
    seed, tag = struct.unpack_from("<QB", buf, pos)
    pos += 9
    if tag not in _TAG_NAMES:
        raise FormatError(f"unknown sampler tag {tag}")
    expected = int(np.prod(counts)) * d * 8
    actual = len(buf) - pos
    if actual != expected:
        raise FormatError(f"payload has {actual} bytes, expected {expected}")
    vals = np.frombuffer(buf, dtype="<f8", offset=pos).astype(float)
    shape = (int(np.prod(counts)), d)
    return BinaryArrayFile(version, n, d, tuple(int(c) for c in counts),
                           tuple(tuple(map(float, b)) for b in bounds), int(seed),
                           _TAG_NAMES[tag], vals.reshape(shape))


def write_field(path, sample: FieldSample) -> Path:
    path = Path(path)
    path.write_bytes(encode(sample.grid.resolution, sample.grid.interval, sample.d,
                            sample.seed, sample.sampler_tag, sample.values))
    return path


def write_covariance(path, entries: np.ndarray, seed: int = 0) -> Path:
    """Store an ``n x n`` matrix with ``N = 2``, counts ``(n, n)`` and index bounds."""
    entries = np.asarray(entries, dtype=float)
    n = entries.shape[0]
    path = Path(path)
    path.write_bytes(encode((n, n), [[0, n - 1], [0, n - 1]], 1, seed, "covariance", entries))
    return path


def read_file(path) -> BinaryArrayFile:
    return decode(Path(path).read_bytes())


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """CSV with a header row; floats are written with ``repr`` precision."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                        for v in row])
    return path


def read_csv(path) -> tuple:
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        return header, [row for row in r]
