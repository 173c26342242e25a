"""
Raw field snapshots in a small self-describing binary format.

Layout (all little-endian): magic bytes ``NLCH``, version byte 1, uint32
dim, uint32 n per axis, float64 length per axis, float64 time stamp, then
the node values as float64 in row-major order.  Bit-exact and trivially
parseable from any language.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .grid import Grid, build_grid, check_field

MAGIC = b"NLCH"
VERSION = 1


def write_field(path, grid: Grid, values: np.ndarray, t: float) -> None:
    values = check_field(grid, values)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<B", VERSION))
        fh.write(struct.pack("<I", grid.dim))
        fh.write(struct.pack(f"<{grid.dim}I", *([grid.n] * grid.dim)))
        fh.write(struct.pack(f"<{grid.dim}d", *([grid.length] * grid.dim)))
        fh.write(struct.pack("<d", float(t)))
        fh.write(np.ascontiguousarray(values, dtype="<f8").tobytes())


def read_field(path) -> tuple[Grid, np.ndarray, float]:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: not an NLCH field dump (bad magic)")
    version = raw[4]
    if version != VERSION:
        raise ValueError(f"{path}: unsupported dump version {version}")
    off = 5
    (dim,) = struct.unpack_from("<I", raw, off)
    off += 4
    ns = struct.unpack_from(f"<{dim}I", raw, off)
    off += 4 * dim
    lengths = struct.unpack_from(f"<{dim}d", raw, off)
    off += 8 * dim
    (t,) = struct.unpack_from("<d", raw, off)
    off += 8
    if len(set(ns)) != 1 or len(set(lengths)) != 1:
        raise ValueError(f"{path}: anisotropic dumps are not supported")
    grid = build_grid(dim, ns[0], lengths[0])
    values = np.frombuffer(raw, dtype="<f8", count=grid.num_nodes, offset=off).astype(float)
    if values.size != grid.num_nodes:
        raise ValueError(f"{path}: truncated dump")
    return grid, values, t
