"""Lossless path serialization: columnar CSV and the SLAB1 binary format.

CSV carries full round-trip precision via repr floats (header ``t,value``
for plain paths, ``t,x,m,v`` for decomposed ones).  The binary layout is

    magic  b"SLAB1"
    u8     number of columns (1 or 3)
    u64    n_steps           (little endian)
    f64    dt                (little endian)
    f64[]  column data, (n_steps+1) values per column, little endian

Both formats reproduce the exact IEEE-754 doubles.
"""

from __future__ import annotations

import io
import struct
from pathlib import Path as FilePath
from typing import TextIO

import numpy as np

from .excursions import ExcursionSet
from .grids import DecomposedPath, Path, TimeGrid

__all__ = [
    "write_path_csv",
    "read_path_csv",
    "write_binary",
    "read_binary",
    "excursions_to_csv",
]

MAGIC = b"SLAB1"
_HEADER = struct.Struct("<5sBQd")


def _open_text(target, mode: str):
    if isinstance(target, (str, FilePath)):
        return open(target, mode, newline=""), True
    return target, False


def write_path_csv(p: Path | DecomposedPath, target: str | FilePath | TextIO) -> None:
    fh, own = _open_text(target, "w")
    try:
        t = p.grid.times() if isinstance(p, DecomposedPath) else p.times()
        if isinstance(p, DecomposedPath):
            fh.write("t,x,m,v\n")
            for row in zip(t, p.x.values, p.m.values, p.v.values):
                fh.write(",".join(repr(float(c)) for c in row) + "\n")
        else:
            fh.write("t,value\n")
            for ti, vi in zip(t, p.values):
                fh.write(f"{ti!r},{vi!r}\n")
    finally:
        if own:
            fh.close()


def read_path_csv(source: str | FilePath | TextIO) -> Path | DecomposedPath:
    fh, own = _open_text(source, "r")
    try:
        header = fh.readline().strip()
        rows = [line.strip().split(",") for line in fh if line.strip()]
    finally:
        if own:
            fh.close()
    data = np.array([[float(c) for c in row] for row in rows])
    if data.shape[0] < 2:
        raise ValueError("path CSV needs at least two samples")
    dt = data[1, 0] - data[0, 0]
    grid = TimeGrid(dt=dt, n_steps=data.shape[0] - 1)
    if header == "t,value":
        return Path(grid, data[:, 1])
    if header == "t,x,m,v":
        return DecomposedPath(
            Path(grid, data[:, 1]), Path(grid, data[:, 2]), Path(grid, data[:, 3])
        )
    raise ValueError(f"unrecognized path CSV header: {header!r}")


def write_binary(p: Path | DecomposedPath, target: str | FilePath | io.BufferedIOBase) -> None:
    cols = (
        [p.x.values, p.m.values, p.v.values] if isinstance(p, DecomposedPath) else [p.values]
    )
    grid = p.grid
    payload = _HEADER.pack(MAGIC, len(cols), grid.n_steps, grid.dt)
    body = b"".join(np.ascontiguousarray(c, dtype="<f8").tobytes() for c in cols)
    if isinstance(target, (str, FilePath)):
        with open(target, "wb") as fh:
            fh.write(payload + body)
    else:
        target.write(payload + body)


def read_binary(source: str | FilePath | io.BufferedIOBase) -> Path | DecomposedPath:
    if isinstance(source, (str, FilePath)):
        with open(source, "rb") as fh:
            raw = fh.read()
    else:
        raw = source.read()
    magic, ncols, n_steps, dt = _HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise ValueError(f"bad magic bytes {magic!r}; expected {MAGIC!r}")
    if ncols not in (1, 3):
        raise ValueError(f"unsupported column count {ncols}")
    grid = TimeGrid(dt=dt, n_steps=n_steps)
    n = grid.n_points
    expected = _HEADER.size + 8 * ncols * n
    if len(raw) != expected:
        raise ValueError(f"truncated payload: {len(raw)} bytes, expected {expected}")
    cols = [
        np.frombuffer(raw, dtype="<f8", count=n, offset=_HEADER.size + 8 * n * i).copy()
        for i in range(ncols)
    ]
    if ncols == 1:
        return Path(grid, cols[0])
    return DecomposedPath(Path(grid, cols[0]), Path(grid, cols[1]), Path(grid, cols[2]))


def excursions_to_csv(exc: ExcursionSet, target: str | FilePath | TextIO) -> None:
    fh, own = _open_text(target, "w")
    try:
        fh.write("g_index,d_index,sign,unfinished\n")
        for g, d, s, u in exc.to_rows():
            fh.write(f"{g},{d},{s},{int(u)}\n")
    finally:
        if own:
            fh.close()
