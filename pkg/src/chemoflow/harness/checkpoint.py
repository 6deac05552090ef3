"""Binary checkpoints of a SimState.

Layout (little-endian): magic ``CFSIM``; u32 format version; u32 nx, u32 ny;
f64 lx, f64 ly; f64 t; then the float64 arrays n (nx*ny), c (nx*ny),
ux ((nx+1)*ny), uy (nx*(ny+1)), each dumped row-major with the x index first.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import CheckpointFormatError, ChemoflowError
from ..grid import BC, Grid, ScalarField, SimState, VectorField

MAGIC = b"CFSIM"
VERSION = 1
_HEADER = struct.Struct("<5sIIIddd")


class CheckpointIOError(ChemoflowError, OSError):
    pass


def encode_checkpoint(state: SimState) -> bytes:
    g = state.grid
    head = _HEADER.pack(MAGIC, VERSION, g.nx, g.ny, g.lx, g.ly, state.t)
    body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes()
                    for a in (state.n.data, state.c.data, state.u.ux, state.u.uy))
    return head + body


def decode_checkpoint(blob: bytes) -> SimState:
    if len(blob) < _HEADER.size:
        raise CheckpointFormatError(f"truncated header ({len(blob)} bytes)")
    magic, version, nx, ny, lx, ly, t = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise CheckpointFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointFormatError(f"format version {version} is not supported (expected {VERSION})")
    try:
        g = Grid(nx, ny, lx, ly)
    except ValueError as exc:
        raise CheckpointFormatError(f"invalid grid in header: {exc}") from exc
    shapes = [(nx, ny), (nx, ny), (nx + 1, ny), (nx, ny + 1)]
    need = _HEADER.size + 8 * sum(a * b for a, b in shapes)
    if len(blob) != need:
        raise CheckpointFormatError(f"expected {need} bytes, found {len(blob)} (truncated or padded)")
    arrays = []
    off = _HEADER.size
    for shape in shapes:
        count = shape[0] * shape[1]
        arrays.append(np.frombuffer(blob, dtype="<f8", count=count, offset=off).reshape(shape).astype(float))
        off += 8 * count
    n, c, ux, uy = arrays
    return SimState(t, ScalarField(g, n, BC.NEUMANN_ZERO), ScalarField(g, c, BC.NEUMANN_ZERO),
                    VectorField(g, ux, uy))


def write_checkpoint(state: SimState, path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encode_checkpoint(state))
    except OSError as exc:
        raise CheckpointIOError(str(exc)) from exc
    return path


def read_checkpoint(path) -> SimState:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointIOError(str(exc)) from exc
    return decode_checkpoint(blob)
