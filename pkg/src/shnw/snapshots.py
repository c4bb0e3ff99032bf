"""Binary snapshot files for fields and wave states.

Record layout (little endian): magic ``SHNW``, version byte 0x01, u32 d,
u32 dims[d], f64 L, u8 dtype (0 = real f64, 1 = complex interleaved f64),
then the row-major payload.  A wave-state file is two records back to back,
position first, then velocity.  Snapshots always store the physical
representation.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .spectral import PHYSICAL, Field, field_from_physical, make_grid, transform

MAGIC = b"SHNW"
VERSION = 1

DTYPE_REAL = 0
DTYPE_COMPLEX = 1


class SnapshotFormatError(ValueError):
    pass


def _encode_field(f: Field) -> bytes:
    g = transform(f, PHYSICAL)
    grid = g.grid
    header = MAGIC + struct.pack("<B", VERSION)
    header += struct.pack("<I", grid.d)
    header += struct.pack(f"<{grid.d}I", *grid.shape)
    header += struct.pack("<d", grid.L)
    if g.reality_flag:
        header += struct.pack("<B", DTYPE_REAL)
        payload = np.ascontiguousarray(g.values.real, dtype="<f8").tobytes()
    else:
        header += struct.pack("<B", DTYPE_COMPLEX)
        payload = np.ascontiguousarray(g.values, dtype="<c16").tobytes()
    return header + payload


def _decode_field(buf: memoryview, offset: int) -> tuple[Field, int]:
    if bytes(buf[offset:offset + 4]) != MAGIC:
        raise SnapshotFormatError("bad magic bytes (not an SHNW snapshot)")
    offset += 4
    (version,) = struct.unpack_from("<B", buf, offset)
    offset += 1
    if version != VERSION:
        raise SnapshotFormatError(f"unsupported snapshot version {version}")
    (d,) = struct.unpack_from("<I", buf, offset)
    offset += 4
    dims = struct.unpack_from(f"<{d}I", buf, offset)
    offset += 4 * d
    (L,) = struct.unpack_from("<d", buf, offset)
    offset += 8
    (dtype,) = struct.unpack_from("<B", buf, offset)
    offset += 1
    if len(set(dims)) != 1:
        raise SnapshotFormatError(f"anisotropic dims {dims} are not supported")
    grid = make_grid(d, dims[0], L)
    count = grid.mode_count
    if dtype == DTYPE_REAL:
        vals = np.frombuffer(buf, dtype="<f8", count=count, offset=offset).reshape(grid.shape)
        offset += 8 * count
        return field_from_physical(grid, vals.astype(float), reality=True), offset
    if dtype == DTYPE_COMPLEX:
        vals = np.frombuffer(buf, dtype="<c16", count=count, offset=offset).reshape(grid.shape)
        offset += 16 * count
        return Field(grid=grid, values=vals.astype(complex), representation=PHYSICAL, reality_flag=False), offset
    raise SnapshotFormatError(f"unknown payload dtype {dtype}")


def write_field(path: str | Path, f: Field) -> None:
    Path(path).write_bytes(_encode_field(f))


def read_field(path: str | Path) -> Field:
    buf = memoryview(Path(path).read_bytes())
    f, _ = _decode_field(buf, 0)
    return f


def write_state(path: str | Path, u: Field, ut: Field) -> None:
    """Write a wave-state file: position record then velocity record."""
    if u.grid != ut.grid:
        raise ValueError("position and velocity live on different grids")
    Path(path).write_bytes(_encode_field(u) + _encode_field(ut))


def read_state(path: str | Path) -> tuple[Field, Field]:
    buf = memoryview(Path(path).read_bytes())
    u, offset = _decode_field(buf, 0)
    ut, offset = _decode_field(buf, offset)
    if offset != len(buf):
        raise SnapshotFormatError("trailing bytes after wave-state records")
    if u.grid != ut.grid:
        raise SnapshotFormatError("wave-state records disagree on the grid")
    return u, ut
