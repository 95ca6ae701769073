"""Binary state snapshots.

Layout (little-endian):
  magic "NLS1" (4 bytes) | version u32 = 1 | M u32 | reserved u32 = 0
  | L f64 | eps f64 | lambda f64 | t f64 | unused f64 = 0
  | 2M coefficient pairs (re f64, im f64), ordered j = -M..M-1.

Total size 56 + 32*M bytes; round trips are bit exact.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..spectral import FourierState, Grid, build_grid

__all__ = ["write_snapshot", "read_snapshot", "SnapshotError", "snapshot_size"]

MAGIC = b"NLS1"
VERSION = 1
_HEADER = struct.Struct("<4sIII5d")


class SnapshotError(RuntimeError):
    pass


def snapshot_size(M: int) -> int:
    return _HEADER.size + 16 * (2 * M)


def write_snapshot(path: str, g: Grid, s: FourierState) -> None:
    if s.coeffs.shape[-1] != g.n:
        raise ValueError("state incompatible with grid")
    p = Path(path)
    if p.parent != Path(""):
        p.parent.mkdir(parents=True, exist_ok=True)
    header = _HEADER.pack(MAGIC, VERSION, g.M, 0, g.L, g.eps, g.lam, s.t, 0.0)
    pairs = np.empty(2 * g.n, dtype="<f8")
    pairs[0::2] = s.coeffs.real
    pairs[1::2] = s.coeffs.imag
    with open(p, "wb") as f:
        f.write(header)
        f.write(pairs.tobytes())


def read_snapshot(path: str) -> tuple[Grid, FourierState]:
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < _HEADER.size:
        raise SnapshotError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, M, reserved, L, eps, lam, t, _ = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise SnapshotError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise SnapshotError(f"{path}: unsupported version {version}")
    expected = snapshot_size(M)
    if len(raw) != expected:
        raise SnapshotError(f"{path}: expected {expected} bytes for M={M}, got {len(raw)}")
    pairs = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    coeffs = pairs[0::2] + 1j * pairs[1::2]
    g = build_grid(M, L, eps, lam)
    return g, FourierState(coeffs=coeffs, t=t)
