"""Binary state snapshots with a fixed little-endian layout.

Layout: magic "MMF1"; u32 version, n_x, n_y, n_m; f64 t, delta, b, tau,
nu, s; then row-major f64 payload (omega, f, sigma components) and a
trailing CRC-32 of the payload bytes.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import CorruptSnapshot, VersionMismatch
from .grid import Grid2D, ScalarField2D
from .micro import MicroManifold, ModelParams, ParticleDensity
from .stress import StressField

__all__ = ["SnapshotState", "save_snapshot", "load_snapshot", "SNAPSHOT_VERSION"]

MAGIC = b"MMF1"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIIII6d")  # magic, version, nx, ny, nm, 6 params


@dataclass
class SnapshotState:
    """Everything needed to resume or inspect a run at one instant."""

    grid: Grid2D
    manifold: MicroManifold
    t: float
    omega: ScalarField2D
    f: ParticleDensity
    sigma: StressField
    params: ModelParams

    def payload_arrays(self):
        return (
            self.omega.values,
            self.f.values,
            self.sigma.t11,
            self.sigma.t12,
            self.sigma.t22,
        )


def save_snapshot(state: SnapshotState, path) -> None:
    p = state.params
    header = _HEADER.pack(
        MAGIC,
        SNAPSHOT_VERSION,
        state.grid.n_x,
        state.grid.n_y,
        state.manifold.n_m,
        state.t,
        p.delta,
        p.b,
        p.tau,
        p.nu,
        state.manifold.s,
    )
    payload = b"".join(
        np.ascontiguousarray(a, dtype="<f8").tobytes() for a in state.payload_arrays()
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF))


def load_snapshot(path) -> SnapshotState:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size + 4:
        raise CorruptSnapshot("file shorter than header")
    magic, version, n_x, n_y, n_m, t, delta, b, tau, nu, s = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CorruptSnapshot(f"bad magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise VersionMismatch(f"snapshot version {version} unsupported")
    n_xy = n_x * n_y
    counts = (n_xy, n_xy * n_m, n_xy, n_xy, n_xy)
    payload_bytes = 8 * sum(counts)
    expected = _HEADER.size + payload_bytes + 4
    if len(raw) != expected:
        raise CorruptSnapshot(f"file length {len(raw)} != expected {expected}")
    payload = raw[_HEADER.size:-4]
    (crc,) = struct.unpack("<I", raw[-4:])
    if zlib.crc32(payload) & 0xFFFFFFFF != crc:
        raise CorruptSnapshot("payload CRC mismatch")

    grid = Grid2D(n_x, n_y)
    manifold = MicroManifold(n_m, s)
    arrays = []
    offset = 0
    for count in counts:
        arrays.append(
            np.frombuffer(payload, dtype="<f8", count=count, offset=offset)
            .astype(np.float64)
        )
        offset += 8 * count
    omega = ScalarField2D(grid, arrays[0].reshape(n_x, n_y))
    f = ParticleDensity(grid, manifold, arrays[1].reshape(n_x, n_y, n_m))
    sigma = StressField(
        grid,
        arrays[2].reshape(n_x, n_y),
        arrays[3].reshape(n_x, n_y),
        arrays[4].reshape(n_x, n_y),
    )
    params = ModelParams(delta=delta, b=b, tau=tau, nu=nu)
    return SnapshotState(grid, manifold, t, omega, f, sigma, params)
