"""Trajectory and field serialisation.

Two trajectory formats:

* CSV with header ``t,x,u`` and one row per (slice, grid point), values
  printed with 17 significant digits — convenient for small runs and
  external plotting.
* Raw binary: a 64-byte header (8-byte magic ``DUONLTRJ``, little-endian
  uint64 N and M, little-endian float64 L and T, zero padding) followed
  by the (M+1) x N physical slices as little-endian float64, row-major.
  The header alone reconstructs the grid (x_j = -L + 2*L*j/N) and the
  slice times (t_m = m*T/M), so the file is self-describing.

Field files are two-column text (x, value) with '#' comments, the same
format the kernel loader accepts.

All writers are deterministic: identical trajectories produce
byte-identical files.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import FieldPhysical
from .propagation import Trajectory

MAGIC = b"DUONLTRJ"
_HEADER = struct.Struct("<8sQQdd")
HEADER_SIZE = 64


def write_field_text(path, field: FieldPhysical) -> None:
    """Two-column (x, value) text with 17 significant digits."""
    lines = ["# x value"]
    for x, v in zip(field.grid.points, field.values):
        lines.append(f"{x:.17g} {v:.17g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_trajectory_csv(path, trajectory: Trajectory) -> None:
    times = trajectory.times
    points = trajectory.grid.points
    rows = ["t,x,u"]
    for m, t in enumerate(times):
        slice_values = trajectory.values[m]
        for x, u in zip(points, slice_values):
            rows.append(f"{t:.17g},{x:.17g},{u:.17g}")
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


def write_trajectory_binary(path, trajectory: Trajectory) -> None:
    header = _HEADER.pack(
        MAGIC,
        trajectory.grid.n_points,
        trajectory.params.n_steps,
        trajectory.grid.half_length,
        trajectory.params.horizon,
    )
    header += b"\x00" * (HEADER_SIZE - len(header))
    payload = np.ascontiguousarray(trajectory.values, dtype="<f8").tobytes()
    Path(path).write_bytes(header + payload)


@dataclass(frozen=True)
class TrajectoryFile:
    """Contents of a binary trajectory file."""

    n_points: int
    n_steps: int
    half_length: float
    horizon: float
    values: np.ndarray


def read_trajectory_binary(path) -> TrajectoryFile:
    raw = Path(path).read_bytes()
    if len(raw) < HEADER_SIZE:
        raise ValueError(f"{path}: shorter than the 64-byte header")
    magic, n_points, n_steps, half_length, horizon = _HEADER.unpack(
        raw[: _HEADER.size]
    )
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    expected = HEADER_SIZE + (n_steps + 1) * n_points * 8
    if len(raw) != expected:
        raise ValueError(f"{path}: {len(raw)} bytes, expected {expected}")
    values = np.frombuffer(raw[HEADER_SIZE:], dtype="<f8").reshape(
        n_steps + 1, n_points
    )
    return TrajectoryFile(
        n_points=int(n_points),
        n_steps=int(n_steps),
        half_length=float(half_length),
        horizon=float(horizon),
        values=values.copy(),
    )


def read_trajectory_csv(path) -> np.ndarray:
    """(rows, 3) array of the t,x,u columns."""
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
