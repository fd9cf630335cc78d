"""Parsing of simulator snapshot CSVs into grid-shaped arrays.

A snapshot has the header ``x,y,rho,u1,u2,w1,w2`` and one row per cell,
written y-row by y-row (j-major, i minor). The frame re-infers nx and ny
from the coordinate lattice and exposes each column as an (nx, ny) array.
"""

from dataclasses import dataclass, field
from typing import Dict

import numpy as np

COLUMNS = ("x", "y", "rho", "u1", "u2", "w1", "w2")


class SnapshotParseError(ValueError):
    """Malformed snapshot file; the message names the offending row."""


@dataclass
class SnapshotFrame:
    nx: int
    ny: int
    x: np.ndarray              # 1D cell-center coordinates, length nx
    y: np.ndarray              # 1D cell-center coordinates, length ny
    fields: Dict[str, np.ndarray] = field(default_factory=dict)

    def __getitem__(self, name):
        return self.fields[name]


def load_snapshot(path) -> SnapshotFrame:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines:
        raise SnapshotParseError(f"{path}: empty file")
    header = [c.strip() for c in lines[0].split(",")]
    if header != list(COLUMNS):
        raise SnapshotParseError(
            f"{path}: row 1: expected header {','.join(COLUMNS)!r}, "
            f"got {lines[0]!r}")

    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != len(COLUMNS):
            raise SnapshotParseError(
                f"{path}: row {lineno}: expected {len(COLUMNS)} columns, "
                f"got {len(parts)}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise SnapshotParseError(
                f"{path}: row {lineno}: {exc}") from exc
    if not rows:
        raise SnapshotParseError(f"{path}: no data rows")

    data = np.asarray(rows)
    x = np.unique(data[:, 0])
    y = np.unique(data[:, 1])
    nx, ny = len(x), len(y)
    if nx * ny != data.shape[0]:
        raise SnapshotParseError(
            f"{path}: {data.shape[0]} rows do not fill a complete "
            f"{nx} x {ny} lattice")

    frame = SnapshotFrame(nx=nx, ny=ny, x=x, y=y)
    for k, name in enumerate(COLUMNS[2:], start=2):
        # rows are j-major: reshape to (ny, nx) then transpose to (nx, ny)
        frame.fields[name] = data[:, k].reshape(ny, nx).T.copy()
    return frame
