"""Field dumps and boundary reports.

Binary layout, little-endian: magic ``b"SRNF"``, ``uint32`` version,
``float64`` h, four ``float64`` bounding-box values ``(x0, y0, x1, y1)``,
``uint32`` nx, ny and interior count, then ``nx * ny`` ``float64`` nodal
values in C order with NaN at exterior nodes.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ValidationError

__all__ = ["FieldDump", "save_field", "load_field", "write_boundary_csv"]

MAGIC = b"SRNF"
VERSION = 1
_HEADER = struct.Struct("<4sId4d3I")


@dataclass(frozen=True)
class FieldDump:
    h: float
    bbox: tuple[float, float, float, float]
    values: np.ndarray
    n_interior: int


def save_field(field, path) -> None:
    g = field.grid
    full = g.to_full(field.values, fill=np.nan)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, g.h, *g.bbox, g.shape[0], g.shape[1], g.n))
        fh.write(full.astype("<f8").tobytes(order="C"))


def load_field(path) -> FieldDump:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValidationError(f"{path}: truncated field file")
    magic, version, h, x0, y0, x1, y1, nx, ny, n = _HEADER.unpack_from(raw)
    if magic != MAGIC or version != VERSION:
        raise ValidationError(f"{path}: not a field file (magic {magic!r}, version {version})")
    body = raw[_HEADER.size:]
    if len(body) != 8 * nx * ny:
        raise ValidationError(f"{path}: expected {nx * ny} values, found {len(body) // 8}")
    values = np.frombuffer(body, dtype="<f8").reshape(nx, ny)
    return FieldDump(h, (x0, y0, x1, y1), values, n)


def write_boundary_csv(data, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["angle", "x", "y", "u_nu"])
        for a, (x, y), v in zip(data.angle, data.position, data.u_nu):
            w.writerow([f"{a:.17g}", f"{x:.17g}", f"{y:.17g}", f"{v:.17g}"])
