"""Spherical geometry shared by every other module.

Equirectangular convention: row 0 is the north (+z) pole, the polar angle is
measured from +z and pixel centres sit at half-integer offsets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


@dataclass(frozen=True, eq=False)
class AnchorSet:
    """A fixed set of unit directions onto which light is binned."""

    directions: np.ndarray
    _angles: np.ndarray | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        d = np.array(self.directions, dtype=np.float64)
        if d.ndim != 2 or d.shape[1] != 3 or d.shape[0] < 1:
            raise ValueError("anchor directions must be a non-empty (n, 3) array")
        norms = np.linalg.norm(d, axis=1)
        if not np.all(np.abs(norms - 1.0) <= 1e-12):
            raise ValueError("anchor directions must have unit norm")
        if np.unique(d, axis=0).shape[0] != d.shape[0]:
            raise ValueError("anchor directions must be pairwise distinct")
        d.setflags(write=False)
        object.__setattr__(self, "directions", d)

    @property
    def n(self) -> int:
        return self.directions.shape[0]

    @property
    def angles(self) -> np.ndarray:
        """Pairwise angles in radians, exactly symmetric with a zero diagonal."""
        if self._angles is None:
            a = np.arccos(np.clip(self.directions @ self.directions.T, -1.0, 1.0))
            a = np.triu(a, 1)
            a = a + a.T
            a.setflags(write=False)
            object.__setattr__(self, "_angles", a)
        return self._angles

    def to_json(self) -> str:
        rows = ", ".join("[" + ", ".join(format(float(x), ".17g") for x in row) + "]" for row in self.directions)
        return f'{{"n": {self.n}, "directions": [{rows}]}}\n'

    @classmethod
    def from_dict(cls, data: dict) -> AnchorSet:
        if not isinstance(data, dict) or "directions" not in data:
            raise ValueError("anchor data needs a 'directions' list")
        anchors = cls(np.asarray(data["directions"], dtype=np.float64))
        if "n" in data and int(data["n"]) != anchors.n:
            raise ValueError(f"anchor file declares n={data['n']} but lists {anchors.n} directions")
        return anchors


def generate_anchors(n: int) -> AnchorSet:
    """Spherical Fibonacci lattice with ``n`` points (uniform z strata, golden-angle azimuth)."""
    if n < 1:
        raise ValueError(f"anchor count must be positive, got {n}")
    k = np.arange(n, dtype=np.float64)
    z = 1.0 - (2.0 * k + 1.0) / n
    azimuth = k * GOLDEN_ANGLE
    r = np.sqrt(1.0 - z * z)
    return AnchorSet(np.stack([r * np.cos(azimuth), r * np.sin(azimuth), z], axis=1))


def _check_index(name: str, value: int, bound: int) -> None:
    if not 0 <= value < bound:
        raise ValueError(f"{name}={value} outside [0, {bound})")


def pixel_direction(row: int, col: int, height: int, width: int) -> np.ndarray:
    _check_index("row", row, height)
    _check_index("col", col, width)
    polar = math.pi * (row + 0.5) / height
    azimuth = 2.0 * math.pi * (col + 0.5) / width
    return np.array(
        [math.sin(polar) * math.cos(azimuth), math.sin(polar) * math.sin(azimuth), math.cos(polar)]
    )


def pixel_directions(height: int, width: int) -> np.ndarray:
    """Directions of every pixel centre, shape (height, width, 3)."""
    if height < 1 or width < 1:
        raise ValueError("raster dimensions must be positive")
    polar = np.pi * (np.arange(height) + 0.5) / height
    azimuth = 2.0 * np.pi * (np.arange(width) + 0.5) / width
    sp = np.sin(polar)[:, None]
    out = np.empty((height, width, 3))
    out[..., 0] = sp * np.cos(azimuth)[None, :]
    out[..., 1] = sp * np.sin(azimuth)[None, :]
    out[..., 2] = np.cos(polar)[:, None]
    return out


def solid_angle(row: int, height: int, width: int) -> float:
    _check_index("row", row, height)
    return math.sin(math.pi * (row + 0.5) / height) * (math.pi / height) * (2.0 * math.pi / width)


def solid_angles(height: int, width: int) -> np.ndarray:
    """Per-pixel solid angle, shape (height, width)."""
    polar = np.pi * (np.arange(height) + 0.5) / height
    w = np.sin(polar) * (np.pi / height) * (2.0 * np.pi / width)
    return np.broadcast_to(w[:, None], (height, width)).copy()


def angular_distance(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    for v in (a, b):
        if abs(np.linalg.norm(v) - 1.0) > 1e-6:
            raise ValueError("angular_distance expects unit vectors")
    return math.acos(min(1.0, max(-1.0, float(a @ b))))


def nearest_anchor(direction, anchors: AnchorSet) -> int:
    d = np.asarray(direction, dtype=np.float64)
    if abs(np.linalg.norm(d) - 1.0) > 1e-6:
        raise ValueError("nearest_anchor expects a unit vector")
    return int(_kernels.nearest_indices(d.reshape(1, 3), anchors.directions)[0])


def assign_pixels(height: int, width: int, anchors: AnchorSet) -> np.ndarray:
    """Nearest-anchor index for every pixel, shape (height, width)."""
    dirs = pixel_directions(height, width).reshape(-1, 3)
    return _kernels.nearest_indices(dirs, np.ascontiguousarray(anchors.directions)).reshape(height, width)
