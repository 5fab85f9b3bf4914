"""Deterministic synthetic panoramas for tests and demos."""

from __future__ import annotations

import numpy as np

from .hdr_io import Panorama
from .sphere import pixel_directions

KINDS = ("delta", "two-lights", "uniform", "gradient")


def nearest_pixel(direction, height: int, width: int) -> tuple[int, int]:
    """Pixel whose centre direction is closest to ``direction`` (first in row-major order on ties)."""
    d = np.asarray(direction, dtype=np.float64)
    norm = np.linalg.norm(d)
    if not norm > 0:
        raise ValueError("direction must be nonzero")
    dots = pixel_directions(height, width).reshape(-1, 3) @ (d / norm)
    row, col = divmod(int(np.argmax(dots)), width)
    return row, col


def make_fixture(
    kind: str,
    width: int = 256,
    height: int = 128,
    value: float = 1.0,
    direction=(0.0, 0.0, 1.0),
    direction2=(1.0, 0.0, 0.0),
    value2: float | None = None,
) -> Panorama:
    if kind not in KINDS:
        raise ValueError(f"unknown fixture kind {kind!r}; choose from {', '.join(KINDS)}")
    if value < 0:
        raise ValueError("fixture values must be nonnegative")
    pixels = np.zeros((height, width, 3))
    if kind == "delta":
        pixels[nearest_pixel(direction, height, width)] = value
    elif kind == "two-lights":
        pixels[nearest_pixel(direction, height, width)] = value
        pixels[nearest_pixel(direction2, height, width)] += value if value2 is None else value2
    elif kind == "uniform":
        pixels[:] = value
    else:
        rows = (np.arange(height) + 0.5) / height
        cols = (np.arange(width) + 0.5) / width
        pixels[..., 0] = value * rows[:, None]
        pixels[..., 1] = value * cols[None, :]
        pixels[..., 2] = 0.5 * value
    return Panorama(pixels)


def depth_fixture(width: int = 256, height: int = 128, constant: float | None = None, linear=None) -> Panorama:
    """Constant depth, or depth ramping linearly from ``linear[0]`` (top row) to ``linear[1]`` (bottom)."""
    if (constant is None) == (linear is None):
        raise ValueError("give exactly one of constant or linear")
    if constant is not None:
        if not constant > 0:
            raise ValueError("depth must be positive")
        return Panorama(np.full((height, width, 3), float(constant)))
    lo, hi = (float(x) for x in linear)
    if not (lo > 0 and hi > 0):
        raise ValueError("depth must be positive")
    rows = lo + (hi - lo) * (np.arange(height) + 0.5) / height
    return Panorama(np.broadcast_to(rows[:, None, None], (height, width, 3)).copy())
