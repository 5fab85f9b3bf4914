"""Spherical-Gaussian rasterisation of illumination parameters.

Each anchor contributes an RGB lobe ``P_i * I * exp((o_i . u - 1) / s)`` and
the ambient term is added everywhere.  Lobes are not normalised.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .decompose import IlluminationParams
from .hdr_io import Panorama
from .sphere import AnchorSet, pixel_directions

DEFAULT_ANGULAR_SIZE = 0.0025
DEFAULT_SCHEDULE = (0.04, 0.01, 0.0025)


@dataclass(frozen=True)
class ProjectionConfig:
    width: int = 256
    height: int = 128
    angular_size: float = DEFAULT_ANGULAR_SIZE
    s_schedule: tuple[float, ...] = DEFAULT_SCHEDULE

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("output dimensions must be positive")
        if not self.angular_size > 0:
            raise ValueError("angular_size must be positive")
        sched = tuple(float(s) for s in self.s_schedule)
        object.__setattr__(self, "s_schedule", sched)
        if not sched:
            raise ValueError("s_schedule must not be empty")
        if any(s <= 0 for s in sched) or any(a <= b for a, b in zip(sched, sched[1:])):
            raise ValueError("s_schedule must be positive and strictly decreasing")
        if sched[-1] != self.angular_size:
            raise ValueError("the last s_schedule entry must equal angular_size")

    @classmethod
    def single(cls, width: int = 256, height: int = 128, angular_size: float = DEFAULT_ANGULAR_SIZE):
        return cls(width, height, angular_size, (angular_size,))


def _lobe_weights(params: IlluminationParams) -> np.ndarray:
    return params.distribution[:, None] * params.intensity[None, :]


def _render(weights, directions, ambient, width, height, s) -> Panorama:
    dirs = pixel_directions(height, width).reshape(-1, 3)
    lobes = _kernels.gaussian_raster(dirs, np.ascontiguousarray(directions), np.ascontiguousarray(weights), s)
    return Panorama((lobes + ambient[None, :]).reshape(height, width, 3))


def gaussian_map(
    params: IlluminationParams, anchors: AnchorSet, cfg: ProjectionConfig | None = None, s: float | None = None
) -> Panorama:
    cfg = cfg or ProjectionConfig()
    if params.n != anchors.n:
        raise ValueError(f"params carry {params.n} anchors but the anchor set has {anchors.n}")
    s = cfg.angular_size if s is None else s
    if not s > 0:
        raise ValueError("angular size must be positive")
    return _render(_lobe_weights(params), anchors.directions, params.ambient, cfg.width, cfg.height, s)


def progressive_maps(params: IlluminationParams, anchors: AnchorSet, cfg: ProjectionConfig | None = None):
    """One Gaussian map per schedule entry, coarse (largest s) first."""
    cfg = cfg or ProjectionConfig()
    return [gaussian_map(params, anchors, cfg, s=s) for s in cfg.s_schedule]


def reproject(
    params: IlluminationParams, anchors: AnchorSet, offset, falloff: str = "linear"
) -> tuple[IlluminationParams, AnchorSet]:
    """Move the viewpoint by ``offset`` and re-express the anchors from there.

    Anchor i sits at ``D_i * o_i`` in the scene.  Its new direction and depth
    are taken from the displaced position, and its weight is scaled by
    ``D_i / l_i`` (``falloff="linear"``) or its square (``"inverse-square"``).
    The scaling is split into a renormalised distribution and a rescaled
    intensity so that ``P_i' * I'`` equals the scaled lobe colour.  Ambient is
    left untouched.
    """
    off = np.asarray(offset, dtype=np.float64)
    if off.shape != (3,) or not np.all(np.isfinite(off)):
        raise ValueError("offset must be a finite 3-vector")
    if falloff not in ("linear", "inverse-square"):
        raise ValueError(f"unknown falloff {falloff!r}")
    if params.n != anchors.n:
        raise ValueError(f"params carry {params.n} anchors but the anchor set has {anchors.n}")
    if not np.any(off):
        return params, anchors
    if np.linalg.norm(off) >= params.depth.min():
        raise ValueError("offset must stay strictly inside the nearest anchor depth")

    world = params.depth[:, None] * anchors.directions - off[None, :]
    new_depth = np.linalg.norm(world, axis=1)
    new_dirs = world / new_depth[:, None]
    scale = params.depth / new_depth
    if falloff == "inverse-square":
        scale = scale * scale
    weighted = params.distribution * scale
    total = weighted.sum()
    if total > 0:
        distribution = weighted / total
        intensity = params.intensity * total
    else:
        distribution = params.distribution
        intensity = params.intensity
    moved = IlluminationParams(distribution, intensity, params.ambient, new_depth, degenerate=params.degenerate)
    return moved, AnchorSet(new_dirs)


def spatially_varying_map(
    params: IlluminationParams,
    anchors: AnchorSet,
    offset,
    cfg: ProjectionConfig | None = None,
    falloff: str = "linear",
) -> Panorama:
    moved, moved_anchors = reproject(params, anchors, offset, falloff)
    return gaussian_map(moved, moved_anchors, cfg)
