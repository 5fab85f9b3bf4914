"""Panorama -> (distribution, intensity, ambient, depth) decomposition."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .hdr_io import Panorama, luminance
from .sphere import AnchorSet, assign_pixels, solid_angles

log = logging.getLogger(__name__)

DEFAULT_FRACTION = 0.05


@dataclass(frozen=True, eq=False)
class IlluminationParams:
    distribution: np.ndarray  # (n,), sums to 1
    intensity: np.ndarray  # (3,) RGB
    ambient: np.ndarray  # (3,) RGB
    depth: np.ndarray  # (n,), strictly positive
    degenerate: bool = field(default=False, compare=False)

    def __post_init__(self):
        vals = {}
        for name in ("distribution", "intensity", "ambient", "depth"):
            a = np.array(getattr(self, name), dtype=np.float64)
            if a.ndim != 1 or not np.all(np.isfinite(a)):
                raise ValueError(f"{name} must be a finite 1-d vector")
            a.setflags(write=False)
            vals[name] = a
            object.__setattr__(self, name, a)
        if vals["intensity"].shape != (3,) or vals["ambient"].shape != (3,):
            raise ValueError("intensity and ambient must be RGB triples")
        if vals["distribution"].shape != vals["depth"].shape:
            raise ValueError("distribution and depth must have the same length")
        if np.any(vals["distribution"] < 0) or np.any(vals["intensity"] < 0) or np.any(vals["ambient"] < 0):
            raise ValueError("distribution, intensity and ambient must be nonnegative")
        if np.any(vals["depth"] <= 0):
            raise ValueError("depths must be strictly positive")

    @property
    def n(self) -> int:
        return self.distribution.shape[0]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "distribution": self.distribution.tolist(),
            "intensity": self.intensity.tolist(),
            "ambient": self.ambient.tolist(),
            "depth": self.depth.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> IlluminationParams:
        missing = [k for k in ("distribution", "intensity", "ambient", "depth") if k not in data]
        if missing:
            raise ValueError(f"illumination parameters lack {', '.join(missing)}")
        params = cls(data["distribution"], data["intensity"], data["ambient"], data["depth"])
        if "n" in data and int(data["n"]) != params.n:
            raise ValueError(f"params declare n={data['n']} but carry {params.n} entries")
        return params


def mask_count(npix: int, fraction: float) -> int:
    # round away float noise such as 0.07 * 100 = 7.000000000000001 before taking the ceiling
    return min(npix, math.ceil(round(fraction * npix, 9)))


def select_light_mask(pano: Panorama, fraction: float = DEFAULT_FRACTION) -> np.ndarray:
    """Boolean (height, width) mask of the brightest ``ceil(fraction * H * W)`` pixels.

    Pixels are ranked by luminance; ties go to the earlier pixel in row-major order.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    lum = luminance(pano.pixels).ravel()
    k = mask_count(lum.size, fraction)
    order = np.argsort(-lum, kind="stable")
    mask = np.zeros(lum.size, dtype=bool)
    mask[order[:k]] = True
    return mask.reshape(pano.shape)


def _fill_empty_anchors(values: np.ndarray, populated: np.ndarray, anchors: AnchorSet) -> np.ndarray:
    if populated.all():
        return values
    out = values.copy()
    donors = np.flatnonzero(populated)
    for k in np.flatnonzero(~populated):
        # argmin keeps the lowest donor index on ties
        out[k] = values[donors[np.argmin(anchors.angles[k, donors])]]
    return out


def anchor_depths(depth_map: np.ndarray, assignment: np.ndarray, anchors: AnchorSet) -> np.ndarray:
    """Mean depth over all pixels binned to each anchor.

    Anchors that receive no pixel borrow the depth of the closest anchor that does.
    """
    depth_map = np.asarray(depth_map, dtype=np.float64)
    if depth_map.shape != assignment.shape:
        raise ValueError(f"depth map shape {depth_map.shape} != panorama shape {assignment.shape}")
    if not np.all(np.isfinite(depth_map)) or np.any(depth_map <= 0):
        raise ValueError("depth map must be finite and strictly positive")
    idx = assignment.ravel()
    counts = np.bincount(idx, minlength=anchors.n)
    sums = np.bincount(idx, weights=depth_map.ravel(), minlength=anchors.n)
    populated = counts > 0
    means = np.where(populated, sums / np.maximum(counts, 1), 0.0)
    return _fill_empty_anchors(means, populated, anchors)


def depth_channel(depth: Panorama | np.ndarray) -> np.ndarray:
    """Scalar depth raster; 3-channel depth panoramas contribute their first channel."""
    if isinstance(depth, Panorama):
        return depth.pixels[..., 0]
    return np.asarray(depth, dtype=np.float64)


def _exact_sum(values: np.ndarray) -> float:
    return math.fsum(values.tolist())


def decompose(
    pano: Panorama,
    anchors: AnchorSet,
    depth_map: Panorama | np.ndarray | None = None,
    fraction: float = DEFAULT_FRACTION,
    weighted: bool = False,
) -> IlluminationParams:
    """Split a panorama into light distribution, intensity, ambient and per-anchor depth.

    With ``weighted=True`` every pixel is scaled by its solid angle before
    summing, and the ambient term becomes a solid-angle weighted mean.
    """
    mask = select_light_mask(pano, fraction)
    assignment = assign_pixels(pano.height, pano.width, anchors)

    pixels = pano.pixels
    weights = solid_angles(pano.height, pano.width) if weighted else None
    if weights is not None:
        pixels = pixels * weights[..., None]

    lit = pixels[mask]
    unlit = pixels[~mask]
    intensity = np.array([_exact_sum(lit[:, c]) for c in range(3)])
    if unlit.shape[0] == 0:
        ambient = np.zeros(3)
    elif weights is None:
        ambient = np.array([_exact_sum(unlit[:, c]) for c in range(3)]) / unlit.shape[0]
    else:
        ambient = np.array([_exact_sum(unlit[:, c]) for c in range(3)]) / _exact_sum(weights[~mask])

    lum = luminance(lit)
    owners = assignment[mask]
    totals = np.zeros(anchors.n)
    for k in np.unique(owners):
        totals[k] = _exact_sum(lum[owners == k])
    energy = _exact_sum(totals)
    degenerate = energy <= 0.0
    if degenerate:
        log.warning("panorama has no light energy in the selected mask; using a uniform distribution")
        distribution = np.full(anchors.n, 1.0 / anchors.n)
    else:
        distribution = totals / energy

    if depth_map is None:
        depth = np.ones(anchors.n)
    else:
        depth = anchor_depths(depth_channel(depth_map), assignment, anchors)

    return IlluminationParams(distribution, intensity, ambient, depth, degenerate=degenerate)


def recompose_check(params: IlluminationParams) -> np.ndarray:
    """Total RGB energy carried by the anchors, sum_i P_i * I."""
    return math.fsum(params.distribution.tolist()) * params.intensity
