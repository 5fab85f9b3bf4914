"""Panorama comparison metrics."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .decompose import anchor_depths, depth_channel
from .errors import NonConvergenceError
from .hdr_io import Panorama, luminance
from .ot import EXACT_MAX_N, SinkhornConfig, exact_emd, geometric_cost, sinkhorn_gml
from .sphere import AnchorSet, assign_pixels


@dataclass(frozen=True)
class MetricReport:
    rmse: float
    si_rmse: float
    angular_error_degrees: float
    cosine_distance: float
    gmd: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _pair(a: Panorama, b: Panorama) -> tuple[np.ndarray, np.ndarray]:
    if a.shape != b.shape:
        raise ValueError(f"panorama dimensions differ: {a.shape} vs {b.shape}")
    return a.pixels, b.pixels


def rmse(a: Panorama, b: Panorama) -> float:
    x, y = _pair(a, b)
    return math.sqrt(float(np.mean((x - y) ** 2)))


def si_rmse(a: Panorama, b: Panorama) -> float:
    """RMSE after scaling ``a`` by the least-squares factor <a,b>/<a,a> (one scalar for all channels)."""
    x, y = _pair(a, b)
    aa = float(np.vdot(x, x))
    if aa == 0.0:
        raise ValueError("si-RMSE is undefined when the first map is identically zero")
    alpha = float(np.vdot(x, y)) / aa
    return math.sqrt(float(np.mean((alpha * x - y) ** 2)))


def rgb_angular_error(a: Panorama, b: Panorama) -> float:
    """Mean per-pixel angle between RGB vectors, in degrees; black pixels are skipped."""
    x, y = _pair(a, b)
    nx = np.linalg.norm(x, axis=2)
    ny = np.linalg.norm(y, axis=2)
    valid = (nx > 0) & (ny > 0)
    if not valid.any():
        raise ValueError("no pixel is non-black in both maps")
    xv, yv = x[valid], y[valid]
    # atan2 form stays accurate near 0 where arccos of a rounded cosine does not
    angles = np.arctan2(np.linalg.norm(np.cross(xv, yv), axis=1), np.sum(xv * yv, axis=1))
    return float(np.degrees(np.mean(angles)))


def cosine_distance(a: Panorama, b: Panorama) -> float:
    x, y = _pair(a, b)
    na = float(np.linalg.norm(x))
    nb = float(np.linalg.norm(y))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine distance is undefined for an all-zero map")
    return max(0.0, 1.0 - float(np.vdot(x, y)) / (na * nb))


def anchor_distribution(pano: Panorama, anchors: AnchorSet, assignment: np.ndarray | None = None) -> np.ndarray:
    """Luminance of every pixel binned to its nearest anchor, normalised to sum 1."""
    if assignment is None:
        assignment = assign_pixels(pano.height, pano.width, anchors)
    lum = luminance(pano.pixels)
    totals = np.bincount(assignment.ravel(), weights=lum.ravel(), minlength=anchors.n)
    mass = totals.sum()
    if not mass > 0:
        raise ValueError("panorama has zero luminance")
    return totals / mass


def gmd(
    a: Panorama,
    b: Panorama,
    anchors: AnchorSet,
    depth_a: Panorama | np.ndarray | None = None,
    depth_b: Panorama | np.ndarray | None = None,
    cfg: SinkhornConfig | None = None,
) -> float:
    """Optimal transport distance between the anchor-binned light of two panoramas.

    Unit depths are used unless both depth maps are supplied.  Exact LP for
    n <= 64 anchors, entropic Sinkhorn above that.
    """
    _pair(a, b)
    assignment = assign_pixels(a.height, a.width, anchors)
    u = anchor_distribution(a, anchors, assignment)
    v = anchor_distribution(b, anchors, assignment)
    if depth_a is not None and depth_b is not None:
        du = anchor_depths(depth_channel(depth_a), assignment, anchors)
        dv = anchor_depths(depth_channel(depth_b), assignment, anchors)
    else:
        du = dv = np.ones(anchors.n)
    cost = geometric_cost(anchors, du, dv)
    if anchors.n <= EXACT_MAX_N:
        return exact_emd(u, v, cost)[0]
    res = sinkhorn_gml(u, v, cost, cfg)
    if not res.converged:
        raise NonConvergenceError(f"GMD solver did not converge (marginal error {res.marginal_error:.3g})")
    return res.value


def report(
    pred: Panorama,
    gt: Panorama,
    anchors: AnchorSet | None = None,
    depth_pred=None,
    depth_gt=None,
    cfg: SinkhornConfig | None = None,
) -> MetricReport:
    return MetricReport(
        rmse=rmse(pred, gt),
        si_rmse=si_rmse(pred, gt),
        angular_error_degrees=rgb_angular_error(pred, gt),
        cosine_distance=cosine_distance(pred, gt),
        gmd=None if anchors is None else gmd(pred, gt, anchors, depth_pred, depth_gt, cfg),
    )
