"""Geometric light distributions, optimal-transport losses and Gaussian illumination maps."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .decompose import IlluminationParams, decompose, recompose_check, select_light_mask
from .errors import FormatError, NonConvergenceError, UnsupportedScaleError
from .hdr_io import Panorama, load, read_pfm, read_rgbe, save, write_pfm
from .metrics import MetricReport, cosine_distance, gmd, report, rgb_angular_error, rmse, si_rmse
from .ot import (
    SinkhornConfig,
    SinkhornResult,
    exact_emd,
    geometric_cost,
    gml_gradient,
    sinkhorn_gml,
    sinkhorn_unbalanced_gml,
    spherical_cost,
)
from .projection import ProjectionConfig, gaussian_map, progressive_maps, reproject, spatially_varying_map
from .sphere import AnchorSet, angular_distance, generate_anchors, nearest_anchor, pixel_direction, solid_angle

__all__ = [
    "__version__",
    "BACKEND",
    "IlluminationParams",
    "decompose",
    "recompose_check",
    "select_light_mask",
    "FormatError",
    "NonConvergenceError",
    "UnsupportedScaleError",
    "Panorama",
    "load",
    "read_pfm",
    "read_rgbe",
    "save",
    "write_pfm",
    "MetricReport",
    "cosine_distance",
    "gmd",
    "report",
    "rgb_angular_error",
    "rmse",
    "si_rmse",
    "SinkhornConfig",
    "SinkhornResult",
    "exact_emd",
    "geometric_cost",
    "gml_gradient",
    "sinkhorn_gml",
    "sinkhorn_unbalanced_gml",
    "spherical_cost",
    "ProjectionConfig",
    "gaussian_map",
    "progressive_maps",
    "reproject",
    "spatially_varying_map",
    "AnchorSet",
    "angular_distance",
    "generate_anchors",
    "nearest_anchor",
    "pixel_direction",
    "solid_angle",
]
