"""Confocal-quadric billiards, Stackel geodesics, and potential theory in
constant-curvature spaces."""

from .geometry import Geometry, Kind, euclidean, geodesic_distance, hyperbolic, spherical
from .potentials import (
    CurvedEllipsoid,
    GeodesicSphere,
    HyperbolicSurface,
    f_lambda,
    field_at,
    point_potential,
    surface_potential,
)
from .quadrics import (
    ConfocalFamily,
    EllipticCoords,
    confocal_parameters,
    ivory_parallelepiped_check,
    point_from_parameters,
    tangent_parameters_of_line,
)
from .staeckel import (
    LiouvilleMetric,
    StaeckelMetric,
    builtin_metric,
    geodesic_between,
    ivory_check,
    staeckel_billiard_trajectory,
)

__all__ = [
    "Geometry", "Kind", "euclidean", "spherical", "hyperbolic",
    "geodesic_distance", "ConfocalFamily", "EllipticCoords",
    "confocal_parameters", "point_from_parameters",
    "tangent_parameters_of_line", "ivory_parallelepiped_check",
    "StaeckelMetric", "LiouvilleMetric", "builtin_metric",
    "geodesic_between", "ivory_check", "staeckel_billiard_trajectory",
    "CurvedEllipsoid", "GeodesicSphere", "HyperbolicSurface",
    "point_potential", "surface_potential", "field_at", "f_lambda",
]

__version__ = "0.1.0"
