"""Rigid transforms, planar polygons, convex primitives and distance fields."""
from .distance import min_distance, primitive_distance
from .polygon import (
    SurfacePlane,
    contact_ratio,
    point_in_polygon,
    polygon_area,
    polygon_intersection_area,
    project_onto_plane,
)
from .sdf import SdfGrid, build_sdf
from .shapes import CollisionGeom, point_signed_distance
from .transforms import RigidTransform

__all__ = [
    "CollisionGeom",
    "RigidTransform",
    "SdfGrid",
    "SurfacePlane",
    "build_sdf",
    "contact_ratio",
    "min_distance",
    "point_in_polygon",
    "point_signed_distance",
    "polygon_area",
    "polygon_intersection_area",
    "primitive_distance",
    "project_onto_plane",
]
