"""Voxel signed-distance field over a scene's collision geometry."""
from dataclasses import dataclass

import numpy as np

from .._validation import check_positive
from .shapes import point_signed_distance, world_aabb

DEFAULT_CELL = 0.05


@dataclass(frozen=True, eq=False)
class SdfGrid:
    """Signed distances sampled at cell centers.

    Cell ``(i, j, k)`` is centered at ``origin + cell_size * (i, j, k)``.
    Values are positive outside obstacles. ``geometry_bounds`` is the AABB of
    the geometry the grid was built from; queries outside the grid fall back
    to the distance to that box, which is a valid lower bound.
    """

    origin: np.ndarray
    cell_size: float
    dims: tuple
    values: np.ndarray
    geometry_bounds: tuple | None = None

    def __post_init__(self):
        check_positive(self.cell_size, "cell_size")
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 3 or min(dims) <= 0:
            raise ValueError(f"dims must be 3 positive integers, got {dims}")
        values = np.asarray(self.values, dtype=float).reshape(dims)
        if not np.all(np.isfinite(values)):
            raise ValueError("SDF values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float))

    @property
    def error_bound(self):
        """Worst-case gap between an interpolated value and the true distance."""
        return np.sqrt(3.0) / 2.0 * self.cell_size

    @property
    def upper_corner(self):
        return self.origin + self.cell_size * (np.array(self.dims) - 1)

    def _outside_value(self, pts):
        if self.geometry_bounds is None:
            return np.full(len(pts), float(self.values.max()))
        lo, hi = self.geometry_bounds
        gap = np.maximum(0.0, np.maximum(lo - pts, pts - hi))
        return np.linalg.norm(gap, axis=1)

    def query(self, points, gradient=False):
        """Trilinear interpolation of the field (and its gradient)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        dims = np.array(self.dims)
        g = (pts - self.origin) / self.cell_size
        outside = np.any((g < 0) | (g > dims - 1), axis=1)
        g = np.clip(g, 0, dims - 1)
        i0 = np.minimum(np.floor(g).astype(int), np.maximum(dims - 2, 0))
        t = g - i0
        i1 = np.minimum(i0 + 1, dims - 1)
        v = self.values
        c = {}
        for dx in (0, 1):
            for dy in (0, 1):
                for dz in (0, 1):
                    ix = i1[:, 0] if dx else i0[:, 0]
                    iy = i1[:, 1] if dy else i0[:, 1]
                    iz = i1[:, 2] if dz else i0[:, 2]
                    c[dx, dy, dz] = v[ix, iy, iz]
        tx, ty, tz = t[:, 0], t[:, 1], t[:, 2]
        c00 = c[0, 0, 0] * (1 - tx) + c[1, 0, 0] * tx
        c01 = c[0, 0, 1] * (1 - tx) + c[1, 0, 1] * tx
        c10 = c[0, 1, 0] * (1 - tx) + c[1, 1, 0] * tx
        c11 = c[0, 1, 1] * (1 - tx) + c[1, 1, 1] * tx
        c0 = c00 * (1 - ty) + c10 * ty
        c1 = c01 * (1 - ty) + c11 * ty
        val = c0 * (1 - tz) + c1 * tz
        if np.any(outside):
            val = np.where(outside, self._outside_value(pts), val)
        if not gradient:
            return val
        gz = (c1 - c0) / self.cell_size
        gy = ((c10 - c00) * (1 - tz) + (c11 - c01) * tz) / self.cell_size
        d00 = c[1, 0, 0] - c[0, 0, 0]
        d01 = c[1, 0, 1] - c[0, 0, 1]
        d10 = c[1, 1, 0] - c[0, 1, 0]
        d11 = c[1, 1, 1] - c[0, 1, 1]
        gx = ((d00 * (1 - ty) + d10 * ty) * (1 - tz) + (d01 * (1 - ty) + d11 * ty) * tz) / self.cell_size
        grad = np.stack([gx, gy, gz], axis=1)
        grad[outside] = 0.0
        return val, grad

    def lower_bound(self, points):
        return self.query(points) - self.error_bound


def geoms_sdf(posed_geoms, cell_size=DEFAULT_CELL, padding=0.5, bounds=None, empty_value=None):
    """Build a grid from ``(geom, world4x4)`` pairs (world already includes local pose)."""
    cell_size = check_positive(cell_size, "cell_size")
    if posed_geoms:
        boxes = [world_aabb(g, w) for g, w in posed_geoms]
        geo_lo = np.min([b[0] for b in boxes], axis=0)
        geo_hi = np.max([b[1] for b in boxes], axis=0)
    else:
        geo_lo = geo_hi = None
    if bounds is None:
        if geo_lo is None:
            lo, hi = -np.ones(3), np.ones(3)
        else:
            lo, hi = geo_lo - padding, geo_hi + padding
    else:
        lo, hi = (np.asarray(b, dtype=float) for b in bounds)
    dims = np.maximum(2, np.ceil((hi - lo) / cell_size).astype(int) + 1)
    axes = [lo[i] + cell_size * np.arange(dims[i]) for i in range(3)]
    centers = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
    if not posed_geoms:
        diag = float(np.linalg.norm(hi - lo))
        values = np.full(len(centers), diag if empty_value is None else float(empty_value))
        return SdfGrid(lo, cell_size, tuple(dims), values, None)
    values = np.full(len(centers), np.inf)
    for g, w in posed_geoms:
        values = np.minimum(values, point_signed_distance(g, w, centers))
    return SdfGrid(lo, cell_size, tuple(dims), values, (geo_lo, geo_hi))


def build_sdf(scene, exclude_links=(), cell_size=DEFAULT_CELL, padding=0.5, bounds=None):
    """Signed-distance grid of every scene primitive not on an excluded link.

    An empty scene yields an all-positive grid filled with the grid diagonal.
    """
    exclude = set(exclude_links)
    posed = [(g, w) for link, _, g, w in scene.posed_geoms() if link not in exclude]
    return geoms_sdf(posed, cell_size=cell_size, padding=padding, bounds=bounds)
