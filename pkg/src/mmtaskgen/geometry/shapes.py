"""Convex collision primitives: box, cylinder and convex vertex meshes.

Every primitive is expressed in its own frame (``local_pose`` relative to the
owning link). Functions taking ``world`` expect the primitive's full world
transform as a 4x4 matrix, i.e. ``link_world @ local_pose``.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from ..errors import DomainError
from .transforms import RigidTransform

CYLINDER_SIDES = 16


@dataclass(frozen=True)
class CollisionGeom:
    """A convex primitive.

    ``shape`` is ``"box"`` (``size`` = full extents), ``"cylinder"``
    (``size`` = ``(radius, length)``, axis along local z) or ``"convex"``
    (``vertices`` in the primitive frame).
    """

    shape: str
    size: tuple = ()
    vertices: tuple = ()
    local_pose: RigidTransform = field(default_factory=RigidTransform.identity)

    def __post_init__(self):
        size = tuple(float(s) for s in self.size)
        verts = tuple(tuple(float(c) for c in v) for v in self.vertices)
        object.__setattr__(self, "size", size)
        object.__setattr__(self, "vertices", verts)
        if self.shape == "box":
            if len(size) != 3 or min(size) <= 0:
                raise DomainError(f"box extents must be 3 positive numbers, got {size}")
        elif self.shape == "cylinder":
            if len(size) != 2 or min(size) <= 0:
                raise DomainError(f"cylinder needs positive radius and length, got {size}")
        elif self.shape == "convex":
            if len(verts) < 4:
                raise DomainError("convex mesh needs at least 4 vertices")
            try:
                hull = ConvexHull(np.array(verts))
            except QhullError as exc:
                raise DomainError("convex mesh vertices are coplanar") from exc
            if hull.volume <= 1e-15:
                raise DomainError("convex mesh vertices are coplanar")
        else:
            raise DomainError(f"unsupported collision shape {self.shape!r}")

    @classmethod
    def box(cls, extents, pose=None):
        return cls("box", tuple(extents), local_pose=pose or RigidTransform.identity())

    @classmethod
    def cylinder(cls, radius, length, pose=None):
        return cls("cylinder", (radius, length), local_pose=pose or RigidTransform.identity())

    @classmethod
    def convex(cls, vertices, pose=None):
        return cls("convex", (), tuple(map(tuple, vertices)), local_pose=pose or RigidTransform.identity())

    @property
    def half_extents(self):
        return 0.5 * np.array(self.size)

    @property
    def vertex_array(self):
        return np.array(self.vertices, dtype=float)

    def local_bounds(self):
        """Axis-aligned bounds in the primitive frame."""
        if self.shape == "box":
            h = self.half_extents
            return -h, h
        if self.shape == "cylinder":
            r, length = self.size
            h = np.array([r, r, length / 2.0])
            return -h, h
        v = self.vertex_array
        return v.min(axis=0), v.max(axis=0)

    def bounding_radius(self):
        lo, hi = self.local_bounds()
        return float(np.linalg.norm(np.maximum(np.abs(lo), np.abs(hi))))


# ---------------------------------------------------------------------------
# support mapping and bounds


def support_point(geom, world, direction):
    """Farthest point of the primitive along ``direction`` (world frame)."""
    rot = world[:3, :3]
    d = rot.T @ direction
    if geom.shape == "box":
        h = geom.half_extents
        local = np.where(d >= 0, h, -h)
    elif geom.shape == "cylinder":
        r, length = geom.size
        rho = np.hypot(d[0], d[1])
        local = np.zeros(3)
        if rho > 1e-15:
            local[0] = r * d[0] / rho
            local[1] = r * d[1] / rho
        local[2] = length / 2.0 if d[2] >= 0 else -length / 2.0
    else:
        v = geom.vertex_array
        local = v[int(np.argmax(v @ d))]
    return rot @ local + world[:3, 3]


def world_aabb(geom, world):
    rot = world[:3, :3]
    t = world[:3, 3]
    if geom.shape == "convex":
        pts = geom.vertex_array @ rot.T + t
        return pts.min(axis=0), pts.max(axis=0)
    lo, hi = geom.local_bounds()
    center = rot @ ((lo + hi) / 2.0) + t
    half = np.abs(rot) @ ((hi - lo) / 2.0)
    return center - half, center + half


def aabb_gap(box_a, box_b):
    """Lower bound on the distance between two axis-aligned boxes."""
    gap = np.maximum(0.0, np.maximum(box_a[0] - box_b[1], box_b[0] - box_a[1]))
    return float(np.linalg.norm(gap))


# ---------------------------------------------------------------------------
# faces


def _convex_faces(verts):
    hull = ConvexHull(verts)
    groups = {}
    for simplex, eq in zip(hull.simplices, hull.equations):
        key = tuple(np.round(eq, 9))
        groups.setdefault(key, set()).update(simplex.tolist())
    faces = []
    for key, idx in groups.items():
        normal = np.array(key[:3])
        normal /= np.linalg.norm(normal)
        pts = verts[sorted(idx)]
        c = pts.mean(axis=0)
        helper = np.eye(3)[int(np.argmin(np.abs(normal)))]
        e1 = np.cross(normal, helper)
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(normal, e1)
        ang = np.arctan2((pts - c) @ e2, (pts - c) @ e1)
        faces.append((normal, pts[np.argsort(ang)]))
    faces.sort(key=lambda f: tuple(np.round(f[0], 9)))
    return faces


def local_faces(geom):
    """Flat faces as ``(outward_normal, ccw_outline)`` in the primitive frame.

    Boxes give six rectangles, cylinders their two end disks as regular
    16-gons, convex meshes their hull facets with coplanar triangles merged.
    """
    if geom.shape == "box":
        hx, hy, hz = geom.half_extents
        faces = []
        for axis in range(3):
            for sign in (1.0, -1.0):
                n = np.zeros(3)
                n[axis] = sign
                u = (axis + 1) % 3
                v = (axis + 2) % 3
                h = np.array([hx, hy, hz])
                corners = []
                for cu, cv in ((-1, -1), (1, -1), (1, 1), (-1, 1)):
                    p = np.zeros(3)
                    p[axis] = sign * h[axis]
                    p[u] = cu * h[u]
                    p[v] = cv * h[v]
                    corners.append(p)
                corners = np.array(corners)
                if sign < 0:
                    corners = corners[::-1]
                faces.append((n, corners))
        return faces
    if geom.shape == "cylinder":
        r, length = geom.size
        ang = 2.0 * np.pi * np.arange(CYLINDER_SIDES) / CYLINDER_SIDES
        ring = np.stack([r * np.cos(ang), r * np.sin(ang), np.zeros_like(ang)], axis=1)
        top = ring + [0.0, 0.0, length / 2.0]
        bottom = (ring + [0.0, 0.0, -length / 2.0])[::-1]
        return [(np.array([0.0, 0.0, 1.0]), top), (np.array([0.0, 0.0, -1.0]), bottom)]
    return _convex_faces(geom.vertex_array)


# ---------------------------------------------------------------------------
# point queries


def point_signed_distance(geom, world, points):
    """Exact signed distance from world points to the primitive (negative inside)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    rot = world[:3, :3]
    local = (pts - world[:3, 3]) @ rot
    if geom.shape == "box":
        q = np.abs(local) - geom.half_extents
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
        inside = np.minimum(np.max(q, axis=1), 0.0)
        return outside + inside
    if geom.shape == "cylinder":
        r, length = geom.size
        q = np.stack([np.hypot(local[:, 0], local[:, 1]) - r, np.abs(local[:, 2]) - length / 2.0], axis=1)
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
        inside = np.minimum(np.max(q, axis=1), 0.0)
        return outside + inside
    return _convex_point_distance(geom, local)


def _convex_point_distance(geom, local):
    verts = geom.vertex_array
    hull = ConvexHull(verts)
    eqs = hull.equations
    plane_d = local @ eqs[:, :3].T + eqs[:, 3]
    inside_val = plane_d.max(axis=1)
    result = inside_val.copy()
    outside = inside_val > 0
    if not np.any(outside):
        return result
    p = local[outside]
    best = np.full(len(p), np.inf)
    # closest point is on a facet interior or on an edge
    for simplex, eq in zip(hull.simplices, eqs):
        a, b, c = verts[simplex]
        n = eq[:3]
        s = p @ n + eq[3]
        proj = p - s[:, None] * n
        inside_tri = np.ones(len(p), dtype=bool)
        for u, v in ((a, b), (b, c), (c, a)):
            inside_tri &= (np.cross(v - u, proj - u) @ n) >= 0
        best = np.where(inside_tri, np.minimum(best, np.abs(s)), best)
        for u, v in ((a, b), (b, c), (c, a)):
            uv = v - u
            t = np.clip(((p - u) @ uv) / (uv @ uv), 0.0, 1.0)
            d = np.linalg.norm(p - (u + t[:, None] * uv), axis=1)
            best = np.minimum(best, d)
    result[outside] = best
    return result


def sphere_proxies(geom, max_ratio=1.5):
    """Spheres (centers in the link frame, radii) that fully enclose the primitive.

    The primitive's local bounding box is split into roughly cubic cells and
    each cell gets its circumscribed sphere.
    """
    lo, hi = geom.local_bounds()
    ext = hi - lo
    cell = max(float(ext.min()), 1e-6) * max_ratio
    counts = np.maximum(1, np.ceil(ext / cell - 1e-9)).astype(int)
    step = ext / counts
    grids = [lo[i] + step[i] * (np.arange(counts[i]) + 0.5) for i in range(3)]
    centers = np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, 3)
    if geom.shape == "cylinder":
        r = geom.size[0]
        # cells along the axis only; a disk-shaped slab is enclosed by sqrt(r^2 + (h/2)^2)
        n_ax = max(1, int(np.ceil(geom.size[1] / max(2 * r * max_ratio, 1e-6) - 1e-9)))
        h = geom.size[1] / n_ax
        zs = -geom.size[1] / 2.0 + h * (np.arange(n_ax) + 0.5)
        centers = np.stack([np.zeros(n_ax), np.zeros(n_ax), zs], axis=1)
        radii = np.full(n_ax, np.hypot(r, h / 2.0))
    else:
        radii = np.full(len(centers), 0.5 * float(np.linalg.norm(step)))
    pose = geom.local_pose
    return pose.apply(centers), radii
