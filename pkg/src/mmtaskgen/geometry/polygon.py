"""Planar polygons: surface planes, projection, clipping areas and containment.

All 2D work happens in an orthonormal in-plane basis ``(e1, e2)`` with
``e1 x e2 = n`` so that counter-clockwise order about ``n`` stays
counter-clockwise in the plane coordinates.
"""
from dataclasses import dataclass, field

import numpy as np

from .._validation import check_points
from ..errors import DomainError

COPLANAR_TOL = 1e-6
BOUNDARY_TOL = 1e-9


def plane_basis(normal):
    n = np.asarray(normal, dtype=float)
    helper = np.eye(3)[int(np.argmin(np.abs(n)))]
    e1 = np.cross(n, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(n, e1)
    return e1, e2


def newell_normal(points):
    """Area-weighted normal of a (possibly non-convex) 3D polygon."""
    p = np.asarray(points, dtype=float)
    q = np.roll(p, -1, axis=0)
    n = np.array(
        [
            np.sum((p[:, 1] - q[:, 1]) * (p[:, 2] + q[:, 2])),
            np.sum((p[:, 2] - q[:, 2]) * (p[:, 0] + q[:, 0])),
            np.sum((p[:, 0] - q[:, 0]) * (p[:, 1] + q[:, 1])),
        ]
    )
    return n


def signed_area_2d(poly):
    p = np.asarray(poly, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _segments_cross(p1, p2, p3, p4):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1 = orient(p3, p4, p1)
    d2 = orient(p3, p4, p2)
    d3 = orient(p1, p2, p3)
    d4 = orient(p1, p2, p4)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and d1 * d2 < 0 and d3 * d4 < 0:
        return True
    return False


def is_simple_2d(poly):
    k = len(poly)
    for i in range(k):
        a, b = poly[i], poly[(i + 1) % k]
        for j in range(i + 2, k):
            if i == 0 and j == k - 1:
                continue
            if _segments_cross(a, b, poly[j], poly[(j + 1) % k]):
                return False
    return True


def is_convex_2d(poly, tol=1e-12):
    p = np.asarray(poly, dtype=float)
    d1 = np.roll(p, -1, axis=0) - p
    d2 = np.roll(d1, -1, axis=0)
    cross = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    return bool(np.all(cross >= -tol) or np.all(cross <= tol))


@dataclass(frozen=True, eq=False)
class SurfacePlane:
    """Oriented plane ``n.x + d = 0`` with a counter-clockwise polygon outline.

    ``link`` and ``geom_index`` record which collision primitive the plane
    came from, when it was extracted from a scene.
    """

    normal: np.ndarray
    offset: float
    outline: np.ndarray
    link: str | None = None
    geom_index: int | None = None
    _basis: tuple = field(init=False, repr=False)

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float).reshape(-1)
        if n.shape != (3,) or abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise DomainError(f"plane normal must be a unit 3-vector, got {n!r}")
        outline = check_points(self.outline, 3, "outline", min_count=3)
        offset = float(self.offset)
        residual = np.abs(outline @ n + offset)
        if residual.max() > COPLANAR_TOL:
            raise DomainError(f"outline is not coplanar (max residual {residual.max():.3g} m)")
        e1, e2 = plane_basis(n)
        uv = np.stack([outline @ e1, outline @ e2], axis=1)
        area = signed_area_2d(uv)
        if abs(area) <= 1e-15:
            raise DomainError("outline has zero area")
        if area < 0:
            raise DomainError("outline must be counter-clockwise about the normal")
        if not is_simple_2d(uv):
            raise DomainError("outline is not a simple polygon")
        n.setflags(write=False)
        outline.setflags(write=False)
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "outline", outline)
        object.__setattr__(self, "_basis", (e1, e2))

    @classmethod
    def from_outline(cls, points, normal=None, link=None, geom_index=None):
        """Build a plane from outline vertices, fixing orientation if needed."""
        pts = check_points(points, 3, "outline", min_count=3)
        nw = newell_normal(pts)
        if np.linalg.norm(nw) <= 1e-15:
            raise DomainError("outline has zero area")
        nw = nw / np.linalg.norm(nw)
        if normal is not None:
            normal = np.asarray(normal, dtype=float)
            normal = normal / np.linalg.norm(normal)
            if np.dot(normal, nw) < 0:
                pts = pts[::-1].copy()
            nw = normal
        offset = -float(np.mean(pts @ nw))
        return cls(nw, offset, pts, link=link, geom_index=geom_index)

    @property
    def basis(self):
        return self._basis

    def to_2d(self, points):
        e1, e2 = self._basis
        p = np.asarray(points, dtype=float)
        return np.stack([p @ e1, p @ e2], axis=-1)

    def from_2d(self, uv):
        e1, e2 = self._basis
        uv = np.asarray(uv, dtype=float)
        base = -self.offset * self.normal
        return base + uv[..., :1] * e1 + uv[..., 1:2] * e2

    @property
    def outline_2d(self):
        return self.to_2d(self.outline)

    @property
    def area(self):
        return signed_area_2d(self.outline_2d)

    @property
    def centroid(self):
        uv = self.outline_2d
        x, y = uv[:, 0], uv[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        c = x * yn - xn * y
        a = c.sum() / 2.0
        cx = np.sum((x + xn) * c) / (6.0 * a)
        cy = np.sum((y + yn) * c) / (6.0 * a)
        return self.from_2d(np.array([cx, cy]))

    def signed_distance(self, points):
        return np.asarray(points, dtype=float) @ self.normal + self.offset

    def __eq__(self, other):
        if not isinstance(other, SurfacePlane):
            return NotImplemented
        return (
            np.array_equal(self.normal, other.normal)
            and self.offset == other.offset
            and np.array_equal(self.outline, other.outline)
            and self.link == other.link
            and self.geom_index == other.geom_index
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"SurfacePlane(normal={np.round(self.normal, 6).tolist()}, offset={self.offset:.6g}, "
            f"vertices={len(self.outline)}, link={self.link!r})"
        )


# ---------------------------------------------------------------------------
# 2D primitives


def _cross2(ax, ay, bx, by):
    return ax * by - ay * bx


def triangulate_2d(poly):
    """Ear-clipping triangulation of a simple polygon; returns index triples."""
    p = [tuple(map(float, v)) for v in poly]
    k = len(p)
    idx = list(range(k))
    if signed_area_2d(poly) < 0:
        idx.reverse()
    tris = []
    guard = 0
    while len(idx) > 3 and guard < 2 * k * k:
        guard += 1
        m = len(idx)
        clipped = False
        for i in range(m):
            ia, ib, ic = idx[i - 1], idx[i], idx[(i + 1) % m]
            a, b, c = p[ia], p[ib], p[ic]
            turn = _cross2(b[0] - a[0], b[1] - a[1], c[0] - b[0], c[1] - b[1])
            if abs(turn) <= 1e-14:
                # collinear vertex: contributes nothing to the area
                idx.pop(i)
                clipped = True
                break
            if turn < 0:
                continue
            ear = True
            for j in idx:
                if j in (ia, ib, ic):
                    continue
                q = p[j]
                if q in (a, b, c):
                    continue
                d1 = _cross2(b[0] - a[0], b[1] - a[1], q[0] - a[0], q[1] - a[1])
                d2 = _cross2(c[0] - b[0], c[1] - b[1], q[0] - b[0], q[1] - b[1])
                d3 = _cross2(a[0] - c[0], a[1] - c[1], q[0] - c[0], q[1] - c[1])
                if d1 >= 0 and d2 >= 0 and d3 >= 0:
                    ear = False
                    break
            if ear:
                tris.append((ia, ib, ic))
                idx.pop(i)
                clipped = True
                break
        if not clipped:
            break
    if len(idx) == 3:
        tris.append(tuple(idx))
    return tris


def convex_pieces(poly):
    """Split a simple polygon into convex CCW pieces (itself if already convex)."""
    p = np.asarray(poly, dtype=float)
    if signed_area_2d(p) < 0:
        p = p[::-1]
    if is_convex_2d(p):
        return [p]
    return [p[list(t)] for t in triangulate_2d(p)]


def clip_convex_2d(subject, clipper):
    """Sutherland-Hodgman clip of a polygon against a convex CCW clipper."""
    out = [tuple(map(float, v)) for v in subject]
    cl = [tuple(map(float, v)) for v in clipper]
    for i in range(len(cl)):
        if not out:
            break
        ax, ay = cl[i - 1]
        bx, by = cl[i]
        ex, ey = bx - ax, by - ay
        inp = out
        out = []
        sx, sy = inp[-1]
        s_side = _cross2(ex, ey, sx - ax, sy - ay)
        for px, py in inp:
            p_side = _cross2(ex, ey, px - ax, py - ay)
            if p_side >= 0:
                if s_side < 0:
                    t = s_side / (s_side - p_side)
                    out.append((sx + t * (px - sx), sy + t * (py - sy)))
                out.append((px, py))
            elif s_side >= 0:
                denom = s_side - p_side
                t = s_side / denom if denom != 0 else 0.0
                out.append((sx + t * (px - sx), sy + t * (py - sy)))
            sx, sy, s_side = px, py, p_side
    return out


def intersection_area_2d(a, b):
    total = 0.0
    pieces_b = convex_pieces(b)
    for pa in convex_pieces(a):
        for pb in pieces_b:
            clipped = clip_convex_2d(pa, pb)
            if len(clipped) >= 3:
                total += abs(signed_area_2d(np.asarray(clipped)))
    return total


def points_in_polygon_2d(points, poly, tol=BOUNDARY_TOL):
    """Vectorised containment; boundary points (within ``tol``) count as inside."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    v = np.asarray(poly, dtype=float)
    a = v
    b = np.roll(v, -1, axis=0)
    px = pts[:, 0:1]
    py = pts[:, 1:2]
    ax, ay = a[:, 0][None, :], a[:, 1][None, :]
    bx, by = b[:, 0][None, :], b[:, 1][None, :]
    # crossing number
    cond = (ay > py) != (by > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = ax + (py - ay) * (bx - ax) / (by - ay)
    crossings = np.sum(cond & (px < xint), axis=1)
    inside = (crossings % 2) == 1
    return inside | (boundary_distance_2d(pts, v) <= tol)


def boundary_distance_2d(points, poly):
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    a = np.asarray(poly, dtype=float)
    b = np.roll(a, -1, axis=0)
    ab = b - a
    denom = np.maximum(np.sum(ab * ab, axis=1), 1e-300)
    ap = pts[:, None, :] - a[None, :, :]
    t = np.clip(np.sum(ap * ab[None], axis=2) / denom[None], 0.0, 1.0)
    closest = a[None] + t[..., None] * ab[None]
    return np.min(np.linalg.norm(pts[:, None, :] - closest, axis=2), axis=1)


def sample_in_polygon_2d(poly, rng, size):
    """Uniform area samples from a simple polygon via triangulation."""
    p = np.asarray(poly, dtype=float)
    tris = np.array(triangulate_2d(p))
    corners = p[tris]
    areas = np.abs(
        _cross2(
            corners[:, 1, 0] - corners[:, 0, 0],
            corners[:, 1, 1] - corners[:, 0, 1],
            corners[:, 2, 0] - corners[:, 0, 0],
            corners[:, 2, 1] - corners[:, 0, 1],
        )
    )
    which = rng.choice(len(tris), size=size, p=areas / areas.sum())
    r1 = np.sqrt(rng.random(size))
    r2 = rng.random(size)
    c = corners[which]
    return (
        (1.0 - r1)[:, None] * c[:, 0]
        + (r1 * (1.0 - r2))[:, None] * c[:, 1]
        + (r1 * r2)[:, None] * c[:, 2]
    )


# ---------------------------------------------------------------------------
# 3D operations


def project_onto_plane(points, plane):
    """Drop points along the plane normal: ``u - (n.u + d) n``."""
    pts = np.asarray(points, dtype=float)
    dist = pts @ plane.normal + plane.offset
    return pts - dist[..., None] * plane.normal


def _as_outline(poly):
    if isinstance(poly, SurfacePlane):
        return poly.outline
    arr = np.asarray(poly, dtype=float)
    if arr.ndim != 2 or arr.shape[1] not in (2, 3):
        raise DomainError(f"polygon must be a (k, 2) or (k, 3) array, got shape {arr.shape}")
    return check_points(arr, arr.shape[1], "polygon", 3)


def polygon_intersection_area(a, b):
    """Exact area of the intersection of two coplanar simple polygons.

    Accepts :class:`SurfacePlane` objects or raw vertex arrays, either 3D
    (must be coplanar within 1e-6 m) or already-planar 2D.
    """
    pa = _as_outline(a)
    pb = _as_outline(b)
    if pa.shape[1] == 2 and pb.shape[1] == 2:
        return intersection_area_2d(pa, pb)
    if pa.shape[1] != 3 or pb.shape[1] != 3:
        raise DomainError("polygons must both be 2D or both 3D")
    if isinstance(a, SurfacePlane):
        n, d = a.normal, a.offset
    else:
        n = newell_normal(pa)
        norm = np.linalg.norm(n)
        if norm <= 1e-15:
            raise DomainError("first polygon has zero area")
        n = n / norm
        d = -float(np.mean(pa @ n))
    for name, pts in (("first", pa), ("second", pb)):
        residual = np.abs(pts @ n + d).max()
        if residual > COPLANAR_TOL:
            raise DomainError(f"{name} polygon is off the common plane by {residual:.3g} m")
    e1, e2 = plane_basis(n)
    to2 = lambda p: np.stack([p @ e1, p @ e2], axis=1)  # noqa: E731
    return intersection_area_2d(to2(pa), to2(pb))


def polygon_area(poly):
    pts = _as_outline(poly)
    if pts.shape[1] == 2:
        return abs(signed_area_2d(pts))
    return 0.5 * float(np.linalg.norm(newell_normal(pts)))


def contact_ratio(object_bottom, support):
    """Fraction of the object's bottom outline supported by ``support``."""
    area_o = polygon_area(object_bottom.outline)
    if area_o <= 1e-15:
        raise DomainError("object outline has zero area")
    proj = project_onto_plane(object_bottom.outline, support)
    # projected outline lies exactly in the support plane, so compare in its basis
    overlap = intersection_area_2d(support.outline_2d, support.to_2d(proj))
    return float(min(1.0, max(0.0, overlap / area_o)))


def point_in_polygon(p, poly):
    """Containment test for a point on the polygon's plane; boundary counts as inside."""
    p = np.asarray(p, dtype=float).reshape(3)
    if abs(float(p @ poly.normal + poly.offset)) > COPLANAR_TOL:
        raise DomainError("point is not on the polygon plane")
    return bool(points_in_polygon_2d(poly.to_2d(p)[None, :], poly.outline_2d)[0])
