"""Signed distance between convex primitives (GJK distance + EPA depth)."""
import numpy as np

from .shapes import aabb_gap, support_point, world_aabb

_EPS = 1e-12
_MAX_GJK = 100
_MAX_EPA = 128
_EPA_TOL = 1e-7


def _support(g1, w1, g2, w2, d):
    return support_point(g1, w1, d) - support_point(g2, w2, -d)


def _closest_segment(a, b):
    ab = b - a
    denom = ab @ ab
    if denom <= _EPS:
        return a, [0]
    t = -(a @ ab) / denom
    if t <= 0:
        return a, [0]
    if t >= 1:
        return b, [1]
    return a + t * ab, [0, 1]


def _closest_triangle(a, b, c):
    # Ericson, Real-Time Collision Detection 5.1.5, query point at the origin
    ab, ac, ap = b - a, c - a, -a
    d1, d2 = ab @ ap, ac @ ap
    if d1 <= 0 and d2 <= 0:
        return a, [0]
    bp = -b
    d3, d4 = ab @ bp, ac @ bp
    if d3 >= 0 and d4 <= d3:
        return b, [1]
    vc = d1 * d4 - d3 * d2
    if vc <= 0 and d1 >= 0 and d3 <= 0:
        v = d1 / (d1 - d3)
        return a + v * ab, [0, 1]
    cp = -c
    d5, d6 = ab @ cp, ac @ cp
    if d6 >= 0 and d5 <= d6:
        return c, [2]
    vb = d5 * d2 - d1 * d6
    if vb <= 0 and d2 >= 0 and d6 <= 0:
        w = d2 / (d2 - d6)
        return a + w * ac, [0, 2]
    va = d3 * d6 - d5 * d4
    if va <= 0 and (d4 - d3) >= 0 and (d5 - d6) >= 0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return b + w * (c - b), [1, 2]
    denom = va + vb + vc
    if abs(denom) <= _EPS:
        # degenerate triangle: fall back to its edges
        best = None
        for i, j in ((0, 1), (1, 2), (0, 2)):
            p, keep = _closest_segment((a, b, c)[i], (a, b, c)[j])
            if best is None or p @ p < best[0] @ best[0]:
                best = (p, [(i, j)[k] for k in keep])
        return best
    v = vb / denom
    w = vc / denom
    return a + ab * v + ac * w, [0, 1, 2]


def _origin_outside_plane(p, q, r, s):
    # origin and s on opposite sides of plane pqr
    n = np.cross(q - p, r - p)
    sign_o = (-p) @ n
    sign_s = (s - p) @ n
    if abs(sign_s) <= _EPS:
        return None
    return sign_o * sign_s < 0


def _closest_tetra(pts):
    a, b, c, d = pts
    best = None
    inside = True
    for tri, other in (((0, 1, 2), 3), ((0, 2, 3), 1), ((0, 3, 1), 2), ((1, 3, 2), 0)):
        out = _origin_outside_plane(pts[tri[0]], pts[tri[1]], pts[tri[2]], pts[other])
        if out is None:
            out = True
        if out:
            inside = False
            p, keep = _closest_triangle(pts[tri[0]], pts[tri[1]], pts[tri[2]])
            if best is None or p @ p < best[0] @ best[0]:
                best = (p, [tri[k] for k in keep])
    if inside:
        return np.zeros(3), [0, 1, 2, 3]
    return best


def _closest_simplex(simplex):
    n = len(simplex)
    if n == 1:
        return simplex[0], [0]
    if n == 2:
        return _closest_segment(*simplex)
    if n == 3:
        return _closest_triangle(*simplex)
    return _closest_tetra(simplex)


def gjk(g1, w1, g2, w2):
    """Return ``(distance, simplex)``; distance 0 with a 4-point simplex means overlap."""
    x = (w1[:3, 3] + w1[:3, :3] @ _center(g1)) - (w2[:3, 3] + w2[:3, :3] @ _center(g2))
    if x @ x <= _EPS:
        x = np.array([1.0, 0.0, 0.0])
    simplex = [_support(g1, w1, g2, w2, -x)]
    x = simplex[0]
    for _ in range(_MAX_GJK):
        xx = x @ x
        if xx <= 1e-20:
            return 0.0, simplex
        w = _support(g1, w1, g2, w2, -x)
        # stop when the support point no longer improves the bound
        if xx - x @ w <= 1e-10 * max(xx, 1e-6):
            return float(np.sqrt(xx)), simplex
        if any(np.allclose(w, s, atol=1e-14) for s in simplex):
            return float(np.sqrt(xx)), simplex
        simplex.append(w)
        x, keep = _closest_simplex(simplex)
        simplex = [simplex[k] for k in keep]
        if len(simplex) == 4:
            return 0.0, simplex
    return float(np.sqrt(x @ x)), simplex


def _center(geom):
    lo, hi = geom.local_bounds()
    return (lo + hi) / 2.0


def _blow_up(simplex, g1, w1, g2, w2):
    """Grow a degenerate simplex containing the origin into a tetrahedron."""
    pts = list(simplex)
    dirs = [np.array(v, float) for v in np.vstack([np.eye(3), -np.eye(3)])]
    while len(pts) < 4:
        added = False
        if len(pts) == 1:
            cand_dirs = dirs
        elif len(pts) == 2:
            e = pts[1] - pts[0]
            helper = np.eye(3)[int(np.argmin(np.abs(e)))]
            p1 = np.cross(e, helper)
            p2 = np.cross(e, p1)
            cand_dirs = [p1, -p1, p2, -p2]
        else:
            nrm = np.cross(pts[1] - pts[0], pts[2] - pts[0])
            cand_dirs = [nrm, -nrm]
        for d in cand_dirs:
            if np.linalg.norm(d) <= _EPS:
                continue
            w = _support(g1, w1, g2, w2, d / np.linalg.norm(d))
            if len(pts) == 1 and np.linalg.norm(w - pts[0]) > 1e-10:
                pts.append(w)
                added = True
                break
            if len(pts) == 2 and np.linalg.norm(np.cross(pts[1] - pts[0], w - pts[0])) > 1e-12:
                pts.append(w)
                added = True
                break
            if len(pts) == 3 and abs(np.cross(pts[1] - pts[0], pts[2] - pts[0]) @ (w - pts[0])) > 1e-14:
                pts.append(w)
                added = True
                break
        if not added:
            return None
    return pts


def epa(simplex, g1, w1, g2, w2):
    """Penetration depth of overlapping primitives from a containing tetrahedron."""
    verts = [np.asarray(p, float) for p in simplex]
    faces = []
    for i, j, k, o in ((0, 1, 2, 3), (0, 3, 1, 2), (0, 2, 3, 1), (1, 3, 2, 0)):
        n = np.cross(verts[j] - verts[i], verts[k] - verts[i])
        if n @ (verts[o] - verts[i]) > 0:
            j, k = k, j
        faces.append((i, j, k))

    def face_data(f):
        a, b, c = (verts[v] for v in f)
        n = np.cross(b - a, c - a)
        nn = np.linalg.norm(n)
        if nn <= _EPS:
            return None, np.inf
        n = n / nn
        return n, float(n @ a)

    best = np.inf
    for _ in range(_MAX_EPA):
        data = [face_data(f) for f in faces]
        dists = [d for _, d in data]
        i_min = int(np.argmin(dists))
        n, dist = data[i_min]
        if n is None:
            break
        best = dist
        w = _support(g1, w1, g2, w2, n)
        if w @ n - dist <= _EPA_TOL:
            return dist
        verts.append(w)
        iw = len(verts) - 1
        edges = {}
        keep = []
        for f, (fn, fd) in zip(faces, data):
            if fn is not None and fn @ (w - verts[f[0]]) > 1e-12:
                for e in ((f[0], f[1]), (f[1], f[2]), (f[2], f[0])):
                    rev = (e[1], e[0])
                    if rev in edges:
                        del edges[rev]
                    else:
                        edges[e] = True
            else:
                keep.append(f)
        faces = keep + [(a, b, iw) for a, b in edges]
        if not faces:
            break
    return best


def primitive_distance(g1, world1, g2, world2):
    """Signed distance between two posed primitives.

    Positive values are the separation; values ``<= 0`` mean touching or
    penetrating, with the magnitude equal to the penetration depth.
    ``world1``/``world2`` are the 4x4 link transforms; each primitive's own
    ``local_pose`` is applied here.
    """
    w1 = np.asarray(world1, dtype=float) @ g1.local_pose.as_matrix()
    w2 = np.asarray(world2, dtype=float) @ g2.local_pose.as_matrix()
    return _posed_distance(g1, w1, g2, w2)


def _posed_distance(g1, w1, g2, w2):
    dist, simplex = gjk(g1, w1, g2, w2)
    if dist > 1e-9:
        return dist
    tetra = simplex if len(simplex) == 4 else _blow_up(simplex, g1, w1, g2, w2)
    if tetra is None:
        return 0.0
    # a tetrahedron built by blow-up may not enclose the origin; then the shapes just touch
    p, _ = _closest_tetra(tetra)
    if p @ p > 1e-18:
        return 0.0
    depth = epa(tetra, g1, w1, g2, w2)
    if not np.isfinite(depth):
        return 0.0
    return -max(0.0, depth)


def posed_aabb(geom, world):
    return world_aabb(geom, np.asarray(world, dtype=float) @ geom.local_pose.as_matrix())


def min_distance(pairs, stop_below=None):
    """Minimum signed distance over ``(g1, w1, g2, w2)`` pairs with AABB culling.

    Transforms are already composed with the primitives' local poses. If
    ``stop_below`` is given, returns as soon as a pair is found below it.
    """
    boxes = [(world_aabb(g1, w1), world_aabb(g2, w2)) for g1, w1, g2, w2 in pairs]
    gaps = np.array([aabb_gap(a, b) for a, b in boxes]) if boxes else np.zeros(0)
    order = np.argsort(gaps)
    best = np.inf
    for i in order:
        if gaps[i] >= best:
            break
        g1, w1, g2, w2 = pairs[i]
        d = _posed_distance(g1, w1, g2, w2)
        best = min(best, d)
        if stop_below is not None and best < stop_below:
            break
    return best
