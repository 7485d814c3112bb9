"""Collision queries for the chain.

Two levels are provided:

* a smooth sphere model (proxies of every primitive against a distance
  field, plus sphere pairs for self-collision) used inside the optimizer,
  IK and RRT;
* exact primitive-pair signed distances (GJK/EPA) used for validation.

Because proxies enclose their primitives and ``ExactField`` is the true
point distance, a non-negative sphere clearance implies exact clearance.
"""
import numpy as np

from ..geometry.distance import min_distance
from ..geometry.shapes import point_signed_distance, world_aabb

FD_STEP = 1e-5
CONTACT_TOL = 1e-6


class ExactField:
    """Signed distance to a fixed set of posed primitives, with the
    ``query(points, gradient)`` interface of :class:`SdfGrid`."""

    def __init__(self, posed_geoms):
        self.items = [(g, np.asarray(w, float)) for g, w in posed_geoms]
        if self.items:
            boxes = [world_aabb(g, w) for g, w in self.items]
            self.bounds = (np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0))
        else:
            self.bounds = None

    @classmethod
    def from_scene(cls, scene, exclude_links=(), offsets=None):
        """Field of the scene's primitives; ``offsets`` maps links to a world translation."""
        exclude = set(exclude_links)
        offsets = offsets or {}
        items = []
        for link, _, g, w in scene.posed_geoms():
            if link in exclude:
                continue
            if link in offsets:
                w = w.copy()
                w[:3, 3] += offsets[link]
            items.append((g, w))
        return cls(items)

    def _dist(self, pts):
        if not self.items:
            return np.full(len(pts), 1e3)
        out = np.full(len(pts), np.inf)
        for g, w in self.items:
            out = np.minimum(out, point_signed_distance(g, w, pts))
        return out

    def query(self, points, gradient=False):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        val = self._dist(pts)
        if not gradient:
            return val
        grad = np.empty_like(pts)
        for k in range(3):
            step = np.zeros(3)
            step[k] = FD_STEP
            grad[:, k] = (self._dist(pts + step) - self._dist(pts - step)) / (2 * FD_STEP)
        return val, grad

    def lower_bound(self, points):
        return self.query(points)


def attached_protrusion(chain):
    """How far the attached object's spheres reach below its lowest point.

    Measured along the object's own z axis, so it holds while the object is
    upright. Lowering a support by this much lets the proxies of a resting
    object clear it.
    """
    if not chain.has_attached:
        return 0.0
    li = chain.index[chain.attached_name]
    idx, local, radii = chain.spheres()
    sel = idx == li
    if not np.any(sel):
        return 0.0
    lk = chain.links[li]
    bottom = min(float(world_aabb(g, g.local_pose.as_matrix())[0][2]) for g in lk.geoms)
    return float(max(0.0, np.max(radii[sel] - (local[sel, 2] - bottom))))


class SphereModel:
    """Sphere-proxy collision terms for a chain.

    ``field`` handles every robot sphere; ``object_field`` (defaults to
    ``field``) handles spheres of the attached object. ``link_fields`` maps
    chain link names to their own field, e.g. so the hand may touch the
    object it is about to grasp while the rest of the arm may not.
    """

    def __init__(self, chain, field, object_field=None, margin=0.02, self_margin=None, link_fields=None):
        self.chain = chain
        self.field = field
        self.object_field = object_field if object_field is not None else field
        self.link_fields = dict(link_fields or {})
        self.margin = float(margin)
        self.self_margin = self.margin if self_margin is None else float(self_margin)
        idx, _, radii = chain.spheres()
        self.link_idx = idx
        self.radii = radii
        att = chain.index.get(chain.attached_name, -2)
        self.is_object = idx == att
        self.pairs = self._self_pairs()
        # group spheres by the field that answers for them
        fields = [self.field] * len(idx)
        for i, li in enumerate(idx):
            name = chain.links[li].name
            if self.is_object[i]:
                fields[i] = self.object_field
            if name in self.link_fields:
                fields[i] = self.link_fields[name]
        self._groups = []
        for f in dict.fromkeys(fields):
            self._groups.append((f, np.array([g is f for g in fields], dtype=bool)))

    def with_margin(self, margin, self_margin=None):
        """Copy with different margins."""
        return SphereModel(self.chain, self.field, self.object_field, margin,
                           margin if self_margin is None else self_margin, self.link_fields)

    def _self_pairs(self):
        idx = self.link_idx
        links = set(map(tuple, self.chain.self_link_pairs()))
        if not links:
            return np.zeros((0, 2), dtype=int)
        a, b = np.triu_indices(len(idx), 1)
        keep = np.array([(idx[i], idx[j]) in links or (idx[j], idx[i]) in links for i, j in zip(a, b)], dtype=bool)
        if not np.any(keep):
            return np.zeros((0, 2), dtype=int)
        pairs = np.stack([a[keep], b[keep]], axis=1)
        # drop sphere pairs already overlapping in the zero configuration
        q0 = np.clip(np.zeros(self.chain.dof), self.chain.lower, self.chain.upper)
        c = self.chain.sphere_centers(self.chain.link_poses(q0))[0]
        gap = np.linalg.norm(c[pairs[:, 0]] - c[pairs[:, 1]], axis=1) - self.radii[pairs[:, 0]] - self.radii[pairs[:, 1]]
        return pairs[gap > self.self_margin]

    def env_clearance(self, centers, gradient=False):
        """Per-sphere clearance ``field(center) - radius`` for centers ``(B, S, 3)``."""
        b, s, _ = centers.shape
        flat = centers.reshape(-1, 3)
        val = np.empty(len(flat))
        grad = np.zeros((len(flat), 3)) if gradient else None
        for field, sel in self._groups:
            mask = np.tile(sel, b)
            if not np.any(mask):
                continue
            if gradient:
                v, g = field.query(flat[mask], gradient=True)
                grad[mask] = g
            else:
                v = field.query(flat[mask])
            val[mask] = v
        val = val.reshape(b, s) - self.radii
        if gradient:
            return val, grad.reshape(b, s, 3)
        return val

    def self_clearance(self, centers):
        p = self.pairs
        if len(p) == 0:
            return np.zeros((centers.shape[0], 0))
        d = np.linalg.norm(centers[:, p[:, 0]] - centers[:, p[:, 1]], axis=2)
        return d - self.radii[p[:, 0]] - self.radii[p[:, 1]]

    def min_clearance(self, q):
        """Smallest env and self clearance (before margins) over configurations ``q``."""
        q = np.atleast_2d(q)
        centers = self.chain.sphere_centers(self.chain.link_poses(q))
        env = self.env_clearance(centers)
        slf = self.self_clearance(centers)
        env_min = env.min(axis=1) if env.shape[1] else np.full(len(q), np.inf)
        self_min = slf.min(axis=1) if slf.shape[1] else np.full(len(q), np.inf)
        return env_min, self_min

    def is_free(self, q, margin=None):
        m = self.margin if margin is None else margin
        env, slf = self.min_clearance(q)
        return (env >= m) & (slf >= min(m, self.self_margin))


# ---------------------------------------------------------------------------
# exact checks


class ExactChecker:
    """Exact primitive-pair distances between the chain and a scene.

    ``ignore`` holds ``(chain link name, scene link name)`` pairs whose
    contacts are disregarded (the hand and the object it grasps). ``allowed``
    maps such pairs to a tolerated penetration depth instead.
    """

    def __init__(self, chain, scene, exclude_links=(), ignore=(), allowed=None):
        self.chain = chain
        exclude = set(exclude_links)
        self.scene_geoms = [(link, g, w) for link, _, g, w in scene.posed_geoms() if link not in exclude]
        self.ignore = set(ignore)
        self.allowed = dict(allowed or {})
        self.self_pairs = chain.self_link_pairs()

    def env_distance(self, q):
        """Minimum signed distance over all robot/scene pairs, with the worst pair."""
        robot = self.chain.posed_geoms(q)
        best, worst = np.inf, None
        for rlink, rg, rw in robot:
            pairs, names = [], []
            for slink, sg, sw in self.scene_geoms:
                if (rlink, slink) in self.ignore:
                    continue
                pairs.append((rg, rw, sg, sw))
                names.append(slink)
            if not pairs:
                continue
            d = self._min_with_allowance(rlink, pairs, names)
            if d < best:
                best, worst = d, rlink
        return best, worst

    def _min_with_allowance(self, rlink, pairs, names):
        plain = [p for p, n in zip(pairs, names) if (rlink, n) not in self.allowed]
        best = min_distance(plain) if plain else np.inf
        for p, n in zip(pairs, names):
            tol = self.allowed.get((rlink, n))
            if tol is None:
                continue
            d = min_distance([p])
            # tolerated contact counts as touching
            best = min(best, 0.0 if d >= -tol else d)
        return best

    def self_distance(self, q):
        poses = self.chain.link_poses(q)[0]
        best = np.inf
        for a, b in self.self_pairs:
            pairs = []
            for ga in self.chain.links[a].geoms:
                wa = poses[a] @ ga.local_pose.as_matrix()
                for gb in self.chain.links[b].geoms:
                    pairs.append((ga, wa, gb, poses[b] @ gb.local_pose.as_matrix()))
            best = min(best, min_distance(pairs))
        return best

    def env_collision(self, q, tol=CONTACT_TOL):
        return self.env_distance(q)[0] < -tol

    def self_collision(self, q, tol=CONTACT_TOL):
        return self.self_distance(q) < -tol

    def collision_free(self, q, tol=CONTACT_TOL):
        return not self.env_collision(q, tol) and not self.self_collision(q, tol)
