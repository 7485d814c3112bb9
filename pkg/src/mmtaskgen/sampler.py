"""Conditional scene sampling: object placements and robot base poses on
their supporting planes, checked for containment and collisions."""
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_count, check_positive, check_rng, check_vector
from .errors import NoSupportError, SaturationError
from .geometry.distance import min_distance
from .geometry.polygon import SurfacePlane, points_in_polygon_2d, sample_in_polygon_2d
from .geometry.shapes import local_faces, world_aabb
from .geometry.transforms import RigidTransform, align_vectors, axis_rotation
from .support import (
    MIN_ABS_NZ,
    THETA_A,
    THETA_D,
    SupportQuery,
    _face_plane,
    calc_support_plane,
    extract_planes,
    local_bottom,
    support_of,
)

ATTEMPT_BUDGET = 100_000
MIN_ACCEPT_RATE = 1e-3
BATCH = 256
# placed objects are lifted this far off their support for the collision test
# so resting contact is not reported as a collision
CONTACT_LIFT = 1e-6


@dataclass(frozen=True)
class PlanarBasePose:
    x: float
    y: float
    theta: float

    def as_array(self):
        return np.array([self.x, self.y, self.theta])

    def to_list(self):
        return [float(self.x), float(self.y), float(self.theta)]

    @classmethod
    def from_list(cls, data):
        x, y, theta = (float(v) for v in data)
        return cls(x, y, theta)


@dataclass(frozen=True, eq=False)
class PlacementSample:
    """Object frame to world transform on ``support``, drawn with ``seed``."""

    pose: RigidTransform
    support: object
    seed: int
    index: int = 0

    def __eq__(self, other):
        if not isinstance(other, PlacementSample):
            return NotImplemented
        return self.pose == other.pose and self.support == other.support and self.seed == other.seed

    __hash__ = None


class _Obstacles:
    """Posed primitives with precomputed world AABBs for fast rejection."""

    def __init__(self, items):
        self.items = [(g, np.asarray(w, float)) for g, w in items]
        if self.items:
            boxes = [world_aabb(g, w) for g, w in self.items]
            self.lo = np.array([b[0] for b in boxes])
            self.hi = np.array([b[1] for b in boxes])
        else:
            self.lo = self.hi = np.zeros((0, 3))

    def collides(self, geoms):
        """True when any of ``(geom, world)`` touches or penetrates an obstacle."""
        if not self.items:
            return False
        for g, w in geoms:
            lo, hi = world_aabb(g, w)
            overlap = np.all((self.lo <= hi) & (self.hi >= lo), axis=1)
            for k in np.nonzero(overlap)[0]:
                og, ow = self.items[k]
                if min_distance([(g, w, og, ow)], stop_below=0.0) <= 0.0:
                    return True
        return False


def _placement_frame(bottom_local, support, yaw):
    """Rotation taking the object's bottom normal onto ``-n_s``, then yaw about ``n_s``."""
    align = align_vectors(bottom_local.normal, -support.normal)
    return axis_rotation(support.normal, yaw) @ align


def sample_poses(object_link, scene, n, seed, theta_d=THETA_D, theta_a=THETA_A, support=None,
                 obstacles=(), budget=ATTEMPT_BUDGET):
    """Draw ``n`` placements of ``object_link`` on its supporting plane.

    Positions are uniform over the support polygon and yaw is uniform in
    ``[0, 2 pi)``. A draw is kept when every footprint vertex lies in the
    polygon and the placed object is clear of the scene (its own link
    excluded) and of the extra ``obstacles`` (``(geom, world4x4)`` pairs).
    """
    n = check_count(n)
    if n == 0:
        return []
    rng = check_rng(seed)
    seed_id = int(seed) if isinstance(seed, (int, np.integer)) else -1
    if support is None:
        support = support_of(scene, object_link, theta_d, theta_a)
    link = scene.link(object_link)
    bottom = local_bottom(scene, object_link)
    center = bottom.centroid
    footprint = bottom.outline
    obstacles_all = _Obstacles(
        [(g, w) for name, _, g, w in scene.posed_geoms(exclude={object_link})] + list(obstacles)
    )
    poly = support.outline_2d
    lift = CONTACT_LIFT * support.normal
    out = []
    failures = {"polygon": 0, "collision": 0}
    attempts = 0
    hard_cap = budget + int(n / MIN_ACCEPT_RATE)
    while len(out) < n:
        if attempts >= budget and len(out) < MIN_ACCEPT_RATE * attempts or attempts >= hard_cap:
            raise SaturationError(
                f"placing {object_link!r}: {len(out)} of {n} samples after {attempts} attempts",
                failures, attempts,
            )
        k = BATCH
        uv = sample_in_polygon_2d(poly, rng, k)
        yaws = rng.uniform(0.0, 2.0 * np.pi, k)
        points = support.from_2d(uv)
        for p, yaw in zip(points, yaws):
            attempts += 1
            rot = _placement_frame(bottom, support, yaw)
            t = p - rot @ center
            world_fp = footprint @ rot.T + t
            if not np.all(points_in_polygon_2d(support.to_2d(world_fp), poly)):
                failures["polygon"] += 1
                continue
            pose = np.eye(4)
            pose[:3, :3] = rot
            pose[:3, 3] = t + lift
            geoms = [(g, pose @ g.local_pose.as_matrix()) for g in link.collision_geoms]
            if obstacles_all.collides(geoms):
                failures["collision"] += 1
                continue
            out.append(PlacementSample(RigidTransform.from_rotation_matrix(rot, t), support, seed_id, len(out)))
            if len(out) == n:
                break
    return out


# ---------------------------------------------------------------------------
# robot base


def robot_footprint(robot):
    """Bottom face of the robot's base link in the base frame."""
    root = robot.link(robot.base_joints[-1].child)
    best = None
    for i, g in enumerate(root.collision_geoms):
        world = g.local_pose.as_matrix()
        for normal, outline in local_faces(g):
            n = world[:3, :3] @ normal
            if n[2] > -0.5:
                continue
            z = float(np.mean(outline @ world[:3, :3].T + world[:3, 3], axis=0)[2])
            if best is None or z < best[0]:
                best = (z, _face_plane(normal, outline, world, root.name, i))
    if best is None:
        raise NoSupportError("robot base has no planar bottom face")
    return best[1]


def robot_support(robot, scene, near, theta_d=THETA_D, theta_a=THETA_A):
    """Plane the robot base rests on when standing at ``near`` (the floor)."""
    fp = robot_footprint(robot)
    m = np.eye(4)
    m[:2, 3] = near[:2]
    pts = fp.outline @ m[:3, :3].T + m[:3, 3]
    bottom = SurfacePlane(fp.normal, -float(np.mean(pts @ fp.normal)), pts)
    cands = [p for p in extract_planes(scene, min_abs_nz=MIN_ABS_NZ) if p.normal[2] > 0]
    if not cands:
        raise NoSupportError("scene has no upward-facing plane for the robot base")
    return calc_support_plane(SupportQuery(bottom, cands, theta_d, theta_a))


def sample_base_pose(robot, scene, near, radius, seed, q_arm=None, obstacles_exclude=(), margin=0.0,
                     budget=ATTEMPT_BUDGET, chain=None):
    """Collision-free planar base pose within ``radius`` of ``near``.

    The robot is posed with arm configuration ``q_arm`` (zeros by default).
    Collisions are tested with the enclosing sphere proxies against exact
    primitive distances, so an accepted pose is exactly collision-free too.
    """
    from .planner.chain import assemble_vkc
    from .planner.collision import ExactField, SphereModel

    near = check_vector(near, 3, "near")
    radius = check_positive(radius, "radius")
    rng = check_rng(seed)
    chain = chain or assemble_vkc(robot)
    floor = robot_support(robot, scene, near)
    field = ExactField.from_scene(scene, exclude_links={floor.link, *obstacles_exclude})
    model = SphereModel(chain, field, margin=margin, self_margin=0.0)
    q_arm = np.zeros(chain.dof - 3) if q_arm is None else np.asarray(q_arm, float)
    fp = robot_footprint(robot).outline
    poly = floor.outline_2d
    failures = {"floor polygon": 0, "collision": 0}
    attempts = 0
    while attempts < budget:
        k = BATCH
        r = radius * np.sqrt(rng.random(k))
        phi = rng.uniform(-np.pi, np.pi, k)
        theta = rng.uniform(-np.pi, np.pi, k)
        xy = near[:2] + np.stack([r * np.cos(phi), r * np.sin(phi)], axis=1)
        attempts += k
        c, s = np.cos(theta), np.sin(theta)
        # footprint corners of every candidate in world xy
        fx = c[:, None] * fp[None, :, 0] - s[:, None] * fp[None, :, 1] + xy[:, :1]
        fy = s[:, None] * fp[None, :, 0] + c[:, None] * fp[None, :, 1] + xy[:, 1:]
        z = floor.from_2d(np.zeros(2))[2]
        corners = np.stack([fx, fy, np.full_like(fx, z)], axis=2).reshape(-1, 3)
        inside = points_in_polygon_2d(floor.to_2d(corners), poly).reshape(k, -1).all(axis=1)
        failures["floor polygon"] += int(np.sum(~inside))
        q = np.concatenate([xy, theta[:, None], np.tile(q_arm, (k, 1))], axis=1)
        free = np.zeros(k, dtype=bool)
        if np.any(inside):
            free[inside] = model.is_free(q[inside], margin=margin)
        failures["collision"] += int(np.sum(inside & ~free))
        hits = np.nonzero(free)[0]
        if len(hits):
            i = hits[0]
            return PlanarBasePose(float(xy[i, 0]), float(xy[i, 1]), float(theta[i]))
    raise SaturationError(f"no collision-free base pose within {radius} m of {near.tolist()}", failures, attempts)


class ConditionalSceneSampler(BaseEstimator):
    """Estimator wrapper around :func:`sample_poses`.

    ``fit(scene)`` stores the scene; ``predict(links)`` returns one list of
    placements per requested object link.
    """

    def __init__(self, n_samples=1, theta_d=THETA_D, theta_a=THETA_A, random_state=0):
        self.n_samples = n_samples
        self.theta_d = theta_d
        self.theta_a = theta_a
        self.random_state = random_state

    def fit(self, scene, y=None):
        self.scene_ = scene
        return self

    def predict(self, links):
        check_is_fitted(self, "scene_")
        return [
            sample_poses(link, self.scene_, self.n_samples, self.random_state, self.theta_d, self.theta_a)
            for link in links
        ]
