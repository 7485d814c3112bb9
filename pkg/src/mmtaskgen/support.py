"""Surface-plane extraction and supporting-plane identification."""
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .errors import DomainError, NoSupportError
from .geometry.polygon import SurfacePlane, contact_ratio
from .geometry.shapes import local_faces

THETA_D = 0.02
THETA_A = 0.97
MIN_ABS_NZ = 0.5


def _face_plane(normal, outline, world, link, index):
    rot, t = world[:3, :3], world[:3, 3]
    n = rot @ normal
    n = n / np.linalg.norm(n)
    pts = outline @ rot.T + t
    return SurfacePlane(n, -float(np.mean(pts @ n)), pts, link=link, geom_index=index)


def extract_planes(scene, min_abs_nz=None, exclude_links=()):
    """Every flat face of every collision primitive as a world-frame plane.

    With ``min_abs_nz`` set, faces whose normal has ``|n_z|`` below it are
    dropped (walls and box sides when looking for supports).
    """
    out = []
    for link, index, geom, world in scene.posed_geoms(exclude=set(exclude_links)):
        for normal, outline in local_faces(geom):
            plane = _face_plane(normal, outline, world, link, index)
            if min_abs_nz is not None and abs(plane.normal[2]) < min_abs_nz:
                continue
            out.append(plane)
    return out


def object_bottom(scene, link, pose=None):
    """World-frame bottom face of ``link``: its lowest downward-facing face.

    ``pose`` overrides the link's world pose (4x4 or RigidTransform).
    """
    lk = scene.link(link)
    if not lk.collision_geoms:
        raise DomainError(f"link {link!r} has no collision geometry")
    base = scene.link_pose(link).as_matrix() if pose is None else _as_matrix(pose)
    best = None
    for i, g in enumerate(lk.collision_geoms):
        world = base @ g.local_pose.as_matrix()
        for normal, outline in local_faces(g):
            n = world[:3, :3] @ normal
            if n[2] > -0.5:
                continue
            height = float(np.mean(outline @ world[:3, :3].T + world[:3, 3], axis=0)[2])
            key = (height, n[2])
            if best is None or key < best[0]:
                best = (key, normal, outline, world, i)
    if best is None:
        raise DomainError(f"link {link!r} has no planar bottom face")
    _, normal, outline, world, i = best
    return _face_plane(normal, outline, world, link, i)


def local_bottom(scene, link):
    """Bottom face of ``link`` expressed in the link's own frame."""
    return object_bottom(scene, link, pose=np.eye(4))


def _as_matrix(pose):
    if hasattr(pose, "as_matrix"):
        return pose.as_matrix()
    return np.asarray(pose, dtype=float)


@dataclass(frozen=True)
class SupportQuery:
    """Object bottom face, candidate planes and the two acceptance thresholds."""

    object_bottom: SurfacePlane
    candidates: tuple
    theta_d: float = THETA_D
    theta_a: float = THETA_A

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        if not self.candidates:
            raise DomainError("support query needs at least one candidate plane")
        if not (np.isfinite(self.theta_d) and self.theta_d > 0):
            raise DomainError(f"theta_d must be positive, got {self.theta_d!r}")
        if not (0.0 < self.theta_a <= 1.0):
            raise DomainError(f"theta_a must lie in (0, 1], got {self.theta_a!r}")


def mean_abs_distance(obj, plane):
    return float(np.mean(np.abs(plane.signed_distance(obj.outline))))


def alignment(obj, plane):
    return float(abs(plane.normal @ obj.normal))


def satisfies_constraints(obj, plane, theta_d=THETA_D, theta_a=THETA_A):
    """Distance and alignment tests for one candidate."""
    return mean_abs_distance(obj, plane) <= theta_d and alignment(obj, plane) >= theta_a


def filter_support_planes(q):
    return [
        p for p in q.candidates if satisfies_constraints(q.object_bottom, p, q.theta_d, q.theta_a)
    ]


def calc_support_plane(q):
    """Filtered candidate with the largest contact ratio.

    Ties go to the smaller absolute mean signed distance, then to the larger
    support area.
    """
    kept = filter_support_planes(q)
    if not kept:
        raise NoSupportError("no candidate plane satisfies the distance and alignment constraints")
    obj = q.object_bottom

    def key(p):
        ratio = round(contact_ratio(obj, p), 12)
        dist = abs(float(np.mean(p.signed_distance(obj.outline))))
        return (-ratio, round(dist, 12), -p.area)

    return min(kept, key=key)


def support_of(scene, link, theta_d=THETA_D, theta_a=THETA_A, min_abs_nz=MIN_ABS_NZ):
    """Supporting plane of ``link`` among the other links' near-horizontal faces."""
    bottom = object_bottom(scene, link)
    cands = extract_planes(scene, min_abs_nz=min_abs_nz, exclude_links=(link,))
    if not cands:
        raise NoSupportError(f"scene offers no candidate planes for {link!r}")
    return calc_support_plane(SupportQuery(bottom, cands, theta_d, theta_a))


def support_link_of(scene, link, **kw):
    return support_of(scene, link, **kw).link


class SupportPlaneSelector(BaseEstimator):
    """Estimator wrapper: ``fit`` extracts candidate planes from a scene,
    ``predict`` maps object bottoms (planes or link names) to their supports.
    """

    def __init__(self, theta_d=THETA_D, theta_a=THETA_A, min_abs_nz=MIN_ABS_NZ):
        self.theta_d = theta_d
        self.theta_a = theta_a
        self.min_abs_nz = min_abs_nz

    def fit(self, scene, y=None):
        self.scene_ = scene
        self.planes_ = extract_planes(scene, min_abs_nz=self.min_abs_nz)
        return self

    def _bottom(self, item):
        if isinstance(item, SurfacePlane):
            return item, ()
        return object_bottom(self.scene_, item), (item,)

    def predict(self, objects):
        check_is_fitted(self, "planes_")
        out = []
        for item in objects:
            bottom, own = self._bottom(item)
            cands = [p for p in self.planes_ if p.link not in own]
            if not cands:
                raise NoSupportError("no candidate planes")
            out.append(calc_support_plane(SupportQuery(bottom, cands, self.theta_d, self.theta_a)))
        return out

    def score(self, objects, y=None):
        """Mean contact ratio of the predicted supports."""
        preds = self.predict(objects)
        return float(np.mean([contact_ratio(self._bottom(o)[0], p) for o, p in zip(objects, preds)]))
