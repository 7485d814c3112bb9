"""Geometric grasp and placement candidates with synthetic energies.

Energies stand in for a learned scorer: lower is better. Grasps are
penalized for approaching from the side rather than from above and for
obstacles along the approach line; placements are penalized for sitting
close to the support polygon's boundary.
"""
from dataclasses import dataclass

import numpy as np

from .._validation import check_count, check_rng
from ..errors import DomainError, NoGraspError, NoPlacementError, SaturationError
from ..geometry.polygon import boundary_distance_2d
from ..geometry.transforms import RigidTransform
from ..sampler import sample_poses
from ..support import local_bottom

GRASP_DEPTH = 0.03
# placed objects hover this far above the support at the goal
PLACE_LIFT = 1e-3
APPROACH_CLEARANCE = 0.08
APPROACH_SAMPLES = np.linspace(0.03, 0.25, 8)
BOUNDARY_SCALE = 10.0


@dataclass(frozen=True, eq=False)
class GoalCandidate:
    """End-effector goal pose with its energy.

    ``grasp`` maps object coordinates to the end-effector frame (so
    ``object_world = ee_world @ grasp``); ``object_pose`` is the object's
    world pose at the goal for placements.
    """

    pose: RigidTransform
    energy: float
    id: int
    kind: str = "grasp"
    width: float = 0.0
    grasp: RigidTransform = None
    object_pose: RigidTransform = None

    def __post_init__(self):
        if not np.isfinite(self.energy):
            raise DomainError("candidate energy must be finite")

    def to_dict(self):
        d = {"pose": self.pose.to_list(), "energy": float(self.energy), "id": int(self.id),
             "kind": self.kind, "width": float(self.width)}
        d["grasp"] = None if self.grasp is None else self.grasp.to_list()
        d["object_pose"] = None if self.object_pose is None else self.object_pose.to_list()
        return d

    @classmethod
    def from_dict(cls, d):
        opt = lambda v: None if v is None else RigidTransform.from_list(v)  # noqa: E731
        return cls(RigidTransform.from_list(d["pose"]), d["energy"], d["id"], d["kind"], d["width"],
                   opt(d["grasp"]), opt(d["object_pose"]))

    def __eq__(self, other):
        if not isinstance(other, GoalCandidate):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None


def _frame(z, y, origin):
    """4x4 with tool z (approach) and y (finger closing axis)."""
    m = np.eye(4)
    m[:3, 0] = np.cross(y, z)
    m[:3, 1] = y
    m[:3, 2] = z
    m[:3, 3] = origin
    return m


def _primary_geom(link):
    for g in link.collision_geoms:
        if g.shape in ("box", "cylinder"):
            return g
    raise NoGraspError(f"link {link.name!r} has no box or cylinder primitive to grasp")


def _grasp_families(geom, max_width):
    """Discrete grasp families in the primitive frame: (kind, params)."""
    fams = []
    if geom.shape == "box":
        h = np.asarray(geom.size) / 2.0
        for i in range(3):
            if 2 * h[i] > max_width:
                continue
            for j in range(3):
                if j == i:
                    continue
                for s in (1.0, -1.0):
                    for f in (1.0, -1.0):
                        fams.append(("box", (i, j, s, f)))
    else:
        r, length = geom.size
        if 2 * r <= max_width:
            fams.append(("radial", ()))
            fams.append(("top", (1.0,)))
            fams.append(("top", (-1.0,)))
    return fams


def _grasp_local(geom, fam, rng):
    """Tool frame in the primitive frame and the finger span for one draw."""
    kind, par = fam
    if kind == "box":
        i, j, s, f = par
        h = np.asarray(geom.size) / 2.0
        k = 3 - i - j
        e = np.eye(3)
        depth = min(GRASP_DEPTH, h[j])
        slide = rng.uniform(-0.5, 0.5) * max(h[k] - 0.01, 0.0)
        origin = s * e[j] * (h[j] - depth) + slide * e[k]
        return _frame(-s * e[j], f * e[i], origin), 2 * h[i]
    r, length = geom.size
    if kind == "radial":
        phi = rng.uniform(-np.pi, np.pi)
        z_off = rng.uniform(-0.5, 0.5) * max(length / 2.0 - 0.02, 0.0)
        radial = np.array([np.cos(phi), np.sin(phi), 0.0])
        tangent = np.array([-np.sin(phi), np.cos(phi), 0.0])
        return _frame(-radial, tangent, np.array([0.0, 0.0, z_off])), 2 * r
    (s,) = par
    yaw = rng.uniform(-np.pi, np.pi)
    u = np.array([np.cos(yaw), np.sin(yaw), 0.0])
    axis = np.array([0.0, 0.0, s])
    depth = min(GRASP_DEPTH, length / 2.0)
    return _frame(-axis, u, axis * (length / 2.0 - depth)), 2 * r


def grasp_energy(ee, field=None, up=(0.0, 0.0, 1.0)):
    """Synthetic energy: side approaches cost up to 1, obstructed approach lines up to 2."""
    z = ee[:3, 2]
    e = 0.5 * (1.0 + float(np.dot(z, up)))
    if field is not None:
        pts = ee[:3, 3] - APPROACH_SAMPLES[:, None] * z
        d = field.query(pts)
        e += 2.0 * float(np.mean(np.clip(APPROACH_CLEARANCE - d, 0.0, APPROACH_CLEARANCE))) / APPROACH_CLEARANCE
    return e


def generate_grasp_candidates(link, k, seed, world=None, field=None, aperture=(0.0, 0.085),
                              from_below=False):
    """``k`` pinch grasps around the link's first box or cylinder.

    Boxes get face-pair pinches across every axis narrower than the gripper
    opening; cylinders get radial pinches and grasps over either cap.
    ``world`` is the link's 4x4 world pose. Approaches from below (tool z
    pointing up by more than 60 degrees) are skipped unless ``from_below``.
    ``field`` scores obstructions along the approach line.
    """
    k = check_count(k, "k")
    rng = check_rng(seed)
    world = np.eye(4) if world is None else np.asarray(world, float)
    geom = _primary_geom(link)
    fams = _grasp_families(geom, aperture[1])
    if not fams:
        raise NoGraspError(f"link {link.name!r} is wider than the gripper opening on every axis")
    g_world = world @ geom.local_pose.as_matrix()
    base = geom.local_pose.as_matrix()
    if not from_below:
        kept = []
        for fam in fams:
            tool, _ = _grasp_local(geom, fam, np.random.default_rng(0))
            if (g_world[:3, :3] @ tool[:3, 2])[2] <= 0.5:
                kept.append(fam)
        fams = kept
        if not fams:
            raise NoGraspError(f"link {link.name!r} can only be grasped from below")
    out = []
    for n in range(k):
        fam = fams[rng.integers(len(fams))]
        tool, width = _grasp_local(geom, fam, rng)
        ee = g_world @ tool
        grasp = np.linalg.inv(base @ tool)  # object frame -> ee frame
        out.append(GoalCandidate(
            RigidTransform.from_matrix(ee), grasp_energy(ee, field), n, "grasp", float(width),
            RigidTransform.from_matrix(grasp),
        ))
    return out


def pinch_points(cand):
    """World positions of the two finger contacts of a grasp candidate."""
    m = cand.pose.as_matrix()
    half = 0.5 * cand.width * m[:3, 1]
    return np.stack([m[:3, 3] - half, m[:3, 3] + half])


def generate_placement_candidates(object_link, support, k, seed, scene, grasp, obstacles=(),
                                  lift=PLACE_LIFT):
    """``k`` end-effector poses that set ``object_link`` down on ``support``.

    Object poses come from the conditional sampler (footprint inside the
    polygon, clear of the scene); each is raised by ``lift`` and turned into
    an end-effector pose through the ``grasp`` (object -> ee) transform.
    Energy is ``-BOUNDARY_SCALE`` times the footprint's distance to the
    polygon boundary, so interior placements score better.
    """
    k = check_count(k, "k")
    if k == 0:
        return []
    try:
        samples = sample_poses(object_link, scene, k, seed, support=support, obstacles=obstacles)
    except SaturationError as exc:
        raise NoPlacementError(f"{object_link!r} does not fit on the support: {exc}") from exc
    g = grasp.as_matrix() if isinstance(grasp, RigidTransform) else np.asarray(grasp, float)
    g_inv = np.linalg.inv(g)
    bottom = local_bottom(scene, object_link)
    poly = support.outline_2d
    out = []
    for n, s in enumerate(samples):
        obj = s.pose.as_matrix()
        obj[:3, 3] += lift * support.normal
        fp = bottom.outline @ obj[:3, :3].T + obj[:3, 3]
        energy = -BOUNDARY_SCALE * float(boundary_distance_2d(support.to_2d(fp), poly).min())
        out.append(GoalCandidate(
            RigidTransform.from_matrix(obj @ g_inv), energy, n, "place", 0.0,
            RigidTransform.from_matrix(g), RigidTransform.from_matrix(obj),
        ))
    return out

