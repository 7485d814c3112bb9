"""Kinematic validation of trajectories.

Every rate is the percentage of waypoints showing the problem, measured with
exact primitive distances (not the planner's sphere proxies). Task success
is a geometric surrogate: the final hand pose matches the grasp for picks;
for placements the held object ends coplanar with, and fully inside, its
target support surface.
"""
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DomainError
from .geometry.polygon import points_in_polygon_2d
from .geometry.transforms import rotation_angle
from .goals.feasibility import SUPPORT_CONTACT_TOL, hand_links
from .planner.chain import assemble_vkc
from .planner.collision import ExactChecker
from .support import MIN_ABS_NZ, extract_planes, object_bottom

PICK_POS_TOL = 5e-3
PICK_ROT_TOL = 0.05
PLACE_PLANE_TOL = 2e-3
LIMIT_TOL = 1e-9


@dataclass(frozen=True)
class MetricsReport:
    success: bool
    dist: float
    joint_violation_rate: float
    env_collision_rate: float
    self_collision_rate: float
    solve_time: float

    def __post_init__(self):
        for name in ("joint_violation_rate", "env_collision_rate", "self_collision_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 100.0:
                raise DomainError(f"{name} must lie in [0, 100], got {v}")
        if not self.dist >= 0:
            raise DomainError("dist must be non-negative")

    def to_dict(self):
        return {k: (bool(v) if k == "success" else float(v)) for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d):
        return cls(bool(d["success"]), d["dist"], d["joint_violation_rate"], d["env_collision_rate"],
                   d["self_collision_rate"], d["solve_time"])


def _rate(flags):
    return 100.0 * float(np.sum(flags)) / len(flags)


def placement_ok(scene, target, support_link, object_world, tol=PLACE_PLANE_TOL):
    """Object bottom within ``tol`` of one of the support's upward faces and inside it."""
    bottom = object_bottom(scene, target, object_world)
    pts = bottom.outline
    for plane in extract_planes(scene, min_abs_nz=MIN_ABS_NZ):
        if plane.link != support_link or plane.normal[2] <= 0:
            continue
        d = pts @ plane.normal + plane.offset
        if np.max(np.abs(d)) > tol:
            continue
        if np.all(points_in_polygon_2d(plane.to_2d(pts), plane.outline_2d)):
            return True
    return False


def evaluate(traj, task, scene, robot, goal):
    """MetricsReport of ``traj`` for ``task``; ``goal`` is the accepted GoalCandidate."""
    q = np.asarray(traj.waypoints, dtype=float)
    if q.ndim != 2 or q.shape[1] != robot.dof:
        raise DomainError(f"trajectory must be T x {robot.dof}, got {q.shape}")
    target = task.target_link
    if task.action == "Pick":
        chain = assemble_vkc(robot)
        checker = ExactChecker(chain, scene, ignore={(h, target) for h in hand_links(chain)})
    else:
        chain = assemble_vkc(robot, (scene.link(target), goal.grasp))
        checker = ExactChecker(
            chain, scene, exclude_links={target},
            allowed={(chain.attached_name, task.support_link): SUPPORT_CONTACT_TOL},
        )
    lo, hi = robot.lower_limits, robot.upper_limits
    limits = np.any((q < lo - LIMIT_TOL) | (q > hi + LIMIT_TOL), axis=1)
    env = np.array([checker.env_collision(w) for w in q])
    slf = np.array([checker.self_collision(w) for w in q])
    ee = chain.ee_pose(q)
    goal_m = goal.pose.as_matrix()
    dist = float(np.min(np.linalg.norm(ee[:, :3, 3] - goal_m[:3, 3], axis=1)))
    clean = not (limits.any() or env.any() or slf.any())
    if task.action == "Pick":
        pos = float(np.linalg.norm(ee[-1, :3, 3] - goal_m[:3, 3]))
        rot = rotation_angle(ee[-1, :3, :3], goal_m[:3, :3])
        reached = pos <= PICK_POS_TOL and rot <= PICK_ROT_TOL
    else:
        obj = ee[-1] @ goal.grasp.as_matrix()
        reached = placement_ok(scene, target, task.support_link, obj)
    return MetricsReport(
        bool(clean and reached), dist, _rate(limits), _rate(env), _rate(slf), float(traj.solve_time),
    )
