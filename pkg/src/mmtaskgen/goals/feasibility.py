"""Goal feasibility: a collision-free inverse-kinematics solution exists.

The predicate is the expensive step the adaptive search economizes on. It
runs seeded multi-start IK on the whole chain (base + arm, plus the held
object for placements), with sphere-proxy collision terms, then confirms the
solution with exact primitive distances. Contacts between the hand and the
object being grasped are ignored.
"""
import numpy as np

from ..errors import DomainError
from ..planner.chain import assemble_vkc
from ..planner.collision import ExactChecker, ExactField, SphereModel
from ..planner.ik import POS_TOL, ROT_TOL, free_base_seeds, solve_ik

HAND_LINKS = ("link_7", "gripper_link", "tool_frame")
READY_ARM = np.array([0.0, 0.3, 0.0, 1.5, 0.0, 1.3, 0.0])
IK_SEEDS = 6
IK_MARGIN = 0.02
# tolerated penetration between a placed object and its support
SUPPORT_CONTACT_TOL = 2e-3


def arm_reach(chain):
    """Upper bound on the distance from the base origin to the end effector."""
    i = chain.ee_index
    total = 0.0
    while i >= 0:
        total += float(np.linalg.norm(chain.links[i].origin[:3, 3]))
        i = chain.links[i].parent
    return total


def hand_links(chain, extra=HAND_LINKS):
    """Links from the last arm joint to the end-effector frame."""
    names = set(n for n in extra if n in chain.index)
    i = chain.ee_index
    while i >= 0 and chain.links[i].dof < 0:
        names.add(chain.links[i].name)
        i = chain.links[i].parent
    if i >= 0:
        names.add(chain.links[i].name)
    return tuple(sorted(names))


class GoalFeasibility:
    """Callable feasibility predicate for grasp or placement candidates.

    For ``mode="pick"`` the chain is the bare robot and the hand may touch
    ``target``. For ``mode="place"`` the chain carries ``target`` through
    ``grasp`` and the object may rest on ``support``. Solutions are kept in
    ``solutions`` keyed by candidate id.
    """

    def __init__(self, robot, scene, target, mode="pick", grasp=None, support=None, seed=0,
                 base_center=None, base_radius=None, n_seeds=IK_SEEDS, margin=IK_MARGIN,
                 q_arm=None, floor="floor"):
        self.robot = robot
        self.scene = scene
        self.target = target
        self.mode = mode
        self.seed = int(seed)
        self.n_seeds = int(n_seeds)
        self.base_center = None if base_center is None else np.asarray(base_center, float)[:2]
        self.base_radius = base_radius
        self.q_arm = READY_ARM if q_arm is None else np.asarray(q_arm, float)
        if mode == "pick":
            self.chain = assemble_vkc(robot)
            scene_field = ExactField.from_scene(scene, exclude_links={floor})
            hand_field = ExactField.from_scene(scene, exclude_links={floor, target})
            self.hands = hand_links(self.chain)
            self.model = SphereModel(self.chain, scene_field, margin=margin,
                                     link_fields={h: hand_field for h in self.hands})
            self.checker = ExactChecker(self.chain, scene, ignore={(h, target) for h in self.hands})
        elif mode == "place":
            if grasp is None or support is None:
                raise DomainError("placement feasibility needs a grasp and a support link")
            self.chain = assemble_vkc(robot, (scene.link(target), grasp))
            field = ExactField.from_scene(scene, exclude_links={floor, target})
            obj_field = ExactField.from_scene(scene, exclude_links={floor, target, support})
            self.model = SphereModel(self.chain, field, obj_field, margin=margin)
            self.checker = ExactChecker(
                self.chain, scene, exclude_links={target},
                allowed={(self.chain.attached_name, support): SUPPORT_CONTACT_TOL},
            )
        else:
            raise DomainError(f"unknown mode {mode!r}")
        self.reach = arm_reach(self.chain)
        self.solutions = {}

    def in_workspace(self, target):
        p = target[:3, 3]
        lo, hi = self.chain.lower[:2], self.chain.upper[:2]
        if np.any(p[:2] < lo - self.reach) or np.any(p[:2] > hi + self.reach):
            return False
        if abs(p[2]) > self.reach:
            return False
        if self.base_center is not None and self.base_radius is not None:
            if np.linalg.norm(p[:2] - self.base_center) > self.base_radius + self.reach:
                return False
        return True

    def solve(self, cand):
        """Collision-free configuration reaching ``cand.pose`` or None."""
        target = cand.pose.as_matrix()
        if not self.in_workspace(target):
            return None
        rng = np.random.default_rng([self.seed, int(cand.id)])
        seeds = free_base_seeds(self.chain, self.model, target, rng, self.n_seeds, q_arm=self.q_arm)
        for s in seeds:
            if self.base_center is not None and self.base_radius is not None:
                if np.linalg.norm(s[:2] - self.base_center) > self.base_radius:
                    continue
            res = solve_ik(self.chain, target, s, self.model)
            if not res.success or res.pos_error > POS_TOL or res.rot_error > ROT_TOL:
                continue
            if self.checker.collision_free(res.q):
                return res.q
        return None

    def __call__(self, cand):
        q = self.solve(cand)
        if q is None:
            return False
        self.solutions[cand.id] = q
        return True


def check_feasibility(cand, robot, scene, base_pose=None, target=None, **kwargs):
    """True iff a collision-free IK solution reaches ``cand.pose``.

    ``base_pose`` bounds the base: ``(center_xy, radius)`` or None for the
    robot's full base limits.
    """
    center, radius = (None, None) if base_pose is None else base_pose
    target = target or ""
    pred = GoalFeasibility(robot, scene, target, base_center=center, base_radius=radius, **kwargs)
    return pred(cand)
