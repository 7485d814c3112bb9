"""Virtual kinematic chain: planar base, arm and an optional grasped object.

The chain is flattened into a link list in topological order so forward
kinematics and Jacobians can be evaluated for a whole batch of
configurations with a handful of numpy operations per link.
"""
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from ..geometry.shapes import sphere_proxies
from ..geometry.transforms import RigidTransform

WORLD = "world"
OBJECT_PROXY_RATIO = 0.5


@dataclass(frozen=True)
class ChainLink:
    name: str
    parent: int  # index into the chain's link list, -1 for the world
    origin: np.ndarray  # 4x4 joint origin relative to the parent link
    kind: str
    axis: np.ndarray
    dof: int  # configuration index, -1 for fixed
    geoms: tuple


class VkcChain:
    """Base joints first, then arm joints; attached object rides on ``ee_frame``."""

    def __init__(self, robot, attached=None):
        self.robot = robot
        self.ee_frame = robot.ee_frame
        self.joint_names = robot.joint_names
        self.attached_name = None
        self.grasp = None
        links = []
        index = {}

        def add(name, parent, origin, kind, axis, dof, geoms):
            index[name] = len(links)
            links.append(
                ChainLink(name, parent, np.asarray(origin, float), kind, np.asarray(axis, float), dof, tuple(geoms))
            )

        dof_of = {name: i for i, name in enumerate(self.joint_names)}
        for j in robot.base_joints:
            kind = "revolute" if j.name == "base_theta" else "prismatic"
            add(j.child, index.get(j.parent, -1), np.eye(4), kind, j.axis, dof_of[j.name], ())
        parent_joint = {j.child: j for j in robot.joints}
        children = {}
        for j in robot.joints:
            children.setdefault(j.parent, []).append(j.child)
        # the root link of the robot tree is the child of the base theta joint
        root = robot.base_joints[-1].child
        links[-1] = ChainLink(
            root, links[-1].parent, links[-1].origin, links[-1].kind, links[-1].axis, links[-1].dof,
            tuple(robot.link(root).collision_geoms),
        )
        stack = list(reversed(children.get(root, [])))
        while stack:
            name = stack.pop()
            j = parent_joint[name]
            kind = j.kind if j.movable else "fixed"
            add(name, index[j.parent], j.origin.as_matrix(), kind, j.axis, dof_of.get(j.name, -1),
                robot.link(name).collision_geoms)
            stack.extend(reversed(children.get(name, [])))
        if attached is not None:
            link, grasp = attached
            name = "attached:" + link.name
            self.attached_name = name
            self.grasp = grasp
            add(name, index[self.ee_frame], grasp.as_matrix(), "fixed", (1.0, 0.0, 0.0), -1, link.collision_geoms)
        self.links = tuple(links)
        self.index = index
        self.dof = len(self.joint_names)
        self.lower = robot.lower_limits
        self.upper = robot.upper_limits
        self.ee_index = index[self.ee_frame]
        self._ancestors = self._ancestor_mask()
        self._spheres = None

    @property
    def limits(self):
        return np.stack([self.lower, self.upper], axis=1)

    @property
    def has_attached(self):
        return self.attached_name is not None

    def _ancestor_mask(self):
        """``mask[l, k]`` is True when configuration index ``k`` moves link ``l``."""
        mask = np.zeros((len(self.links), self.dof), dtype=bool)
        for i, lk in enumerate(self.links):
            if lk.parent >= 0:
                mask[i] = mask[lk.parent]
            if lk.dof >= 0:
                mask[i, lk.dof] = True
        return mask

    def _check_q(self, q):
        q = np.asarray(q, dtype=float)
        if q.shape[-1] != self.dof:
            raise DomainError(f"configuration has {q.shape[-1]} entries, chain has {self.dof} DoF")
        return q

    def clamp(self, q):
        return np.clip(q, self.lower, self.upper)

    # ------------------------------------------------------------------
    # kinematics

    def link_poses(self, q, with_joint_frames=False):
        """World transforms ``(B, L, 4, 4)`` for a batch of configurations ``(B, dof)``.

        With ``with_joint_frames`` also returns the pre-motion joint frames,
        whose z-column-equivalent ``frame @ axis`` is the world joint axis.
        """
        q = np.atleast_2d(self._check_q(q))
        b = q.shape[0]
        poses = np.empty((b, len(self.links), 4, 4))
        frames = np.empty((b, len(self.links), 4, 4)) if with_joint_frames else None
        eye = np.broadcast_to(np.eye(4), (b, 4, 4))
        for i, lk in enumerate(self.links):
            parent = eye if lk.parent < 0 else poses[:, lk.parent]
            frame = parent @ lk.origin
            if frames is not None:
                frames[:, i] = frame
            if lk.kind == "fixed":
                poses[:, i] = frame
                continue
            motion = np.broadcast_to(np.eye(4), (b, 4, 4)).copy()
            v = q[:, lk.dof]
            if lk.kind == "revolute":
                motion[:, :3, :3] = _rodrigues(lk.axis, v)
            else:
                motion[:, :3, 3] = v[:, None] * lk.axis
            poses[:, i] = frame @ motion
        if with_joint_frames:
            return poses, frames
        return poses

    def forward_kinematics(self, q):
        """``{link name: RigidTransform}`` for one configuration."""
        q = self._check_q(q)
        if q.ndim != 1:
            raise DomainError("forward_kinematics expects a single configuration")
        poses = self.link_poses(q)[0]
        return {lk.name: RigidTransform.from_matrix(poses[i]) for i, lk in enumerate(self.links)}

    def ee_pose(self, q):
        """End-effector 4x4 transform(s)."""
        poses = self.link_poses(q)
        out = poses[:, self.ee_index]
        return out[0] if np.ndim(q) == 1 else out

    def point_jacobians(self, poses, frames, link_idx, points):
        """Linear Jacobians ``(B, P, 3, dof)`` of world points rigidly attached to links.

        ``link_idx`` (P,) names the carrying link for each of ``points`` (B, P, 3).
        """
        b, p = points.shape[:2]
        jac = np.zeros((b, p, 3, self.dof))
        for i, lk in enumerate(self.links):
            if lk.dof < 0:
                continue
            moved = self._ancestors[link_idx, lk.dof]
            if not np.any(moved):
                continue
            axis = frames[:, i, :3, :3] @ lk.axis  # (B, 3)
            col = jac[..., lk.dof]  # view (B, P, 3)
            if lk.kind == "revolute":
                r = points[:, moved] - frames[:, i, None, :3, 3]
                col[:, moved] = np.cross(axis[:, None, :], r)
            else:
                col[:, moved] = axis[:, None, :]
        return jac

    def jacobian(self, q, link=None):
        """Geometric 6 x dof Jacobian of a link frame: rows are ``[linear; angular]``."""
        q = self._check_q(q)
        if q.ndim != 1:
            raise DomainError("jacobian expects a single configuration")
        idx = self.ee_index if link is None else self.index[link]
        poses, frames = self.link_poses(q, with_joint_frames=True)
        origin = poses[0, idx, :3, 3]
        jac = np.zeros((6, self.dof))
        for i, lk in enumerate(self.links):
            if lk.dof < 0 or not self._ancestors[idx, lk.dof]:
                continue
            axis = frames[0, i, :3, :3] @ lk.axis
            if lk.kind == "revolute":
                jac[:3, lk.dof] = np.cross(axis, origin - frames[0, i, :3, 3])
                jac[3:, lk.dof] = axis
            else:
                jac[:3, lk.dof] = axis
        return jac

    def batch_frame_jacobian(self, poses, frames, idx):
        """Frame Jacobians ``(B, 6, dof)`` of link ``idx`` from precomputed poses."""
        b = poses.shape[0]
        origin = poses[:, idx, :3, 3]
        jac = np.zeros((b, 6, self.dof))
        for i, lk in enumerate(self.links):
            if lk.dof < 0 or not self._ancestors[idx, lk.dof]:
                continue
            axis = frames[:, i, :3, :3] @ lk.axis
            if lk.kind == "revolute":
                jac[:, :3, lk.dof] = np.cross(axis, origin - frames[:, i, :3, 3])
                jac[:, 3:, lk.dof] = axis
            else:
                jac[:, :3, lk.dof] = axis
        return jac

    # ------------------------------------------------------------------
    # collision bodies

    def posed_geoms(self, q, include_attached=True):
        """``(link name, geom, world4x4)`` for every primitive at configuration ``q``."""
        poses = self.link_poses(q)[0]
        out = []
        for i, lk in enumerate(self.links):
            if not include_attached and lk.name == self.attached_name:
                continue
            for g in lk.geoms:
                out.append((lk.name, g, poses[i] @ g.local_pose.as_matrix()))
        return out

    def geometric_parent(self, i):
        """Nearest ancestor link carrying collision geometry, or -1."""
        p = self.links[i].parent
        while p >= 0 and not self.links[p].geoms:
            p = self.links[p].parent
        return p

    def geometric_depth_gap(self, a, b):
        """Edges between two geometry-carrying links in the geometry-only tree."""
        def path(i):
            out = [i]
            while True:
                i = self.geometric_parent(i)
                if i < 0:
                    return out
                out.append(i)

        pa, pb = path(a), path(b)
        common = set(pa) & set(pb)
        if not common:
            return len(pa) + len(pb)
        da = next(k for k, n in enumerate(pa) if n in common)
        db = next(k for k, n in enumerate(pb) if n in common)
        return da + db

    def self_link_pairs(self, min_gap=3):
        """Link pairs checked for self-collision.

        Pairs closer than ``min_gap`` edges in the geometry tree are skipped:
        neighbours touch by construction. The attached object is also never
        paired with the hand that holds it.
        """
        geo = [i for i, lk in enumerate(self.links) if lk.geoms]
        pairs = []
        for ai, a in enumerate(geo):
            for b in geo[ai + 1:]:
                if self.geometric_depth_gap(a, b) >= min_gap:
                    pairs.append((a, b))
        return pairs

    def spheres(self):
        """Sphere proxies: ``(link_idx (S,), local centers (S,3), radii (S,))``."""
        if self._spheres is None:
            idx, centers, radii = [], [], []
            held = self.index[self.attached_name] if self.has_attached else -1
            for i, lk in enumerate(self.links):
                for g in lk.geoms:
                    # carried objects sit close to their neighbours, so wrap them tighter
                    c, r = sphere_proxies(g, OBJECT_PROXY_RATIO if i == held else 1.5)
                    idx.extend([i] * len(r))
                    centers.append(c)
                    radii.append(r)
            if idx:
                self._spheres = (np.array(idx), np.concatenate(centers), np.concatenate(radii))
            else:
                self._spheres = (np.zeros(0, int), np.zeros((0, 3)), np.zeros(0))
        return self._spheres

    def sphere_centers(self, poses):
        """World sphere centers ``(B, S, 3)`` from link poses ``(B, L, 4, 4)``."""
        idx, local, _ = self.spheres()
        sel = poses[:, idx]
        return np.einsum("bsij,sj->bsi", sel[..., :3, :3], local) + sel[..., :3, 3]


def _rodrigues(axis, angles):
    k = np.array([[0.0, -axis[2], axis[1]], [axis[2], 0.0, -axis[0]], [-axis[1], axis[0], 0.0]])
    s = np.sin(angles)[:, None, None]
    c = np.cos(angles)[:, None, None]
    return np.eye(3) + s * k + (1.0 - c) * (k @ k)


def assemble_vkc(robot, attached=None):
    """Build the chain; ``attached`` is ``(object Link, grasp RigidTransform)``.

    The grasp transform maps object-frame coordinates to the end-effector
    frame, so ``object_world = ee_world @ grasp``.
    """
    return VkcChain(robot, attached)


def forward_kinematics(chain, q):
    return chain.forward_kinematics(q)


def jacobian(chain, q, link=None):
    return chain.jacobian(q, link)
