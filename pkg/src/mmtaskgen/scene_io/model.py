"""Kinematic tree models for scenes and robots."""
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from ..errors import StructureError, ValidationError
from ..geometry.shapes import CollisionGeom
from ..geometry.transforms import RigidTransform, axis_rotation

JOINT_KINDS = ("revolute", "prismatic", "fixed", "planar-virtual")


@dataclass(frozen=True)
class Link:
    name: str
    collision_geoms: tuple = ()
    visual_geoms: tuple | None = None
    mass: float | None = None
    attributes: tuple = ()  # sorted (key, value) pairs of extension attributes

    def __post_init__(self):
        object.__setattr__(self, "collision_geoms", tuple(self.collision_geoms))
        if self.visual_geoms is not None:
            object.__setattr__(self, "visual_geoms", tuple(self.visual_geoms))
        attrs = self.attributes.items() if isinstance(self.attributes, dict) else self.attributes
        object.__setattr__(self, "attributes", tuple(sorted((str(k), str(v)) for k, v in attrs)))
        for g in self.collision_geoms:
            if not isinstance(g, CollisionGeom):
                raise ValidationError(f"link {self.name!r}: collision geometry must be a CollisionGeom")

    @property
    def attrs(self):
        return dict(self.attributes)

    @property
    def label(self):
        """Display name used in instructions."""
        return self.attrs.get("label", self.name.replace("_", " "))


@dataclass(frozen=True)
class Joint:
    name: str
    kind: str
    parent: str
    child: str
    origin: RigidTransform = field(default_factory=RigidTransform.identity)
    axis: tuple = (1.0, 0.0, 0.0)
    limits: tuple | None = None

    def __post_init__(self):
        if self.kind not in JOINT_KINDS:
            raise ValidationError(f"joint {self.name!r}: unsupported kind {self.kind!r}")
        axis = tuple(float(a) for a in self.axis)
        object.__setattr__(self, "axis", axis)
        if self.kind != "fixed":
            if len(axis) != 3 or abs(np.linalg.norm(axis) - 1.0) > 1e-9:
                raise ValidationError(f"joint {self.name!r}: axis {axis} is not a unit vector")
            if self.limits is None:
                raise ValidationError(f"joint {self.name!r}: non-fixed joint needs limits")
            lo, hi = (float(v) for v in self.limits)
            if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
                raise ValidationError(f"joint {self.name!r}: invalid limits {self.limits}")
            object.__setattr__(self, "limits", (lo, hi))
        elif self.limits is not None:
            object.__setattr__(self, "limits", None)

    @property
    def movable(self):
        return self.kind != "fixed"

    def motion(self, value):
        """4x4 transform contributed by the joint at ``value`` (origin excluded)."""
        m = np.eye(4)
        if self.kind == "revolute":
            m[:3, :3] = axis_rotation(np.array(self.axis), value)
        elif self.kind == "prismatic":
            m[:3, 3] = np.array(self.axis) * value
        return m


def _check_tree(links, joints):
    names = [lk.name for lk in links]
    if len(set(names)) != len(names):
        dup = sorted({n for n in names if names.count(n) > 1})
        raise ValidationError(f"duplicate link names: {dup}")
    jnames = [j.name for j in joints]
    if len(set(jnames)) != len(jnames):
        raise ValidationError("duplicate joint names")
    known = set(names)
    parent_of = {}
    for j in joints:
        for end in (j.parent, j.child):
            if end not in known:
                raise StructureError(f"joint {j.name!r} refers to unknown link {end!r}")
        if j.child in parent_of:
            raise StructureError(f"link {j.child!r} has more than one parent joint")
        parent_of[j.child] = j
    roots = [n for n in names if n not in parent_of]
    if len(roots) != 1:
        if not roots:
            raise StructureError("joint graph has a cycle (no root link)")
        raise StructureError(f"joint graph has {len(roots)} roots: {roots}")
    children = {}
    for j in joints:
        children.setdefault(j.parent, []).append(j.child)
    seen = set()
    stack = [roots[0]]
    while stack:
        n = stack.pop()
        if n in seen:
            raise StructureError("joint graph has a cycle")
        seen.add(n)
        stack.extend(children.get(n, []))
    if seen != known:
        raise StructureError(f"links unreachable from root (cycle): {sorted(known - seen)}")
    return roots[0]


@dataclass(frozen=True, eq=True)
class SceneModel:
    links: tuple
    joints: tuple
    root: str = ""
    room_labels: dict = field(default_factory=dict)
    name: str = "scene"
    warnings: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        object.__setattr__(self, "joints", tuple(self.joints))
        root = _check_tree(self.links, self.joints)
        if self.root and self.root != root:
            raise StructureError(f"declared root {self.root!r} but tree root is {root!r}")
        object.__setattr__(self, "root", root)
        if not self.room_labels:
            rooms = {lk.name: lk.attrs["room"] for lk in self.links if "room" in lk.attrs}
            object.__setattr__(self, "room_labels", rooms)

    __hash__ = object.__hash__

    @cached_property
    def _link_map(self):
        return {lk.name: lk for lk in self.links}

    @cached_property
    def _parent_joint(self):
        return {j.child: j for j in self.joints}

    def has_link(self, name):
        return name in self._link_map

    def link(self, name):
        try:
            return self._link_map[name]
        except KeyError:
            raise ValidationError(f"unknown link {name!r}") from None

    def parent_joint(self, name):
        return self._parent_joint.get(name)

    @cached_property
    def topological_order(self):
        children = {}
        for j in self.joints:
            children.setdefault(j.parent, []).append(j.child)
        order, stack = [], [self.root]
        while stack:
            n = stack.pop()
            order.append(n)
            stack.extend(reversed(children.get(n, [])))
        return tuple(order)

    def world_poses(self, joint_values=None):
        """4x4 world transform of every link; movable joints default to 0."""
        values = joint_values or {}
        poses = {self.root: np.eye(4)}
        for name in self.topological_order[1:]:
            j = self._parent_joint[name]
            poses[name] = poses[j.parent] @ j.origin.as_matrix() @ j.motion(values.get(j.name, 0.0))
        return poses

    @cached_property
    def _default_poses(self):
        return self.world_poses()

    def link_pose(self, name):
        self.link(name)
        return RigidTransform.from_matrix(self._default_poses[name])

    def posed_geoms(self, exclude=()):
        """``(link, index, geom, world4x4)`` for every collision primitive."""
        out = []
        for lk in self.links:
            if lk.name in exclude:
                continue
            base = self._default_poses[lk.name]
            for i, g in enumerate(lk.collision_geoms):
                out.append((lk.name, i, g, base @ g.local_pose.as_matrix()))
        return out

    def with_link_pose(self, name, pose):
        """Copy of the scene with ``name`` moved to world ``pose``."""
        j = self._parent_joint.get(name)
        if j is None:
            raise ValidationError(f"cannot move root link {name!r}")
        # every joint kind is the identity at value 0, so only the origin changes
        parent_world = self._default_poses[j.parent]
        new_origin = RigidTransform.from_matrix(np.linalg.inv(parent_world) @ pose.as_matrix())
        joints = tuple(replace(jj, origin=new_origin) if jj.name == j.name else jj for jj in self.joints)
        return replace(self, joints=joints, warnings=self.warnings)

    def without_links(self, names):
        """Copy with leaf links removed (e.g. a held object)."""
        names = set(names)
        links = tuple(lk for lk in self.links if lk.name not in names)
        joints = tuple(j for j in self.joints if j.child not in names)
        return replace(self, links=links, joints=joints, room_labels={k: v for k, v in self.room_labels.items() if k not in names})


@dataclass(frozen=True, eq=True)
class RobotModel:
    """Mobile manipulator: three planar virtual base joints plus an arm chain."""

    links: tuple
    joints: tuple
    base_joints: tuple
    arm_chain: tuple
    ee_frame: str
    gripper_aperture: tuple = (0.0, 0.085)
    root: str = ""
    name: str = "robot"
    warnings: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        object.__setattr__(self, "joints", tuple(self.joints))
        object.__setattr__(self, "base_joints", tuple(self.base_joints))
        object.__setattr__(self, "arm_chain", tuple(self.arm_chain))
        root = _check_tree(self.links, self.joints)
        object.__setattr__(self, "root", root)
        if len(self.base_joints) != 3 or any(j.kind != "planar-virtual" for j in self.base_joints):
            raise ValidationError("robot base must contribute exactly three planar-virtual joints")
        names = {lk.name for lk in self.links}
        if self.ee_frame not in names:
            raise ValidationError(f"end-effector frame {self.ee_frame!r} is not a robot link")
        path = self.path_to(self.ee_frame)
        movable = tuple(j for j in path if j.movable)
        if tuple(j.name for j in movable) != tuple(j.name for j in self.arm_chain):
            raise ValidationError("arm chain must be the movable joints from the root to the end-effector frame")
        on_path = {j.name for j in path}
        for j in self.joints:
            if j.movable and j.name not in on_path:
                raise ValidationError(f"joint {j.name!r} is movable but not on the arm chain")
        lo, hi = (float(v) for v in self.gripper_aperture)
        if lo < 0 or hi < lo:
            raise ValidationError(f"invalid gripper aperture {self.gripper_aperture}")
        object.__setattr__(self, "gripper_aperture", (lo, hi))

    __hash__ = object.__hash__

    def path_to(self, link):
        parent = {j.child: j for j in self.joints}
        path = []
        n = link
        while n in parent:
            path.append(parent[n])
            n = parent[n].parent
        return path[::-1]

    @property
    def dof(self):
        return 3 + len(self.arm_chain)

    @property
    def joint_names(self):
        return [j.name for j in self.base_joints] + [j.name for j in self.arm_chain]

    @property
    def lower_limits(self):
        return np.array([j.limits[0] for j in self.base_joints + self.arm_chain])

    @property
    def upper_limits(self):
        return np.array([j.limits[1] for j in self.base_joints + self.arm_chain])

    def link(self, name):
        for lk in self.links:
            if lk.name == name:
                return lk
        raise ValidationError(f"unknown robot link {name!r}")
