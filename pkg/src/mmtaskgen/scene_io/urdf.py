"""Reader and writer for the URDF subset used by scenes and robots.

Supported: ``link`` (collision/visual geometry as ``box``, ``cylinder`` or
``mesh`` with an inline ``vertices`` list, ``inertial/mass``), ``joint``
(``origin``, ``axis``, ``limit``). Extension tags on the robot document:
``mobile_base`` (planar base limits), ``arm`` (``ee_frame``) and ``gripper``
(aperture). Extra attributes on ``link`` (``room``, ``label``, ...) are kept
as annotations. Everything else is skipped with a warning.
"""
import math
import warnings
import xml.etree.ElementTree as ET

import numpy as np

from ..errors import ParseError, ValidationError
from ..geometry.shapes import CollisionGeom
from ..geometry.transforms import RigidTransform
from .model import Joint, Link, RobotModel, SceneModel

DEFAULT_BASE_LIMITS = {"x": (-5.0, 5.0), "y": (-5.0, 5.0), "theta": (-math.pi, math.pi)}
DEFAULT_APERTURE = (0.0, 0.085)
_URDF_JOINT_TYPES = {"revolute", "prismatic", "fixed", "planar-virtual"}
_ROBOT_EXTENSIONS = {"mobile_base", "arm", "gripper"}
_RAD_UNITS = {"rad", "radian", "radians", "m", "meter", "meters", "si"}


def _floats(text, n=None, what="value"):
    try:
        vals = [float(v) for v in text.split()]
    except (AttributeError, ValueError):
        raise ValidationError(f"cannot read numbers for {what}: {text!r}") from None
    if n is not None and len(vals) != n:
        raise ValidationError(f"{what} needs {n} numbers, got {len(vals)}")
    if not all(math.isfinite(v) for v in vals):
        raise ValidationError(f"{what} has non-finite numbers")
    return vals


def _check_units(elem):
    for key, value in elem.attrib.items():
        k = key.lower()
        if "deg" in k or (k in {"unit", "units", "angle_unit", "angle_units"} and value.lower() not in _RAD_UNITS):
            raise ValidationError(f"<{elem.tag}> uses degrees ({key}={value!r}); angles must be radians")
        if "deg" in value.lower().split():
            raise ValidationError(f"<{elem.tag}> value {value!r} is in degrees; angles must be radians")


def _parse_origin(elem):
    if elem is None:
        return RigidTransform.identity()
    _check_units(elem)
    xyz = _floats(elem.get("xyz", "0 0 0"), 3, "origin xyz")
    if elem.get("quat") is not None:
        return RigidTransform(_floats(elem.get("quat"), 4, "origin quat"), xyz)
    rpy = _floats(elem.get("rpy", "0 0 0"), 3, "origin rpy")
    return RigidTransform.from_rpy(xyz, rpy)


def _parse_geometry(parent, owner, warn):
    origin = _parse_origin(parent.find("origin"))
    geom = parent.find("geometry")
    if geom is None:
        warn(f"{owner}: <{parent.tag}> without <geometry> skipped")
        return None
    shapes = list(geom)
    if len(shapes) != 1:
        warn(f"{owner}: <geometry> must hold exactly one shape; skipped")
        return None
    s = shapes[0]
    _check_units(s)
    if s.tag == "box":
        return CollisionGeom.box(_floats(s.get("size"), 3, f"{owner} box size"), origin)
    if s.tag == "cylinder":
        r = _floats(s.get("radius"), 1, f"{owner} cylinder radius")[0]
        length = _floats(s.get("length"), 1, f"{owner} cylinder length")[0]
        return CollisionGeom.cylinder(r, length, origin)
    if s.tag == "mesh":
        if s.get("vertices") is None:
            warn(f"{owner}: mesh without inline convex vertices skipped ({s.get('filename')!r})")
            return None
        v = _floats(s.get("vertices"), None, f"{owner} mesh vertices")
        if len(v) % 3:
            raise ValidationError(f"{owner}: mesh vertex list length {len(v)} is not a multiple of 3")
        return CollisionGeom.convex(np.array(v).reshape(-1, 3), origin)
    warn(f"{owner}: unsupported geometry <{s.tag}> skipped")
    return None


def _parse_link(elem, warn):
    name = elem.get("name")
    if not name:
        raise ValidationError("<link> without a name")
    collision, visual, mass = [], [], None
    for child in elem:
        if child.tag == "collision":
            g = _parse_geometry(child, f"link {name!r}", warn)
            if g is not None:
                collision.append(g)
        elif child.tag == "visual":
            g = _parse_geometry(child, f"link {name!r}", warn)
            if g is not None:
                visual.append(g)
        elif child.tag == "inertial":
            m = child.find("mass")
            if m is not None:
                mass = _floats(m.get("value"), 1, f"link {name!r} mass")[0]
        else:
            warn(f"link {name!r}: unsupported tag <{child.tag}> ignored")
    attrs = {k: v for k, v in elem.attrib.items() if k != "name"}
    return Link(name, tuple(collision), tuple(visual) if visual else None, mass, attrs)


def _parse_joint(elem, warn):
    name = elem.get("name")
    kind = elem.get("type")
    if not name:
        raise ValidationError("<joint> without a name")
    if kind not in _URDF_JOINT_TYPES:
        raise ValidationError(f"joint {name!r}: unsupported type {kind!r}")
    _check_units(elem)
    parent = elem.find("parent")
    child = elem.find("child")
    if parent is None or child is None:
        raise ValidationError(f"joint {name!r}: needs <parent> and <child>")
    axis = (1.0, 0.0, 0.0)
    if elem.find("axis") is not None:
        axis = tuple(_floats(elem.find("axis").get("xyz"), 3, f"joint {name!r} axis"))
        norm = math.sqrt(sum(a * a for a in axis))
        if kind != "fixed":
            if norm <= 0:
                raise ValidationError(f"joint {name!r}: zero axis")
            if abs(norm - 1.0) > 1e-9:
                warn(f"joint {name!r}: axis normalised")
                axis = tuple(a / norm for a in axis)
    limits = None
    lim = elem.find("limit")
    if kind != "fixed":
        if lim is None or lim.get("lower") is None or lim.get("upper") is None:
            raise ValidationError(f"joint {name!r}: non-fixed joint without <limit lower upper>")
        _check_units(lim)
        limits = (
            _floats(lim.get("lower"), 1, f"joint {name!r} lower")[0],
            _floats(lim.get("upper"), 1, f"joint {name!r} upper")[0],
        )
        if kind == "revolute" and max(abs(v) for v in limits) > 4 * math.pi:
            raise ValidationError(f"joint {name!r}: limits {limits} look like degrees")
    for c in elem:
        if c.tag not in {"parent", "child", "origin", "axis", "limit"}:
            warn(f"joint {name!r}: unsupported tag <{c.tag}> ignored")
    return Joint(
        name, kind, parent.get("link"), child.get("link"), _parse_origin(elem.find("origin")), axis, limits
    )


def _read(xml_text):
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        line = exc.position[0] if getattr(exc, "position", None) else None
        raise ParseError(str(exc), line) from None
    if root.tag not in ("robot", "scene"):
        raise ParseError(f"root element must be <robot>, got <{root.tag}>")
    return root


def _parse_tree(root, allowed_extra, warn):
    links, joints = [], []
    for elem in root:
        if elem.tag == "link":
            links.append(_parse_link(elem, warn))
        elif elem.tag == "joint":
            joints.append(_parse_joint(elem, warn))
        elif elem.tag not in allowed_extra:
            warn(f"unsupported tag <{elem.tag}> ignored")
    return links, joints


def _collector():
    messages = []

    def warn(msg):
        messages.append(msg)
        warnings.warn(msg, stacklevel=4)

    return messages, warn


def parse_scene(xml_text):
    """Parse a scene description into a :class:`SceneModel`."""
    root = _read(xml_text)
    messages, warn = _collector()
    links, joints = _parse_tree(root, set(), warn)
    if not links:
        raise ValidationError("scene has no links")
    return SceneModel(links, joints, name=root.get("name", "scene"), warnings=tuple(messages))


def parse_robot(xml_text):
    """Parse a robot description into a :class:`RobotModel` with a planar base."""
    root = _read(xml_text)
    messages, warn = _collector()
    links, joints = _parse_tree(root, _ROBOT_EXTENSIONS, warn)
    arm = root.find("arm")
    if arm is None or not arm.get("ee_frame"):
        raise ValidationError("robot description has no <arm ee_frame=...> end-effector frame")
    ee = arm.get("ee_frame")
    if ee not in {lk.name for lk in links}:
        raise ValidationError(f"end-effector frame {ee!r} is not a link")
    limits = dict(DEFAULT_BASE_LIMITS)
    mb = root.find("mobile_base")
    if mb is not None:
        _check_units(mb)
        for key in ("x", "y", "theta"):
            if mb.get(key) is not None:
                limits[key] = tuple(_floats(mb.get(key), 2, f"mobile_base {key}"))
    aperture = DEFAULT_APERTURE
    gr = root.find("gripper")
    if gr is not None:
        aperture = (float(gr.get("min", 0.0)), float(gr.get("max", DEFAULT_APERTURE[1])))
    # the tree root is re-validated by RobotModel
    children = {j.child for j in joints}
    roots = [lk.name for lk in links if lk.name not in children]
    base_child = roots[0] if len(roots) == 1 else "base"
    base = (
        Joint("base_x", "planar-virtual", "world", "base_x_link", axis=(1.0, 0.0, 0.0), limits=limits["x"]),
        Joint("base_y", "planar-virtual", "base_x_link", "base_y_link", axis=(0.0, 1.0, 0.0), limits=limits["y"]),
        Joint("base_theta", "planar-virtual", "base_y_link", base_child, axis=(0.0, 0.0, 1.0), limits=limits["theta"]),
    )
    chain = _arm_chain(links, joints, ee)
    return RobotModel(
        links, joints, base, chain, ee, aperture, name=root.get("name", "robot"), warnings=tuple(messages)
    )


def _arm_chain(links, joints, ee):
    parent = {j.child: j for j in joints}
    path, n, seen = [], ee, set()
    while n in parent:
        if n in seen:
            break
        seen.add(n)
        path.append(parent[n])
        n = parent[n].parent
    return tuple(j for j in reversed(path) if j.movable)


# ---------------------------------------------------------------------------
# writer


def _fmt(values):
    return " ".join(repr(float(v)) for v in values)


def _origin_elem(parent, pose):
    if pose == RigidTransform.identity():
        return
    ET.SubElement(
        parent,
        "origin",
        xyz=_fmt(pose.translation),
        rpy=_fmt(pose.rpy()),
        quat=_fmt(pose.rotation),
    )


def _geom_elem(parent, tag, geom):
    el = ET.SubElement(parent, tag)
    _origin_elem(el, geom.local_pose)
    g = ET.SubElement(el, "geometry")
    if geom.shape == "box":
        ET.SubElement(g, "box", size=_fmt(geom.size))
    elif geom.shape == "cylinder":
        ET.SubElement(g, "cylinder", radius=repr(geom.size[0]), length=repr(geom.size[1]))
    else:
        ET.SubElement(g, "mesh", vertices=_fmt(np.ravel(geom.vertices)))


def _tree_elems(root, links, joints):
    for lk in links:
        el = ET.SubElement(root, "link", name=lk.name, **dict(lk.attributes))
        for g in lk.visual_geoms or ():
            _geom_elem(el, "visual", g)
        for g in lk.collision_geoms:
            _geom_elem(el, "collision", g)
        if lk.mass is not None:
            ET.SubElement(ET.SubElement(el, "inertial"), "mass", value=repr(lk.mass))
    for j in joints:
        el = ET.SubElement(root, "joint", name=j.name, type=j.kind)
        ET.SubElement(el, "parent", link=j.parent)
        ET.SubElement(el, "child", link=j.child)
        _origin_elem(el, j.origin)
        if j.movable:
            ET.SubElement(el, "axis", xyz=_fmt(j.axis))
            ET.SubElement(el, "limit", lower=repr(j.limits[0]), upper=repr(j.limits[1]))


def dump_scene(scene):
    root = ET.Element("robot", name=scene.name)
    _tree_elems(root, scene.links, scene.joints)
    ET.indent(root)
    return ET.tostring(root, encoding="unicode")


def dump_robot(robot):
    root = ET.Element("robot", name=robot.name)
    bx, by, bt = robot.base_joints
    ET.SubElement(root, "mobile_base", x=_fmt(bx.limits), y=_fmt(by.limits), theta=_fmt(bt.limits))
    ET.SubElement(root, "arm", ee_frame=robot.ee_frame)
    ET.SubElement(root, "gripper", min=repr(robot.gripper_aperture[0]), max=repr(robot.gripper_aperture[1]))
    _tree_elems(root, robot.links, robot.joints)
    ET.indent(root)
    return ET.tostring(root, encoding="unicode")


def load_scene(path):
    with open(path, encoding="utf-8") as fh:
        return parse_scene(fh.read())


def load_robot(path):
    with open(path, encoding="utf-8") as fh:
        return parse_robot(fh.read())
