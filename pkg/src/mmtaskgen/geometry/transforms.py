"""Rigid transforms and rotation helpers.

Quaternions are stored scalar-first ``(w, x, y, z)``.
"""
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from ..errors import DomainError

QUAT_TOL = 1e-9


def _as_quat(q):
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.shape != (4,) or not np.all(np.isfinite(q)):
        raise DomainError(f"quaternion must be 4 finite numbers, got {q!r}")
    norm = np.linalg.norm(q)
    # near-unit input (e.g. from JSON round-off) is renormalised; anything else is a caller bug
    if abs(norm - 1.0) > 1e-6:
        raise DomainError(f"quaternion norm {norm!r} is not 1")
    if abs(norm - 1.0) > QUAT_TOL:
        q = q / norm
    if q[0] < 0:
        q = -q
    return q


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """SE(3) element: ``x_world = R @ x_local + t``."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", _as_quat(self.rotation))
        t = np.asarray(self.translation, dtype=float).reshape(-1)
        if t.shape != (3,) or not np.all(np.isfinite(t)):
            raise DomainError(f"translation must be 3 finite numbers, got {t!r}")
        object.__setattr__(self, "translation", t)
        self.rotation.setflags(write=False)
        self.translation.setflags(write=False)

    @classmethod
    def identity(cls):
        return cls(np.array([1.0, 0.0, 0.0, 0.0]), np.zeros(3))

    @classmethod
    def from_matrix(cls, m):
        m = np.asarray(m, dtype=float)
        quat = Rotation.from_matrix(m[:3, :3]).as_quat(scalar_first=True)
        return cls(quat, m[:3, 3])

    @classmethod
    def from_rotation_matrix(cls, rot, translation=(0.0, 0.0, 0.0)):
        quat = Rotation.from_matrix(np.asarray(rot, dtype=float)).as_quat(scalar_first=True)
        return cls(quat, translation)

    @classmethod
    def from_rpy(cls, xyz=(0.0, 0.0, 0.0), rpy=(0.0, 0.0, 0.0)):
        # URDF convention: fixed-axis roll about x, then pitch about y, then yaw about z
        quat = Rotation.from_euler("xyz", rpy).as_quat(scalar_first=True)
        return cls(quat, xyz)

    @classmethod
    def from_axis_angle(cls, axis, angle, translation=(0.0, 0.0, 0.0)):
        axis = np.asarray(axis, dtype=float)
        axis = axis / np.linalg.norm(axis)
        quat = Rotation.from_rotvec(axis * angle).as_quat(scalar_first=True)
        return cls(quat, translation)

    @property
    def rotation_matrix(self):
        return quat_to_matrix(self.rotation)

    def as_matrix(self):
        m = np.eye(4)
        m[:3, :3] = self.rotation_matrix
        m[:3, 3] = self.translation
        return m

    def rpy(self):
        return Rotation.from_quat(self.rotation, scalar_first=True).as_euler("xyz")

    def inverse(self):
        rot_t = self.rotation_matrix.T
        return RigidTransform.from_rotation_matrix(rot_t, -rot_t @ self.translation)

    def __matmul__(self, other):
        if isinstance(other, RigidTransform):
            return RigidTransform.from_matrix(self.as_matrix() @ other.as_matrix())
        return NotImplemented

    def apply(self, points):
        pts = np.asarray(points, dtype=float)
        return pts @ self.rotation_matrix.T + self.translation

    def __eq__(self, other):
        if not isinstance(other, RigidTransform):
            return NotImplemented
        return np.array_equal(self.rotation, other.rotation) and np.array_equal(
            self.translation, other.translation
        )

    __hash__ = None

    def allclose(self, other, atol=1e-9):
        return bool(
            np.allclose(self.translation, other.translation, atol=atol)
            and rotation_angle(self.rotation_matrix, other.rotation_matrix) <= atol
        )

    def to_list(self):
        return {"rotation": self.rotation.tolist(), "translation": self.translation.tolist()}

    @classmethod
    def from_list(cls, data):
        return cls(data["rotation"], data["translation"])

    def __repr__(self):
        return f"RigidTransform(rotation={self.rotation.tolist()}, translation={self.translation.tolist()})"


def quat_to_matrix(q):
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def skew(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def axis_rotation(axis, angle):
    """Rodrigues rotation matrix."""
    k = skew(axis)
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def rotation_log(rot):
    """Rotation vector of a 3x3 rotation matrix."""
    return Rotation.from_matrix(rot).as_rotvec()


def rotation_angle(r_a, r_b):
    """Geodesic angle between two rotation matrices (atan2 form, accurate near 0)."""
    r = np.asarray(r_a).T @ np.asarray(r_b)
    s = 0.5 * np.linalg.norm([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    c = (np.trace(r) - 1.0) / 2.0
    return float(np.arctan2(s, c))


def quat_angle(q_a, q_b):
    d = abs(float(np.dot(q_a, q_b)))
    return 2.0 * float(np.arccos(min(1.0, d)))


def align_vectors(a, b):
    """Minimal rotation matrix taking unit vector ``a`` onto unit vector ``b``."""
    a = np.asarray(a, float) / np.linalg.norm(a)
    b = np.asarray(b, float) / np.linalg.norm(b)
    v = np.cross(a, b)
    c = float(np.dot(a, b))
    s = np.linalg.norm(v)
    if s < 1e-12:
        if c > 0:
            return np.eye(3)
        # antiparallel: half turn about any axis orthogonal to a
        perp = np.cross(a, [1.0, 0.0, 0.0])
        if np.linalg.norm(perp) < 1e-6:
            perp = np.cross(a, [0.0, 1.0, 0.0])
        return axis_rotation(perp / np.linalg.norm(perp), np.pi)
    return axis_rotation(v / s, np.arctan2(s, c))


def planar_pose_matrix(x, y, theta):
    c, s = np.cos(theta), np.sin(theta)
    m = np.eye(4)
    m[:2, :2] = [[c, -s], [s, c]]
    m[0, 3] = x
    m[1, 3] = y
    return m
