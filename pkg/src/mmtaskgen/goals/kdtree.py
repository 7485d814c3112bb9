"""Neighbor index over end-effector poses with permanent deletion.

Positions live in a ``scipy.spatial.cKDTree``; deleted entries are masked
out. Because the pose metric ``|dt| + lam * angle`` never undercuts the
positional distance, every pose-metric query can be answered by a
positional ball (or growing k-nearest) query followed by exact filtering.
"""
import numpy as np
from scipy.spatial import cKDTree

from ..errors import DomainError

LAMBDA = 0.1
NEIGHBOR_RADIUS = 0.10


def _angles(quats, q):
    d = np.abs(quats @ q)
    return 2.0 * np.arccos(np.clip(d, 0.0, 1.0))


def pose_distance(a, b, lam=LAMBDA):
    """``|t_a - t_b| + lam * geodesic_angle(R_a, R_b)`` for RigidTransforms."""
    dt = float(np.linalg.norm(a.translation - b.translation))
    return dt + lam * float(_angles(a.rotation[None], b.rotation)[0])


class PoseIndex:
    def __init__(self, poses, lam=LAMBDA):
        if lam < 0:
            raise DomainError("lam must be non-negative")
        self.lam = float(lam)
        self.t = np.array([p.translation for p in poses], dtype=float).reshape(-1, 3)
        self.q = np.array([p.rotation for p in poses], dtype=float).reshape(-1, 4)
        self.alive = np.ones(len(self.t), dtype=bool)
        self.tree = cKDTree(self.t) if len(self.t) else None

    def __len__(self):
        return int(self.alive.sum())

    def remove(self, i):
        if not 0 <= i < len(self.alive):
            raise DomainError(f"unknown index {i}")
        self.alive[i] = False

    def distances(self, pose, idx):
        idx = np.asarray(idx, dtype=int)
        dt = np.linalg.norm(self.t[idx] - pose.translation, axis=1)
        return dt + self.lam * _angles(self.q[idx], pose.rotation)

    def query_radius(self, pose, r):
        """Sorted ids of live entries within pose distance ``r``."""
        if self.tree is None:
            return np.zeros(0, dtype=int)
        idx = np.array(sorted(self.tree.query_ball_point(pose.translation, r)), dtype=int)
        if not len(idx):
            return idx
        idx = idx[self.alive[idx]]
        return idx[self.distances(pose, idx) <= r]

    def nearest(self, pose):
        """``(id, distance)`` of the closest live entry, or ``(-1, inf)``."""
        n_alive = len(self)
        if n_alive == 0:
            return -1, np.inf
        k = min(8, len(self.t))
        while True:
            dpos, idx = self.tree.query(pose.translation, k=k)
            dpos, idx = np.atleast_1d(dpos), np.atleast_1d(idx)
            live = self.alive[idx]
            if np.any(live):
                cand = idx[live]
                d = self.distances(pose, cand)
                best = int(np.argmin(d))
                # anything not yet seen is at least dpos[-1] away in position alone
                if d[best] < dpos[-1] or k == len(self.t):
                    order = np.lexsort((cand, d))
                    return int(cand[order[0]]), float(d[order[0]])
            if k == len(self.t):
                return -1, np.inf
            k = min(2 * k, len(self.t))

    def linear_radius(self, pose, r):
        idx = np.nonzero(self.alive)[0]
        return idx[self.distances(pose, idx) <= r]

    def linear_nearest(self, pose):
        idx = np.nonzero(self.alive)[0]
        if not len(idx):
            return -1, np.inf
        d = self.distances(pose, idx)
        order = np.lexsort((idx, d))
        return int(idx[order[0]]), float(d[order[0]])
