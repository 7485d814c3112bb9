"""RRT-Connect fallback planner in the full base + arm configuration space.

Edges are collision-checked with the sphere model at a resolution measured
in "scaled joint units": each joint's motion is weighted by an upper bound on
how far it can move any collision sphere (1 for prismatic joints, the chain's
reach for revolute ones). A step of 0.02 scaled units therefore moves no
sphere more than 2 cm, and requiring 1 cm of environment clearance (2 cm
between self-collision pairs) at every checked state makes the continuous
edge collision-free.
"""
import time

import numpy as np

from ..errors import DomainError
from .trajopt import Trajectory, _goal_configuration, pose_residual, quadratic_cost

RESOLUTION = 0.02
STEP = 0.6
MAX_ITER = 4000
SHORTCUTS = 150
WORKSPACE_PAD = 1.5


def joint_levers(chain):
    """Per-joint bound on sphere displacement per unit joint motion.

    For a revolute joint the bound is the longest path from the joint origin
    through downstream link origins to a sphere surface, which no
    configuration can exceed.
    """
    idx, local, radii = chain.spheres()
    lever = np.ones(chain.dof)
    links = chain.links
    for k, lk in enumerate(links):
        if lk.dof < 0 or lk.kind != "revolute":
            continue
        best = 0.0
        for s in range(len(radii)):
            i = idx[s]
            if not chain._ancestors[i, lk.dof]:
                continue
            length = np.linalg.norm(local[s]) + radii[s]
            while i != k:
                length += np.linalg.norm(links[i].origin[:3, 3])
                i = links[i].parent
            best = max(best, length)
        lever[lk.dof] = max(best, 1e-3)
    return lever


class _Tree:
    def __init__(self, root, cap):
        self.q = np.empty((cap, len(root)))
        self.parent = np.empty(cap, dtype=int)
        self.q[0] = root
        self.parent[0] = -1
        self.n = 1

    def add(self, q, parent):
        if self.n == len(self.q):
            self.q = np.concatenate([self.q, np.empty_like(self.q)])
            self.parent = np.concatenate([self.parent, np.empty_like(self.parent)])
        self.q[self.n] = q
        self.parent[self.n] = parent
        self.n += 1
        return self.n - 1

    def nearest(self, q, lever):
        d = np.sum(np.abs(self.q[:self.n] - q) * lever, axis=1)
        return int(np.argmin(d))

    def path(self, i):
        out = []
        while i >= 0:
            out.append(self.q[i])
            i = self.parent[i]
        return out[::-1]


class _Checker:
    def __init__(self, model, lever, resolution, ends=None):
        self.model = model
        self.lever = lever
        self.resolution = resolution
        # between checked states each sphere is within resolution / 2 of one of
        # them, so a pair of spheres can close by at most the full resolution
        self.env_clearance = resolution / 2.0
        self.self_clearance = resolution
        if model is not None and ends is not None:
            # spheres the endpoints already hold closer (a resting object) keep
            # their endpoint clearance as the requirement
            centers = model.chain.sphere_centers(model.chain.link_poses(ends))
            self.env_clearance = np.minimum(self.env_clearance, model.env_clearance(centers).min(axis=0))
            slf = model.self_clearance(centers)
            if slf.shape[1]:
                self.self_clearance = np.minimum(self.self_clearance, slf.min(axis=0))

    def states(self, qs):
        if self.model is None:
            return np.ones(len(qs), dtype=bool)
        centers = self.model.chain.sphere_centers(self.model.chain.link_poses(qs))
        env = np.all(self.model.env_clearance(centers) >= self.env_clearance, axis=1)
        slf = np.all(self.model.self_clearance(centers) >= self.self_clearance, axis=1)
        return env & slf

    def edge_points(self, a, b):
        dist = float(np.sum(np.abs(b - a) * self.lever))
        n = max(int(np.ceil(dist / self.resolution)), 1)
        s = np.linspace(0.0, 1.0, n + 1)[:, None]
        return a + s * (b - a)

    def edge(self, a, b):
        return bool(np.all(self.states(self.edge_points(a, b))))

    def extend_to(self, a, b):
        """Largest collision-free prefix of the segment a -> b (None if none)."""
        pts = self.edge_points(a, b)
        ok = self.states(pts)
        if ok.all():
            return b, True
        k = int(np.argmin(ok))
        if k <= 1:
            return None, False
        return pts[k - 1], False


def _steer(a, b, lever, step):
    d = float(np.sum(np.abs(b - a) * lever))
    if d <= step:
        return b
    return a + (b - a) * (step / d)


def resample(path, T, lever):
    """``T`` points along a polyline, evenly spaced in scaled arc length.

    When the polyline has at most ``T`` vertices every vertex is kept and the
    remaining points subdivide the segments in proportion to their length,
    so consecutive waypoints always share a segment and the straight motion
    between them is one the collision checker has already passed.
    """
    path = np.asarray(path, dtype=float)
    if len(path) == 1:
        return np.repeat(path, T, axis=0)
    seg = np.sum(np.abs(np.diff(path, axis=0)) * lever, axis=1)
    if seg.sum() <= 0:
        return np.repeat(path[:1], T, axis=0)
    n_seg = len(seg)
    if n_seg > T - 1:
        s = np.concatenate([[0.0], np.cumsum(seg)])
        targets = np.linspace(0.0, s[-1], T)
        out = np.stack([np.interp(targets, s, path[:, k]) for k in range(path.shape[1])], axis=1)
        out[0], out[-1] = path[0], path[-1]
        return out
    # largest-remainder split of T - 1 steps, at least one per segment
    extra = T - 1 - n_seg
    share = seg / seg.sum() * extra
    steps = 1 + np.floor(share).astype(int)
    left = T - 1 - steps.sum()
    order = np.lexsort((np.arange(n_seg), -(share - np.floor(share))))
    steps[order[:left]] += 1
    out = [path[0]]
    for a, b, n in zip(path[:-1], path[1:], steps):
        f = np.arange(1, n + 1)[:, None] / n
        out.extend(a + f * (b - a))
    return np.array(out)


def shortcut(path, checker, rng, iters=SHORTCUTS):
    path = [np.asarray(q) for q in path]
    for _ in range(iters):
        if len(path) < 3:
            break
        i, j = sorted(rng.choice(len(path), 2, replace=False))
        if j - i < 2:
            continue
        if checker.edge(path[i], path[j]):
            path = path[:i + 1] + path[j:]
    return path


def solve_rrt(p, seed=0, time_budget=30.0, max_iter=MAX_ITER, resolution=RESOLUTION):
    """Plan with RRT-Connect, shortcut the path and resample it to ``p.T`` waypoints.

    The iteration cap keeps runs reproducible; ``time_budget`` is a safety
    net. Either running out yields ``converged=False``.
    """
    t0 = time.perf_counter()
    chain = p.chain
    model = p.sphere_model()
    rng = np.random.default_rng(seed)
    q_goal = _goal_configuration(p, model)
    lever = joint_levers(chain)
    start = p.start
    checker = _Checker(model, lever, resolution, np.stack([start, q_goal]) if p.relax_ends else None)
    T = int(p.T)

    def finish(waypoints, ok, it):
        err = (0.0, 0.0)
        if p.goal_is_pose:
            pos, rot = pose_residual(chain.ee_pose(waypoints[-1]), p.goal.target)
            err = (float(np.linalg.norm(pos)), float(np.linalg.norm(rot)))
        cost = sum(quadratic_cost(waypoints, p.weights, p.base_scale))
        return Trajectory(waypoints, time.perf_counter() - t0, ok, err, it, cost, "rrt")

    if not (checker.states(start[None])[0] and checker.states(q_goal[None])[0]):
        return finish(np.linspace(start, q_goal, T), False, 0)
    if checker.edge(start, q_goal):
        return finish(resample([start, q_goal], T, lever), True, 0)

    lo = chain.lower.copy()
    hi = chain.upper.copy()
    box_lo = np.minimum(start[:2], q_goal[:2]) - WORKSPACE_PAD
    box_hi = np.maximum(start[:2], q_goal[:2]) + WORKSPACE_PAD
    lo[:2] = np.maximum(lo[:2], box_lo)
    hi[:2] = np.minimum(hi[:2], box_hi)
    if np.any(lo > hi):
        raise DomainError("workspace box is empty")

    trees = [_Tree(start, 1024), _Tree(q_goal, 1024)]
    it = 0
    while it < max_iter and time.perf_counter() - t0 < time_budget:
        it += 1
        a, b = trees[(it + 1) % 2], trees[it % 2]
        sample = rng.uniform(lo, hi)
        # extend a toward the sample
        i = a.nearest(sample, lever)
        target = _steer(a.q[i], sample, lever, STEP)
        new, _ = checker.extend_to(a.q[i], target)
        if new is None:
            continue
        ia = a.add(new, i)
        # connect b toward the new node greedily
        j = b.nearest(new, lever)
        cur = j
        while True:
            target = _steer(b.q[cur], new, lever, STEP)
            reached, full = checker.extend_to(b.q[cur], target)
            if reached is None:
                break
            cur = b.add(reached, cur)
            if full and np.array_equal(reached, new):
                pa = a.path(ia)
                pb = b.path(cur)
                path = pa + pb[::-1][1:] if a is trees[0] else pb + pa[::-1][1:]
                path = shortcut(path, checker, rng)
                return finish(resample(path, T, lever), True, it)
            if not full:
                break
    return finish(np.linspace(start, q_goal, T), False, it)
