"""Fixed-horizon whole-body trajectory optimization.

Penalized Gauss-Newton with a trust region. The objective is joint travel
plus acceleration smoothness; collision clearances and the end-effector
goal enter as squared hinge / residual penalties whose weight grows by 10x
until they are satisfied. Joint limits are enforced by clamping every
iterate, so they hold exactly at every waypoint.
"""
import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from ..errors import DomainError, NoSeedError
from .collision import SphereModel
from .ik import ROT_WEIGHT, bounded_step, free_base_seeds, pose_residual, solve_ik

T_DEFAULT = 30
WEIGHTS = {"travel": 1.0, "smooth": 1.0, "collision": 50.0}
BASE_SCALE = 0.5
SAFETY_MARGIN = 0.02
TRUST_INIT = 0.1
TRUST_MAX = 1.0
TRUST_MIN = 1e-5
MAX_ITER = 200
GOAL_WEIGHT = 1000.0
PENALTY_GROWTH = 10.0
PENALTY_MAX = 1e6
CLEARANCE_TOL = 1e-4
IMPROVE_TOL = 1e-4
# the hinge aims this far beyond the margin so small residual violations
# of the penalty still leave the margin itself satisfied
MARGIN_BUFFER = 0.003


@dataclass
class GoalPose:
    """End-effector target for the final waypoint with acceptance tolerances."""

    target: np.ndarray
    pos_tol: float = 1e-3
    rot_tol: float = 1e-2

    def __post_init__(self):
        self.target = np.asarray(self.target, dtype=float)
        if self.target.shape != (4, 4):
            raise DomainError("goal target must be a 4x4 transform")


@dataclass
class TrajOptProblem:
    chain: object
    start: np.ndarray
    goal: object  # GoalPose or a configuration vector
    field: object = None  # SdfGrid / ExactField for the robot spheres
    object_field: object = None  # field for the attached object's spheres
    link_fields: dict = None  # per-link field overrides
    T: int = T_DEFAULT
    weights: dict = dc_field(default_factory=lambda: dict(WEIGHTS))
    safety_margin: float = SAFETY_MARGIN
    base_scale: float = BASE_SCALE
    trust_init: float = TRUST_INIT
    max_iter: int = MAX_ITER
    goal_seed: np.ndarray = None  # configuration reaching the goal pose, if known
    ik_restarts: int = 8
    seed: int = 0
    init: np.ndarray = None  # optional T x dof initial trajectory
    relax_ends: bool = False  # let the sampling planner keep endpoint clearances

    def __post_init__(self):
        self.start = np.asarray(self.start, dtype=float)
        chain = self.chain
        if self.start.shape != (chain.dof,):
            raise DomainError(f"start must have {chain.dof} entries")
        if np.any(self.start < chain.lower - 1e-12) or np.any(self.start > chain.upper + 1e-12):
            raise DomainError("start configuration violates joint limits")
        if int(self.T) < 2:
            raise DomainError("T must be at least 2")
        for k in ("travel", "smooth", "collision"):
            if not self.weights.get(k, 0) > 0:
                raise DomainError(f"weight {k!r} must be positive")
        if not isinstance(self.goal, GoalPose):
            g = np.asarray(self.goal, dtype=float)
            if g.shape != (chain.dof,):
                raise DomainError(f"goal configuration must have {chain.dof} entries")
            self.goal = g

    @property
    def goal_is_pose(self):
        return isinstance(self.goal, GoalPose)

    def sphere_model(self):
        if self.field is None:
            return None
        return SphereModel(self.chain, self.field, self.object_field, margin=self.safety_margin,
                           link_fields=self.link_fields)


@dataclass
class Trajectory:
    waypoints: np.ndarray
    solve_time: float = 0.0
    converged: bool = False
    final_ee_error: tuple = (np.inf, np.inf)
    iterations: int = 0
    cost: float = np.inf
    solver: str = "trajopt"
    history: list = dc_field(default_factory=list, repr=False)

    def __post_init__(self):
        self.waypoints = np.asarray(self.waypoints, dtype=float)
        if self.waypoints.ndim != 2 or not np.all(np.isfinite(self.waypoints)):
            raise DomainError("waypoints must be a finite T x DoF matrix")

    @property
    def T(self):
        return self.waypoints.shape[0]

    def to_dict(self):
        return {
            "waypoints": self.waypoints.tolist(),
            "solve_time": float(self.solve_time),
            "converged": bool(self.converged),
            "final_ee_error": [float(v) for v in self.final_ee_error],
            "iterations": int(self.iterations),
            "cost": float(self.cost),
            "solver": self.solver,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.array(d["waypoints"], dtype=float), d["solve_time"], d["converged"],
            tuple(d["final_ee_error"]), d["iterations"], d["cost"], d["solver"],
        )

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return self.to_dict() == other.to_dict()


# ---------------------------------------------------------------------------


def _difference_ops(T):
    d1 = np.diff(np.eye(T), axis=0)
    d2 = np.diff(np.eye(T), n=2, axis=0)
    return d1, d2


def quadratic_cost(Q, weights, base_scale):
    """Travel and smoothness terms of the objective for a full ``T x dof`` matrix."""
    scale = np.ones(Q.shape[1])
    scale[:3] = base_scale
    dq = np.diff(Q, axis=0)
    acc = np.diff(Q, n=2, axis=0)
    travel = weights["travel"] * float(np.sum(scale * dq * dq))
    smooth = weights["smooth"] * float(np.sum(acc * acc))
    return travel, smooth


class _Solver:
    def __init__(self, p, model, q_goal):
        self.p = p
        self.chain = p.chain
        self.model = model
        self.T = int(p.T)
        self.dof = self.chain.dof
        self.free = np.arange(1, self.T) if p.goal_is_pose else np.arange(1, self.T - 1)
        scale = np.ones(self.dof)
        scale[:3] = p.base_scale
        d1, d2 = _difference_ops(self.T)
        a_travel = d1.T @ d1
        a_smooth = d2.T @ d2
        w = p.weights
        # quadratic Hessian over the full (T * dof) vector, time-major
        self.A_full = np.kron(w["travel"] * a_travel, np.diag(scale)) + np.kron(w["smooth"] * a_smooth, np.eye(self.dof))
        idx = (self.free[:, None] * self.dof + np.arange(self.dof)).ravel()
        self.var_idx = idx
        self.A = self.A_full[np.ix_(idx, idx)]
        self.q_goal = q_goal
        self.lower = np.tile(self.chain.lower, len(self.free))
        self.upper = np.tile(self.chain.upper, len(self.free))
        self.env_margin = self.env_target = None
        self.self_margin = self.self_target = None
        if model is not None:
            ends = np.stack([p.start, q_goal])
            centers = self.chain.sphere_centers(self.chain.link_poses(ends))
            env = model.env_clearance(centers)
            # never ask for more clearance than the fixed endpoints already have
            end_env = env.min(axis=0)
            self.env_margin = np.minimum(model.margin, end_env)
            self.env_target = np.minimum(model.margin + MARGIN_BUFFER, end_env)
            slf = model.self_clearance(centers)
            end_self = slf.min(axis=0) if slf.shape[1] else slf[0]
            self.self_margin = np.minimum(model.self_margin, end_self)
            self.self_target = np.minimum(model.self_margin + MARGIN_BUFFER, end_self)

    # -- evaluation -----------------------------------------------------
    def unpack(self, x):
        Q = np.empty((self.T, self.dof))
        Q[0] = self.p.start
        if not self.p.goal_is_pose:
            Q[-1] = self.q_goal
        Q[self.free] = x.reshape(len(self.free), self.dof)
        return Q

    def terms(self, Q, mu, jacobians=False):
        """Nonlinear residuals (and per-waypoint Jacobian rows) at ``Q``."""
        chain, model = self.chain, self.model
        wc = np.sqrt(self.p.weights["collision"] * mu)
        wg = np.sqrt(GOAL_WEIGHT * mu)
        qf = Q[self.free]
        if jacobians:
            poses, frames = chain.link_poses(qf, with_joint_frames=True)
        else:
            poses, frames = chain.link_poses(qf), None
        res = []
        blocks = []  # (waypoint slot, rows (k, dof), residuals (k,))
        info = {"env_violation": 0.0, "self_violation": 0.0}
        if model is not None:
            centers = chain.sphere_centers(poses)
            if jacobians:
                clear, grad = model.env_clearance(centers, gradient=True)
            else:
                clear = model.env_clearance(centers)
            viol = np.minimum(0.0, clear - self.env_target)
            info["env_violation"] = float(np.max(self.env_margin - clear, initial=0.0))
            res.append(wc * viol.ravel())
            if model.pairs.shape[0]:
                pa, pb = model.pairs[:, 0], model.pairs[:, 1]
                diff = centers[:, pa] - centers[:, pb]
                dist = np.linalg.norm(diff, axis=2)
                sclear = dist - model.radii[pa] - model.radii[pb]
                sviol = np.minimum(0.0, sclear - self.self_target)
                info["self_violation"] = float(np.max(self.self_margin - sclear, initial=0.0))
                res.append(wc * sviol.ravel())
            if jacobians:
                for t in range(len(self.free)):
                    act = np.nonzero(viol[t] < 0)[0]
                    if len(act):
                        jp = chain.point_jacobians(poses[t:t + 1], frames[t:t + 1], model.link_idx[act], centers[t:t + 1, act])[0]
                        rows = wc * np.einsum("sk,skd->sd", grad[t, act], jp)
                        blocks.append((t, rows, wc * viol[t, act]))
                    if model.pairs.shape[0]:
                        act = np.nonzero(sviol[t] < 0)[0]
                        if len(act):
                            u = diff[t, act] / np.maximum(dist[t, act, None], 1e-12)
                            sa, sb = pa[act], pb[act]
                            ja = chain.point_jacobians(poses[t:t + 1], frames[t:t + 1], model.link_idx[sa], centers[t:t + 1, sa])[0]
                            jb = chain.point_jacobians(poses[t:t + 1], frames[t:t + 1], model.link_idx[sb], centers[t:t + 1, sb])[0]
                            rows = wc * np.einsum("sk,skd->sd", u, ja - jb)
                            blocks.append((t, rows, wc * sviol[t, act]))
        pos = rot = np.zeros(3)
        if self.p.goal_is_pose:
            ee = poses[-1, chain.ee_index]
            pos, rot = pose_residual(ee, self.p.goal.target)
            gres = wg * np.concatenate([pos, ROT_WEIGHT * rot])
            res.append(gres)
            if jacobians:
                jac = chain.batch_frame_jacobian(poses[-1:], frames[-1:], chain.ee_index)[0]
                rows = wg * np.vstack([jac[:3], ROT_WEIGHT * jac[3:]])
                blocks.append((len(self.free) - 1, rows, gres))
        info["pos_error"] = float(np.linalg.norm(pos))
        info["rot_error"] = float(np.linalg.norm(rot))
        r = np.concatenate(res) if res else np.zeros(0)
        return r, blocks, info

    def cost(self, x, mu):
        Q = self.unpack(x)
        travel, smooth = quadratic_cost(Q, self.p.weights, self.p.base_scale)
        r, _, info = self.terms(Q, mu)
        return travel + smooth + float(r @ r), info

    def feasible(self, info):
        ok = info["env_violation"] <= CLEARANCE_TOL and info["self_violation"] <= CLEARANCE_TOL
        if self.p.goal_is_pose:
            # aim a little inside the tolerance so metrics never sit on the edge
            ok = ok and info["pos_error"] <= 0.5 * self.p.goal.pos_tol and info["rot_error"] <= 0.5 * self.p.goal.rot_tol
        return ok

    def step(self, x, mu, radius):
        Q = self.unpack(x)
        full = Q.ravel()
        g = self.A_full[self.var_idx] @ full
        h = self.A.copy()
        _, blocks, _ = self.terms(Q, mu, jacobians=True)
        for t, rows, r in blocks:
            sl = slice(t * self.dof, (t + 1) * self.dof)
            h[sl, sl] += rows.T @ rows
            g[sl] += rows.T @ r
        delta = bounded_step(h, g, 1e-9, x, self.lower, self.upper)
        m = np.max(np.abs(delta)) if delta.size else 0.0
        if m > radius:
            delta *= radius / m
        return delta


def _goal_configuration(p, model):
    if not p.goal_is_pose:
        return p.goal
    chain = p.chain
    seeds = []
    if p.goal_seed is not None:
        seeds.append(np.asarray(p.goal_seed, dtype=float))
    seeds.append(p.start)
    rng = np.random.default_rng(p.seed)
    seeds += free_base_seeds(chain, model, p.goal.target, rng, p.ik_restarts, q_arm=p.start[3:])
    buffered = model
    if model is not None:
        # keep the goal configuration a little beyond the margin so the final
        # waypoint is not pinned between the pose and collision penalties
        buffered = model.with_margin(model.margin + MARGIN_BUFFER, model.self_margin + MARGIN_BUFFER)
    for s in seeds:
        res = solve_ik(chain, p.goal.target, s, buffered)
        if res.success:
            return res.q
    if p.goal_seed is not None:
        # a seed that already reaches the pose is trusted as is: the caller has
        # checked it, possibly with contacts this model does not know about
        pos, rot = pose_residual(chain.ee_pose(p.goal_seed), p.goal.target)
        if np.linalg.norm(pos) <= 0.5 * p.goal.pos_tol and np.linalg.norm(rot) <= 0.5 * p.goal.rot_tol:
            return chain.clamp(np.asarray(p.goal_seed, dtype=float))
    raise NoSeedError("inverse kinematics found no configuration reaching the goal pose")


def solve_trajectory(p):
    """Optimize a ``T x dof`` trajectory from ``p.start`` to ``p.goal``."""
    t0 = time.perf_counter()
    model = p.sphere_model()
    q_goal = _goal_configuration(p, model)
    s = _Solver(p, model, q_goal)
    if p.init is not None:
        Q0 = np.asarray(p.init, dtype=float)
        if Q0.shape != (int(p.T), p.chain.dof):
            raise DomainError("init must be a T x dof matrix")
        Q0 = p.chain.clamp(Q0)
        Q0[-1] = q_goal
    else:
        Q0 = np.linspace(p.start, q_goal, int(p.T))
    x = Q0[s.free].ravel()
    mu = 1.0
    radius = p.trust_init
    cost, info = s.cost(x, mu)
    history = [(0, mu, cost)]
    it = 0
    converged = False
    while it < p.max_iter:
        # inner trust-region loop at a fixed penalty weight
        stalled = False
        while it < p.max_iter:
            it += 1
            delta = s.step(x, mu, radius)
            if not np.any(delta):
                stalled = True
                break
            x_new = np.clip(x + delta, s.lower, s.upper)
            cost_new, info_new = s.cost(x_new, mu)
            if cost_new < cost:
                improvement = cost - cost_new
                x, cost, info = x_new, cost_new, info_new
                history.append((it, mu, cost))
                radius = min(radius * 2.0, TRUST_MAX)
                if improvement <= IMPROVE_TOL * max(cost, 1e-12):
                    stalled = True
                    break
            else:
                radius *= 0.5
                if radius < TRUST_MIN:
                    stalled = True
                    break
        if s.feasible(info):
            converged = True
            break
        if mu >= PENALTY_MAX or not stalled:
            break
        mu *= PENALTY_GROWTH
        radius = max(radius, p.trust_init)
        cost, info = s.cost(x, mu)
        history.append((it, mu, cost))
    Q = s.unpack(x)
    ee = p.chain.ee_pose(Q[-1])
    if p.goal_is_pose:
        pos, rot = pose_residual(ee, p.goal.target)
        err = (float(np.linalg.norm(pos)), float(np.linalg.norm(rot)))
    else:
        err = (0.0, 0.0)
    travel, smooth = quadratic_cost(Q, p.weights, p.base_scale)
    return Trajectory(
        Q, time.perf_counter() - t0, bool(converged), err, it, travel + smooth, "trajopt", history,
    )
