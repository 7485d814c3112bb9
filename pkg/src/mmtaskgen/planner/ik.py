"""Damped least-squares inverse kinematics on the full chain."""
from dataclasses import dataclass

import numpy as np

from ..geometry.transforms import rotation_log

POS_TOL = 1e-4
ROT_TOL = 1e-3
ROT_WEIGHT = 0.5
COLLISION_WEIGHT = 10.0
REG_WEIGHT = 1e-3
CLEARANCE_TOL = 1e-4


@dataclass
class IkResult:
    q: np.ndarray
    success: bool
    pos_error: float
    rot_error: float
    iterations: int


def pose_residual(ee, target):
    """Position and world-frame orientation error of ``ee`` relative to ``target``."""
    pos = ee[:3, 3] - target[:3, 3]
    rot = rotation_log(ee[:3, :3] @ target[:3, :3].T)
    return pos, rot


def _collision_terms(chain, model, poses, frames):
    centers = chain.sphere_centers(poses)  # (1, S, 3)
    rows, res = [], []
    clear, grad = model.env_clearance(centers, gradient=True)
    active = np.nonzero(clear[0] < model.margin)[0]
    if len(active):
        jp = chain.point_jacobians(poses, frames, model.link_idx[active], centers[:, active])[0]
        res.append(clear[0, active] - model.margin)
        rows.append(np.einsum("sk,skd->sd", grad[0, active], jp))
    if len(model.pairs):
        p = model.pairs
        diff = centers[0, p[:, 0]] - centers[0, p[:, 1]]
        dist = np.linalg.norm(diff, axis=1)
        clear_s = dist - model.radii[p[:, 0]] - model.radii[p[:, 1]]
        act = np.nonzero(clear_s < model.self_margin)[0]
        if len(act):
            u = diff[act] / np.maximum(dist[act, None], 1e-12)
            sa, sb = p[act, 0], p[act, 1]
            ja = chain.point_jacobians(poses, frames, model.link_idx[sa], centers[:, sa])[0]
            jb = chain.point_jacobians(poses, frames, model.link_idx[sb], centers[:, sb])[0]
            res.append(clear_s[act] - model.self_margin)
            rows.append(np.einsum("sk,skd->sd", u, ja - jb))
    if not res:
        return np.zeros(0), np.zeros((0, chain.dof))
    return np.concatenate(res), np.concatenate(rows)


def _done(pos, rot, coll, pos_tol, rot_tol):
    if np.linalg.norm(pos) > pos_tol or np.linalg.norm(rot) > rot_tol:
        return False
    return coll is None or len(coll[0]) == 0 or coll[0].min() >= -CLEARANCE_TOL


def bounded_step(h, g, damping, q, lower, upper, tol=1e-12):
    """Damped Newton step with joints pinned at a limit (and pushing past it) frozen."""
    n = len(q)
    free = np.ones(n, dtype=bool)
    step = np.zeros(n)
    for _ in range(n):
        idx = np.nonzero(free)[0]
        sub = h[np.ix_(idx, idx)] + damping * np.eye(len(idx))
        step[:] = 0.0
        step[idx] = np.linalg.solve(sub, -g[idx])
        pinned = ((q <= lower + tol) & (step < 0)) | ((q >= upper - tol) & (step > 0))
        pinned &= free
        if not np.any(pinned):
            break
        free &= ~pinned
        if not np.any(free):
            step[:] = 0.0
            break
    return step


def solve_ik(chain, target, seed, model=None, max_iter=200, pos_tol=POS_TOL, rot_tol=ROT_TOL):
    """Levenberg-Marquardt on the end-effector pose error, optionally pushing
    sphere proxies out of collision. Joint limits are enforced by clamping.
    """
    target = np.asarray(target, dtype=float)
    q = chain.clamp(np.asarray(seed, dtype=float).copy())
    lam = 1e-2
    wc = np.sqrt(COLLISION_WEIGHT)

    def evaluate(qq):
        poses, frames = chain.link_poses(qq, with_joint_frames=True)
        pos, rot = pose_residual(poses[0, chain.ee_index], target)
        res = [pos, ROT_WEIGHT * rot]
        coll = None
        if model is not None:
            coll = _collision_terms(chain, model, poses, frames)
            res.append(wc * coll[0])
        return np.concatenate(res), pos, rot, poses, frames, coll

    r, pos, rot, poses, frames, coll = evaluate(q)
    cost = r @ r
    it = 0
    for it in range(1, max_iter + 1):
        if _done(pos, rot, coll, pos_tol, rot_tol):
            return IkResult(q, True, float(np.linalg.norm(pos)), float(np.linalg.norm(rot)), it - 1)
        jac = chain.batch_frame_jacobian(poses, frames, chain.ee_index)[0]
        jac = np.vstack([jac[:3], ROT_WEIGHT * jac[3:]])
        if coll is not None and len(coll[0]):
            jac = np.vstack([jac, wc * coll[1]])
        h = jac.T @ jac
        g = jac.T @ r
        improved = False
        for _ in range(8):
            step = bounded_step(h, g, lam + REG_WEIGHT, q, chain.lower, chain.upper)
            q_new = chain.clamp(q + step)
            r_new, pos_n, rot_n, poses_n, frames_n, coll_n = evaluate(q_new)
            cost_new = r_new @ r_new
            if cost_new < cost:
                q, r, pos, rot, poses, frames, coll, cost = q_new, r_new, pos_n, rot_n, poses_n, frames_n, coll_n, cost_new
                lam = max(lam / 3.0, 1e-7)
                improved = True
                break
            lam *= 4.0
        if not improved:
            break
    ok = _done(pos, rot, coll, pos_tol, rot_tol)
    return IkResult(q, bool(ok), float(np.linalg.norm(pos)), float(np.linalg.norm(rot)), it)


def base_seeds(chain, target, rng, count, q_arm=None, reach=(0.45, 0.85)):
    """Seed configurations with the base placed around the target, facing it."""
    p = np.asarray(target, float)[:3, 3]
    q_arm = np.zeros(chain.dof - 3) if q_arm is None else np.asarray(q_arm, float)
    out = []
    for _ in range(count):
        phi = rng.uniform(-np.pi, np.pi)
        d = rng.uniform(*reach)
        theta = phi
        x = p[0] - d * np.cos(phi)
        y = p[1] - d * np.sin(phi)
        arm = q_arm + rng.normal(0.0, 0.3, size=len(q_arm))
        out.append(chain.clamp(np.concatenate([[x, y, theta], arm])))
    return out


def free_base_seeds(chain, model, target, rng, count, q_arm=None, reach=(0.5, 1.1), tries=50):
    """Like :func:`base_seeds` but keeps only seeds whose sphere proxies are clear.

    Falls back to unchecked seeds when too few clear ones turn up.
    """
    out = []
    for _ in range(tries):
        batch = base_seeds(chain, target, rng, 32, q_arm, reach)
        batch = np.array(batch)
        free = model.is_free(batch, margin=0.0) if model is not None else np.ones(len(batch), bool)
        out.extend(batch[free])
        if len(out) >= count:
            return [np.array(q) for q in out[:count]]
    out.extend(base_seeds(chain, target, rng, count - len(out), q_arm, reach))
    return [np.array(q) for q in out]


def solve_ik_multi(chain, target, seeds, model=None, checker=None, max_iter=200):
    """First seed whose IK converges (and passes ``checker`` if given)."""
    last = None
    for s in seeds:
        res = solve_ik(chain, target, s, model, max_iter)
        if not res.success:
            last = res
            continue
        if checker is not None and not checker(res.q):
            last = IkResult(res.q, False, res.pos_error, res.rot_error, res.iterations)
            continue
        return res
    return last
