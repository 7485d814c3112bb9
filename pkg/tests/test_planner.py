import numpy as np
import pytest

from conftest import DATA, READY
from mmtaskgen.errors import DomainError
from mmtaskgen.geometry import RigidTransform
from mmtaskgen.planner import (
    ExactChecker,
    ExactField,
    GoalPose,
    SphereModel,
    TrajOptProblem,
    assemble_vkc,
    solve_ik,
    solve_rrt,
    solve_trajectory,
)
from mmtaskgen.planner.collision import attached_protrusion
from mmtaskgen.planner.rrt import joint_levers, resample
from mmtaskgen.scene_io import load_scene


def start_q(x=0.0, y=0.0, th=0.0):
    return np.concatenate([[x, y, th], READY])


def test_batch_fk_matches_single(chain):
    rng = np.random.default_rng(0)
    qs = rng.uniform(np.maximum(chain.lower, -2), np.minimum(chain.upper, 2), size=(16, chain.dof))
    batch = chain.link_poses(qs)
    for k in range(16):
        np.testing.assert_allclose(batch[k], chain.link_poses(qs[k])[0], atol=1e-14)


def test_config_size_checked(chain):
    with pytest.raises(DomainError):
        chain.ee_pose(np.zeros(chain.dof - 1))


def test_attached_object_moves_with_hand(room, robot):
    grasp = RigidTransform.from_rpy((0.0, 0.0, 0.12), (np.pi, 0.0, 0.0))
    chain = assemble_vkc(robot, (room.link("cup"), grasp))
    assert chain.dof == 10 and chain.has_attached
    q = start_q()
    poses = chain.link_poses(q)[0]
    obj = poses[chain.index[chain.attached_name]]
    np.testing.assert_allclose(obj, chain.ee_pose(q) @ np.linalg.inv(grasp.as_matrix()), atol=1e-12)
    # the end spheres of the cylinder's proxies bulge below its flat base
    assert 0.0 < attached_protrusion(chain) < 0.03


def test_ik_reaches_fk_target(chain):
    rng = np.random.default_rng(1)
    for _ in range(10):
        goal = start_q(*rng.uniform(-0.5, 0.5, 3))
        goal[3:] += rng.uniform(-0.5, 0.5, 7)
        goal = chain.clamp(goal)
        res = solve_ik(chain, chain.ee_pose(goal), start_q())
        assert res.success and res.pos_error <= 1e-3 and res.rot_error <= 1e-2


def test_trajopt_keeps_limits_and_endpoints(chain):
    goal = chain.clamp(start_q(0.8, 0.3, 1.0) + np.r_[0, 0, 0, 0.5, -0.4, 0.3, 0.2, 0.1, 0.3, 0.4])
    tr = solve_trajectory(TrajOptProblem(chain, start_q(), GoalPose(chain.ee_pose(goal)), seed=3))
    w = tr.waypoints
    assert w.shape == (30, chain.dof) and tr.converged
    np.testing.assert_array_equal(w[0], start_q())
    assert np.all(w >= chain.lower) and np.all(w <= chain.upper)
    pos_err, rot_err = tr.final_ee_error
    assert pos_err <= 1e-3 and rot_err <= 1e-2


def test_trajopt_config_goal_is_exact(chain):
    goal = start_q(0.5, -0.2, 0.4)
    tr = solve_trajectory(TrajOptProblem(chain, start_q(), goal))
    np.testing.assert_allclose(tr.waypoints[-1], goal, atol=1e-9)


def test_problem_validation(chain):
    with pytest.raises(DomainError):
        TrajOptProblem(chain, np.zeros(3), start_q())
    bad = start_q()
    bad[4] = chain.upper[4] + 1.0
    with pytest.raises(DomainError, match="limits"):
        TrajOptProblem(chain, bad, start_q())
    with pytest.raises(DomainError):
        TrajOptProblem(chain, start_q(), start_q(), T=1)
    with pytest.raises(DomainError):
        GoalPose(np.eye(3))


def test_sphere_model_is_conservative(chain, room):
    field = ExactField.from_scene(room, exclude_links={"floor"})
    model = SphereModel(chain, field)
    checker = ExactChecker(chain, room, exclude_links={"floor"})
    rng = np.random.default_rng(4)
    for _ in range(30):
        q = chain.clamp(start_q(*rng.uniform([0.0, -0.8, -np.pi], [0.8, 0.8, np.pi])) +
                        np.r_[0, 0, 0, rng.uniform(-1, 1, 7)])
        env, _ = model.min_clearance(q)
        if env[0] > 0:
            assert checker.env_distance(q)[0] > 0


def test_resample_keeps_vertices():
    lever = np.ones(2)
    path = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 3.0], [1.5, 3.0]])
    out = resample(path, 30, lever)
    assert len(out) == 30
    for v in path:
        assert np.any(np.all(np.isclose(out, v, atol=1e-15), axis=1))
    # every step lies on one segment: no step mixes both axes
    steps = np.diff(out, axis=0)
    assert np.all(np.min(np.abs(steps), axis=1) <= 1e-12)


def test_rrt_around_obstacle(chain):
    scene = load_scene(DATA / "obstacle_table.urdf")
    field = ExactField.from_scene(scene, exclude_links={"floor"})
    checker = ExactChecker(chain, scene, exclude_links={"floor"})
    p = TrajOptProblem(chain, start_q(-0.3, 0.0), start_q(2.3, 0.0), field=field)
    tr = solve_rrt(p, seed=0)
    assert tr.converged and tr.solver == "rrt" and np.isfinite(tr.cost)
    assert all(checker.env_distance(q)[0] >= 0 for q in tr.waypoints)
    again = solve_rrt(p, seed=0)
    np.testing.assert_array_equal(tr.waypoints, again.waypoints)


def test_levers_scale_revolute_joints(chain):
    lever = joint_levers(chain)
    assert lever[0] == lever[1] == 1.0
    assert np.all(lever[2:] > 0)
