import numpy as np
import pytest

from mmtaskgen.errors import DomainError, ExhaustedError, NoGraspError
from mmtaskgen.geometry import CollisionGeom, RigidTransform
from mmtaskgen.goals.adaptive import AdaptiveGoalSampler, adaptive_goal_search, init_session, report_failure
from mmtaskgen.goals.candidates import (
    GoalCandidate,
    generate_grasp_candidates,
    generate_placement_candidates,
    pinch_points,
)
from mmtaskgen.goals.feasibility import GoalFeasibility
from mmtaskgen.goals.kdtree import PoseIndex, pose_distance
from mmtaskgen.planner.collision import ExactField
from mmtaskgen.scene_io.model import Link
from mmtaskgen.support import extract_planes, object_bottom


def cand(i, t, energy=0.0):
    return GoalCandidate(RigidTransform(np.array([1.0, 0, 0, 0]), np.asarray(t, float)), energy, i)


def test_pose_distance_metric():
    a = RigidTransform(np.array([1.0, 0, 0, 0]), np.zeros(3))
    b = RigidTransform.from_axis_angle([0, 0, 1], np.pi / 2, [0.3, 0.4, 0.0])
    assert pose_distance(a, b) == pytest.approx(0.5 + 0.1 * np.pi / 2)
    assert pose_distance(a, a) == 0.0


def test_index_removal_and_empty():
    idx = PoseIndex([cand(i, [i * 0.01, 0, 0]).pose for i in range(5)])
    for i in range(5):
        idx.remove(i)
    assert len(idx) == 0
    assert list(idx.query_radius(cand(0, [0, 0, 0]).pose, 1.0)) == []


def test_scores_follow_energy():
    cs = init_session([cand(0, [0, 0, 0], 0.0), cand(1, [1, 0, 0], 1.0), cand(2, [2, 0, 0], 1000.0)])
    np.testing.assert_allclose(cs.scores, [1.0, np.exp(-1.0), np.exp(-1000.0)])
    assert np.all(np.isfinite(cs.probabilities()))


def test_failure_only_halves_neighbors_within_radius():
    cs = init_session([cand(0, [0, 0, 0]), cand(1, [0.09, 0, 0]), cand(2, [0.11, 0, 0])])
    report_failure(cs, 0)
    np.testing.assert_array_equal(cs.scores, [1.0, 0.5, 1.0])
    assert cs.probabilities()[0] == 0.0
    with pytest.raises(DomainError):
        report_failure(cs, 0)


def test_exhaustion_raises():
    cs = init_session([cand(i, [i, 0, 0]) for i in range(4)])
    with pytest.raises(ExhaustedError) as err:
        adaptive_goal_search(cs, lambda c: False, budget=100)
    assert err.value.checks == 4
    cs = init_session([cand(i, [i, 0, 0]) for i in range(4)])
    with pytest.raises(ExhaustedError):
        adaptive_goal_search(cs, lambda c: False, budget=2)


def test_search_is_seed_deterministic():
    cands = [cand(i, np.random.default_rng(i).uniform(0, 1, 3)) for i in range(200)]
    feasible = {150, 151}
    runs = []
    for _ in range(2):
        seen = []
        cs = init_session(cands)
        adaptive_goal_search(cs, lambda c: seen.append(c.id) or c.id in feasible, 200, seed=9)
        runs.append(seen)
    assert runs[0] == runs[1]
    assert len(set(runs[0])) == len(runs[0])


def test_estimator_wrapper():
    cands = [cand(i, [i * 0.2, 0, 0]) for i in range(10)]
    est = AdaptiveGoalSampler(budget=10, random_state=1).fit(cands)
    found = est.search(lambda c: c.id == 7)
    assert found.id == 7 and 1 <= est.n_checks_ <= 10


def test_grasps_are_antipodal_on_cup(room):
    link = room.link("cup")
    world = room.link_pose("cup").as_matrix()
    cands = generate_grasp_candidates(link, 40, 0, world=world)
    assert len(cands) == 40
    axis = world[:3, 2]
    center = world[:3, 3] + 0.05 * axis
    for c in cands:
        assert 0.0 < c.width <= 0.085
        m = c.pose.as_matrix()
        assert m[2, 2] <= 0.5  # never from below
        np.testing.assert_allclose(m[:3, :3].T @ m[:3, :3], np.eye(3), atol=1e-12)
        p = pinch_points(c)
        radial = p - center
        radial -= np.outer(radial @ axis, axis)
        if c.width == pytest.approx(0.07):
            # side pinch: both contacts on the cylinder wall, opposite each other
            np.testing.assert_allclose(np.linalg.norm(radial, axis=1), 0.035, atol=1e-9)
            np.testing.assert_allclose(radial[0], -radial[1], atol=1e-9)


def test_grasp_energy_prefers_clear_top_down(room):
    field = ExactField.from_scene(room, exclude_links={"cup"})
    cands = generate_grasp_candidates(room.link("cup"), 60, 1, world=room.link_pose("cup").as_matrix(),
                                      field=field)
    best = min(cands, key=lambda c: c.energy)
    assert best.pose.as_matrix()[2, 2] < -0.9  # approach straight down


def test_too_wide_object_has_no_grasp():
    wide = Link("slab", (CollisionGeom.box((0.5, 0.4, 0.3)),))
    with pytest.raises(NoGraspError):
        generate_grasp_candidates(wide, 5, 0)


def test_placement_candidates_rest_on_shelf(room):
    grasp = generate_grasp_candidates(room.link("cup"), 1, 0, world=room.link_pose("cup").as_matrix())[0]
    shelf = [p for p in extract_planes(room, min_abs_nz=0.5) if p.link == "shelf"][0]
    cands = generate_placement_candidates("cup", shelf, 10, 0, room, grasp.grasp)
    for c in cands:
        obj = c.pose.as_matrix() @ c.grasp.as_matrix()
        np.testing.assert_allclose(obj, c.object_pose.as_matrix(), atol=1e-9)
        bottom = object_bottom(room, "cup", obj)
        np.testing.assert_allclose(bottom.outline[:, 2], 0.55 + 1e-3, atol=1e-9)
        assert c.energy <= 0.0


def test_feasibility_predicate(room, robot):
    world = room.link_pose("cup").as_matrix()
    cands = generate_grasp_candidates(room.link("cup"), 8, 0, world=world)
    pred = GoalFeasibility(robot, room, "cup", seed=0)
    top = min(cands, key=lambda c: c.pose.as_matrix()[2, 2])
    assert pred(top)
    q = pred.solutions[top.id]
    np.testing.assert_allclose(pred.chain.ee_pose(q)[:3, 3], top.pose.translation, atol=1e-3)
    # far outside any reach
    far = GoalCandidate(RigidTransform(np.array([1.0, 0, 0, 0]), [0.0, 0.0, 3.0]), 0.0, 99)
    assert not pred(far)
