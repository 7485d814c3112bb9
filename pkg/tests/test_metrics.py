import numpy as np
import pytest

from conftest import DATA, READY
from mmtaskgen.errors import DomainError
from mmtaskgen.geometry import RigidTransform
from mmtaskgen.goals.candidates import GoalCandidate
from mmtaskgen.metrics import MetricsReport, evaluate, placement_ok
from mmtaskgen.planner.trajopt import Trajectory
from mmtaskgen.scene_io import read_demonstrations
from mmtaskgen.taskgen import TaskSpec, task_scene


def pick_task():
    return TaskSpec("Pick", "cup", [-1.0, -1.0, 0.0], READY, "table_room.urdf", "mobile_gen3.urdf")


def test_report_validation():
    with pytest.raises(DomainError):
        MetricsReport(True, 0.0, 120.0, 0.0, 0.0, 0.1)
    with pytest.raises(DomainError):
        MetricsReport(True, -1.0, 0.0, 0.0, 0.0, 0.1)
    r = MetricsReport(False, 0.25, 10.0, 0.0, 3.3333333333333335, 1.5)
    assert MetricsReport.from_dict(r.to_dict()) == r


def test_dist_is_min_over_waypoints(chain, robot, room):
    q = np.tile(np.concatenate([[-1.0, -1.0, 0.0], READY]), (30, 1))
    q[:, 0] = np.linspace(-1.0, -0.5, 30)
    target = chain.ee_pose(q[17])
    goal = GoalCandidate(RigidTransform.from_matrix(target), 0.0, 0)
    m = evaluate(Trajectory(q), pick_task(), room, robot, goal)
    assert m.dist == pytest.approx(0.0, abs=1e-12)
    assert not m.success  # the final pose is not the grasp


def test_pick_success_at_goal(chain, robot, room):
    q = np.tile(np.concatenate([[-1.0, -1.0, 0.0], READY]), (30, 1))
    goal = GoalCandidate(RigidTransform.from_matrix(chain.ee_pose(q[-1])), 0.0, 0)
    m = evaluate(Trajectory(q), pick_task(), room, robot, goal)
    assert m.success and m.dist == 0.0


def test_trajectory_shape_checked(robot, room):
    goal = GoalCandidate(RigidTransform.identity(), 0.0, 0)
    with pytest.raises(DomainError):
        evaluate(Trajectory(np.zeros((30, 9))), pick_task(), room, robot, goal)


def test_placement_check(room):
    pose = room.link_pose("cup").as_matrix()
    assert placement_ok(room, "cup", "dining_table", pose)
    raised = pose.copy()
    raised[2, 3] += 0.01
    assert not placement_ok(room, "cup", "dining_table", raised)
    off = pose.copy()
    off[0, 3] += 1.0  # past the table edge
    assert not placement_ok(room, "cup", "dining_table", off)


def test_stored_metrics_reproduce(batch_runs):
    """Re-scoring stored trajectories in their task scenes gives the stored rates."""
    for rec in read_demonstrations(batch_runs["single"])[:4]:
        scene, robot = task_scene(rec.task, base_dir=DATA)
        m = evaluate(rec.trajectory, rec.task, scene, robot, rec.goal)
        assert m.success == rec.metrics.success
        assert m.joint_violation_rate == rec.metrics.joint_violation_rate
        assert m.env_collision_rate == rec.metrics.env_collision_rate
