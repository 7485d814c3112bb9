"""Task specifications and demonstration records."""
from dataclasses import dataclass

import numpy as np

from ..errors import TaskSpecError
from ..sampler import PlanarBasePose

ACTIONS = ("Pick", "Place")
SPLITS = ("Train", "Val", "Test", "NovelObject", "NovelScene", "NovelScenario")


@dataclass(frozen=True)
class TaskSpec:
    """One task: pick ``target_link``, or place it on ``support_link``.

    ``robot_init`` is the base pose plus arm configuration the robot starts
    from. File paths are kept as given (relative to the manifest).
    """

    action: str
    target_link: str
    base: PlanarBasePose
    arm: tuple
    scene_file: str
    robot_file: str
    seed: int = 0
    split: str = "Train"
    support_link: str = None
    task_id: str = None

    def __post_init__(self):
        action = str(self.action).capitalize()
        if action not in ACTIONS:
            raise TaskSpecError(f"action must be one of {ACTIONS}, got {self.action!r}")
        object.__setattr__(self, "action", action)
        if self.split not in SPLITS:
            raise TaskSpecError(f"split must be one of {SPLITS}, got {self.split!r}")
        if not isinstance(self.base, PlanarBasePose):
            object.__setattr__(self, "base", PlanarBasePose.from_list(self.base))
        arm = tuple(float(v) for v in self.arm)
        if not np.all(np.isfinite(arm)):
            raise TaskSpecError("arm configuration must be finite")
        object.__setattr__(self, "arm", arm)
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)):
            raise TaskSpecError(f"seed must be an integer, got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))
        if action == "Place" and not self.support_link:
            raise TaskSpecError("place tasks need a support_link")
        if self.task_id is None:
            object.__setattr__(self, "task_id", f"{action.lower()}-{self.target_link}-{self.seed}")

    @property
    def robot_init(self):
        return np.concatenate([self.base.as_array(), self.arm])

    def validate(self, scene, robot):
        """Raise TaskSpecError when the spec does not fit the scene or robot."""
        if not scene.has_link(self.target_link):
            raise TaskSpecError(f"target link {self.target_link!r} is not in the scene")
        if self.support_link is not None and not scene.has_link(self.support_link):
            raise TaskSpecError(f"support link {self.support_link!r} is not in the scene")
        if self.support_link == self.target_link:
            raise TaskSpecError("an object cannot be placed on itself")
        q = self.robot_init
        if q.shape != (robot.dof,):
            raise TaskSpecError(f"robot_init has {q.shape[0]} entries, robot has {robot.dof} DoF")
        lo, hi = robot.lower_limits, robot.upper_limits
        if np.any(q < lo) or np.any(q > hi):
            raise TaskSpecError("robot_init violates joint limits")
        return self

    def to_dict(self):
        return {
            "task_id": self.task_id,
            "action": self.action,
            "target_link": self.target_link,
            "support_link": self.support_link,
            "robot_init": {"base": self.base.to_list(), "arm": list(self.arm)},
            "scene_file": self.scene_file,
            "robot_file": self.robot_file,
            "seed": self.seed,
            "split": self.split,
        }

    @classmethod
    def from_dict(cls, d):
        try:
            init = d["robot_init"]
            return cls(
                d["action"], d["target_link"], PlanarBasePose.from_list(init["base"]), init["arm"],
                d["scene_file"], d["robot_file"], d.get("seed", 0), d.get("split", "Train"),
                d.get("support_link"), d.get("task_id"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise TaskSpecError(f"malformed task entry: {exc}") from exc


@dataclass(frozen=True)
class DemonstrationRecord:
    task: TaskSpec
    trajectory: object
    goal: object
    metrics: object
    instruction: str

    def to_dict(self):
        return {
            "task": self.task.to_dict(),
            "instruction": self.instruction,
            "goal": self.goal.to_dict(),
            "trajectory": self.trajectory.to_dict(),
            "metrics": self.metrics.to_dict(),
        }

    @classmethod
    def from_dict(cls, d):
        from ..goals.candidates import GoalCandidate
        from ..metrics import MetricsReport
        from ..planner.trajopt import Trajectory

        return cls(
            TaskSpec.from_dict(d["task"]), Trajectory.from_dict(d["trajectory"]),
            GoalCandidate.from_dict(d["goal"]), MetricsReport.from_dict(d["metrics"]), d["instruction"],
        )
