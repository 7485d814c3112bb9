"""Goal candidates and the adaptive feasibility-driven search over them."""
from .adaptive import (
    AdaptiveGoalSampler,
    CandidateSet,
    adaptive_goal_search,
    draw_candidate,
    init_session,
    report_failure,
    uniform_goal_search,
)
from .candidates import GoalCandidate, generate_grasp_candidates, generate_placement_candidates
from .feasibility import GoalFeasibility, check_feasibility
from .kdtree import PoseIndex, pose_distance

__all__ = [
    "AdaptiveGoalSampler",
    "CandidateSet",
    "GoalCandidate",
    "GoalFeasibility",
    "PoseIndex",
    "adaptive_goal_search",
    "check_feasibility",
    "draw_candidate",
    "generate_grasp_candidates",
    "generate_placement_candidates",
    "init_session",
    "pose_distance",
    "report_failure",
    "uniform_goal_search",
]
