"""Whole-body planning: kinematic chain, collision models, IK, trajectory
optimization and the sampling-based fallback."""
from .chain import VkcChain, assemble_vkc, forward_kinematics, jacobian
from .collision import ExactChecker, ExactField, SphereModel
from .ik import IkResult, solve_ik, solve_ik_multi
from .rrt import solve_rrt
from .trajopt import GoalPose, Trajectory, TrajOptProblem, solve_trajectory

__all__ = [
    "ExactChecker",
    "ExactField",
    "GoalPose",
    "IkResult",
    "SphereModel",
    "TrajOptProblem",
    "Trajectory",
    "VkcChain",
    "assemble_vkc",
    "forward_kinematics",
    "jacobian",
    "solve_ik",
    "solve_ik_multi",
    "solve_rrt",
    "solve_trajectory",
]
