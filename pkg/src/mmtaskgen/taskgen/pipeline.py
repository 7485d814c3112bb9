"""End-to-end task generation: sampler, goal search, planner, validation."""
import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from ..errors import MMTaskGenError, NoSupportError, SaturationError, StageError, TaskSpecError
from ..goals.adaptive import adaptive_goal_search, init_session
from ..goals.candidates import generate_grasp_candidates, generate_placement_candidates
from ..goals.feasibility import GoalFeasibility, hand_links
from ..metrics import evaluate
from ..planner.chain import assemble_vkc
from ..planner.collision import ExactField, SphereModel, attached_protrusion
from ..planner.ik import solve_ik
from ..planner.rrt import solve_rrt
from ..planner.trajopt import GoalPose, TrajOptProblem, solve_trajectory
from ..sampler import sample_base_pose, sample_poses
from ..scene_io import load_robot, load_scene
from ..support import MIN_ABS_NZ, extract_planes, support_of
from .config import PipelineConfig
from .instructions import make_instruction
from .spec import DemonstrationRecord

STAGES = ("load", "spec", "sampler", "goal", "planner", "validation")
FLOOR = "floor"


@dataclass(frozen=True)
class TaskFailure:
    task: object
    stage: str
    error: str

    def to_dict(self):
        return {"task": self.task.to_dict(), "stage": self.stage, "error": self.error}


class _Stage:
    """Context manager tagging package errors with the stage they came from."""

    def __init__(self, name):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, kind, exc, tb):
        if exc is not None and isinstance(exc, MMTaskGenError) and not isinstance(exc, StageError):
            raise StageError(self.name, exc) from exc
        return False


def _resolve(path, base_dir):
    p = Path(path)
    if not p.is_absolute() and base_dir is not None:
        p = Path(base_dir) / p
    return p


def target_surface(scene, link):
    """Largest upward-facing face of ``link``: where objects get placed."""
    planes = [p for p in extract_planes(scene, min_abs_nz=MIN_ABS_NZ) if p.link == link and p.normal[2] > 0]
    if not planes:
        raise NoSupportError(f"link {link!r} has no upward-facing surface")
    return max(planes, key=lambda p: (p.area, p.normal[2]))


def vary_scene(scene, spec, config):
    """The scene variation a task runs in: the target re-sampled on its support."""
    if not config.resample_object:
        return scene
    support = support_of(scene, spec.target_link, config.theta_d, config.theta_a)
    (s,) = sample_poses(spec.target_link, scene, 1, spec.seed, config.theta_d, config.theta_a, support=support)
    return scene.with_link_pose(spec.target_link, s.pose)


def task_scene(spec, config=None, base_dir=None):
    """Load and vary the scene of ``spec`` exactly as generation did; returns (scene, robot)."""
    run = _Run(spec, config or PipelineConfig(), base_dir)
    run.load()
    run.check_spec()
    with _Stage("sampler"):
        return vary_scene(run.scene, spec, run.cfg), run.robot


def _lifted(pose, dz):
    m = pose.as_matrix().copy()
    m[2, 3] += dz
    return m


class _Run:
    def __init__(self, spec, config, base_dir):
        self.spec = spec
        self.cfg = config
        self.base_dir = base_dir

    # -- stages -----------------------------------------------------------
    def load(self):
        with _Stage("load"):
            try:
                self.scene = load_scene(_resolve(self.spec.scene_file, self.base_dir))
                self.robot = load_robot(_resolve(self.spec.robot_file, self.base_dir))
            except OSError as exc:
                raise StageError("load", exc) from exc

    def check_spec(self):
        with _Stage("spec"):
            self.spec.validate(self.scene, self.robot)
            if self.spec.action == "Place":
                target_surface(self.scene, self.spec.support_link)

    def sample(self):
        """Scene variation for the target and a collision-free start base."""
        cfg, spec = self.cfg, self.spec
        with _Stage("sampler"):
            self.scene = vary_scene(self.scene, spec, cfg)
            chain = assemble_vkc(self.robot)
            field = ExactField.from_scene(self.scene, exclude_links={FLOOR})
            model = SphereModel(chain, field, margin=cfg.safety_margin)
            q0 = spec.robot_init
            if not model.is_free(q0)[0]:
                base = sample_base_pose(self.robot, self.scene, q0[:3], cfg.base_search_radius, spec.seed,
                                        q_arm=q0[3:], margin=cfg.safety_margin, chain=chain)
                q0 = np.concatenate([base.as_array(), q0[3:]])
            self.start = q0

    def _search(self, cands, pred):
        cs = init_session(cands, self.cfg.neighbor_radius, self.cfg.pose_lambda)
        rng = np.random.default_rng([self.spec.seed, 1])
        return adaptive_goal_search(cs, pred, self.cfg.search_budget, rng)

    def _pick_problem(self, start, goal, goal_seed):
        scene, tgt = self.scene, self.spec.target_link
        chain = assemble_vkc(self.robot)
        field = ExactField.from_scene(scene, exclude_links={FLOOR})
        hand = ExactField.from_scene(scene, exclude_links={FLOOR, tgt})
        return self._problem(chain, start, goal, goal_seed, field, None, {h: hand for h in hand_links(chain)})

    def _place_problem(self, start, goal, goal_seed):
        scene, tgt = self.scene, self.spec.target_link
        chain = assemble_vkc(self.robot, (scene.link(tgt), goal.grasp))
        field = ExactField.from_scene(scene, exclude_links={FLOOR, tgt})
        # the held object's proxies bulge below its base; lower the destination
        # support for them so a resting placement is not a proxy collision
        drop = np.array([0.0, 0.0, -attached_protrusion(chain)])
        held = ExactField.from_scene(scene, exclude_links={FLOOR, tgt}, offsets={self.spec.support_link: drop})
        return self._problem(chain, start, goal, goal_seed, field, held, None, relax_ends=True)

    def _problem(self, chain, start, goal, goal_seed, field, object_field, link_fields, relax_ends=False):
        cfg = self.cfg
        return TrajOptProblem(
            chain, start, GoalPose(goal.pose.as_matrix()), field=field, object_field=object_field,
            link_fields=link_fields, T=cfg.T, weights=dict(cfg.weights), safety_margin=cfg.safety_margin,
            base_scale=cfg.base_scale, trust_init=cfg.trust_init, max_iter=cfg.max_iter,
            goal_seed=goal_seed, ik_restarts=cfg.ik_seeds, seed=self.spec.seed, relax_ends=relax_ends,
        )

    def goals(self):
        cfg, spec, scene = self.cfg, self.spec, self.scene
        tgt = spec.target_link
        with _Stage("goal"):
            hand_field = ExactField.from_scene(scene, exclude_links={FLOOR, tgt})
            grasps = generate_grasp_candidates(
                scene.link(tgt), cfg.n_candidates, spec.seed, world=scene.link_pose(tgt).as_matrix(),
                field=hand_field, aperture=self.robot.gripper_aperture,
            )
            pick_pred = GoalFeasibility(self.robot, scene, tgt, "pick", seed=spec.seed, n_seeds=cfg.ik_seeds,
                                        margin=cfg.safety_margin, q_arm=self.start[3:])
            if spec.action == "Pick":
                pred = self._with_planner(pick_pred, lambda c, q: self._pick_problem(self.start, c, q))
                self.goal = self._search(grasps, pred)
                self.goal_q = pick_pred.solutions[self.goal.id]
                self.problem = self._pick_problem(self.start, self.goal, self.goal_q)
                return
            # placement: grasp the object where it stands, lift it, then find a spot on the support
            grasp_goal = self._search(grasps, pick_pred)
            q_grasp = pick_pred.solutions[grasp_goal.id]
            support = target_surface(scene, spec.support_link)
            held = assemble_vkc(self.robot, (scene.link(tgt), grasp_goal.grasp))
            field = ExactField.from_scene(scene, exclude_links={FLOOR, tgt})
            origin = support_of(scene, tgt, cfg.theta_d, cfg.theta_a).link
            drop = {origin: np.array([0.0, 0.0, -attached_protrusion(held)])}
            model = SphereModel(held, field, ExactField.from_scene(scene, exclude_links={FLOOR, tgt}, offsets=drop),
                                margin=cfg.safety_margin)
            # a snug neighbour may sit inside the margin already; the lift must not get closer
            env, _ = model.min_clearance(q_grasp[None])
            model = model.with_margin(float(np.clip(env[0] - 1e-3, 0.0, cfg.safety_margin)), model.self_margin)
            lift = _lifted(grasp_goal.pose, cfg.place_lift)
            res = solve_ik(held, lift, q_grasp, model)
            if not res.success:
                raise SaturationError("could not lift the grasped object clear of its support",
                                      {"lift ik": 1}, 1)
            self.start = res.q
            places = generate_placement_candidates(tgt, support, cfg.n_candidates, spec.seed, scene,
                                                   grasp_goal.grasp)
            place_pred = GoalFeasibility(self.robot, scene, tgt, "place", grasp=grasp_goal.grasp,
                                         support=spec.support_link, seed=spec.seed, n_seeds=cfg.ik_seeds,
                                         margin=cfg.safety_margin, q_arm=self.start[3:])
            pred = self._with_planner(place_pred, lambda c, q: self._place_problem(self.start, c, q))
            self.goal = self._search(places, pred)
            self.goal_q = place_pred.solutions[self.goal.id]
            self.problem = self._place_problem(self.start, self.goal, self.goal_q)

    def _with_planner(self, pred, make_problem):
        if self.cfg.feasibility == "ik":
            return pred
        self._planned = {}

        def check(c):
            if not pred(c):
                return False
            traj = self._plan(make_problem(c, pred.solutions[c.id]), c)
            if traj is None:
                return False
            self._planned[c.id] = traj
            return True

        return check

    def _plan(self, problem, goal):
        """First trajectory that passes validation: optimizer, then the sampling fallback."""
        spec = self.spec
        tried = []
        traj = solve_trajectory(problem)
        tried.append(traj)
        if traj.converged and evaluate(traj, spec, self.scene, self.robot, goal).success:
            return traj
        if not self.cfg.rrt_fallback:
            return None
        rrt = solve_rrt(problem, seed=spec.seed, time_budget=self.cfg.rrt_time_budget,
                        max_iter=self.cfg.rrt_max_iter)
        if not rrt.converged:
            return None
        # smooth the sampled path with the optimizer, keeping the raw path as a backup
        smooth = solve_trajectory(dataclasses.replace(problem, init=rrt.waypoints, goal_seed=rrt.waypoints[-1]))
        smooth = dataclasses.replace(smooth, solve_time=traj.solve_time + rrt.solve_time + smooth.solve_time)
        if smooth.converged and evaluate(smooth, spec, self.scene, self.robot, goal).success:
            return smooth
        rrt = dataclasses.replace(rrt, solve_time=traj.solve_time + rrt.solve_time)
        if evaluate(rrt, spec, self.scene, self.robot, goal).success:
            return rrt
        return None

    def plan(self):
        with _Stage("planner"):
            planned = getattr(self, "_planned", {})
            traj = planned.get(self.goal.id) or self._plan(self.problem, self.goal)
            if traj is None:
                raise StageError("planner", SaturationError("no planner produced a valid trajectory",
                                                            {"planner": 1}, 1))
            self.traj = traj

    def validate(self):
        with _Stage("validation"):
            self.metrics = evaluate(self.traj, self.spec, self.scene, self.robot, self.goal)
            if not self.metrics.success:
                raise StageError("validation", TaskSpecError("trajectory failed validation"))


def generate_task(spec, config=None, base_dir=None, raise_errors=False):
    """Run the pipeline for one task: a DemonstrationRecord, or a TaskFailure naming the stage."""
    config = config or PipelineConfig()
    run = _Run(spec, config, base_dir)
    try:
        run.load()
        run.check_spec()
        run.sample()
        run.goals()
        run.plan()
        run.validate()
    except StageError as exc:
        if raise_errors:
            raise
        return TaskFailure(spec, exc.stage, str(exc))
    instruction = make_instruction(spec, run.scene, config.instruction_variants)
    return DemonstrationRecord(spec, run.traj, run.goal, run.metrics, instruction)


class TaskGenerator(BaseEstimator):
    """Estimator front-end: ``predict(specs)`` returns records or failures."""

    def __init__(self, config=None, base_dir=None):
        self.config = config
        self.base_dir = base_dir

    def _config(self):
        if isinstance(self.config, PipelineConfig):
            return self.config
        return PipelineConfig.from_dict(self.config)

    def fit(self, specs=None, y=None):
        self.config_ = self._config()
        return self

    def predict(self, specs):
        cfg = getattr(self, "config_", None) or self._config()
        return [generate_task(s, cfg, self.base_dir) for s in specs]
