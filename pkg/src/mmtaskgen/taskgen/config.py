"""Pipeline configuration: every tolerance, weight and budget in one place."""
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from ..errors import DomainError
from ..planner import trajopt


@dataclass
class PipelineConfig:
    # conditional sampler
    theta_d: float = 0.02
    theta_a: float = 0.97
    resample_object: bool = True
    base_search_radius: float = 1.5
    # goal generation
    n_candidates: int = 48
    search_budget: int = 12
    neighbor_radius: float = 0.10
    pose_lambda: float = 0.1
    feasibility: str = "planner"  # "planner" (plan each candidate) or "ik" (reachability only)
    ik_seeds: int = 6
    place_lift: float = 0.05  # lift before carrying an object to its new support
    # planner
    T: int = trajopt.T_DEFAULT
    weights: dict = field(default_factory=lambda: dict(trajopt.WEIGHTS))
    safety_margin: float = trajopt.SAFETY_MARGIN
    base_scale: float = trajopt.BASE_SCALE
    trust_init: float = trajopt.TRUST_INIT
    max_iter: int = trajopt.MAX_ITER
    rrt_fallback: bool = True
    rrt_max_iter: int = 4000
    rrt_time_budget: float = 60.0
    # output
    instruction_variants: bool = False

    def __post_init__(self):
        if self.feasibility not in ("ik", "planner"):
            raise DomainError(f"feasibility must be 'ik' or 'planner', got {self.feasibility!r}")
        for name in ("n_candidates", "search_budget", "T", "max_iter", "ik_seeds"):
            if int(getattr(self, name)) < 1:
                raise DomainError(f"{name} must be at least 1")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d or {})
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        if "weights" in d:
            d["weights"] = {**trajopt.WEIGHTS, **d["weights"]}
        return cls(**d)


def load_config(path=None):
    """Read a YAML or JSON config file; ``None`` gives the defaults."""
    if path is None:
        return PipelineConfig()
    text = Path(path).read_text(encoding="utf-8")
    data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    return PipelineConfig.from_dict(data)
