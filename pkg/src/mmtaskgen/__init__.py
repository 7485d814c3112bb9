"""Procedural whole-body mobile manipulation task generation."""
from .errors import (
    DomainError,
    ExhaustedError,
    MMTaskGenError,
    NoGraspError,
    NoPlacementError,
    NoSeedError,
    NoSupportError,
    ParseError,
    SaturationError,
    StageError,
    StructureError,
    TaskSpecError,
    ValidationError,
)
from .metrics import MetricsReport, evaluate
from .scene_io import load_robot, load_scene, read_demonstrations, write_demonstrations
from .taskgen import DemonstrationRecord, PipelineConfig, TaskGenerator, TaskSpec, generate_task, run_batch

__version__ = "0.1.0"

__all__ = [
    "DemonstrationRecord",
    "DomainError",
    "ExhaustedError",
    "MMTaskGenError",
    "MetricsReport",
    "NoGraspError",
    "NoPlacementError",
    "NoSeedError",
    "NoSupportError",
    "ParseError",
    "PipelineConfig",
    "SaturationError",
    "StageError",
    "StructureError",
    "TaskGenerator",
    "TaskSpec",
    "TaskSpecError",
    "ValidationError",
    "evaluate",
    "generate_task",
    "load_robot",
    "load_scene",
    "read_demonstrations",
    "run_batch",
    "write_demonstrations",
]
