"""Task building, pipeline orchestration, batching and instructions."""
from .batch import BatchSummary, load_manifest, run_batch
from .config import PipelineConfig, load_config
from .instructions import make_instruction
from .pipeline import STAGES, TaskFailure, TaskGenerator, generate_task, target_surface, task_scene
from .spec import ACTIONS, SPLITS, DemonstrationRecord, TaskSpec

__all__ = [
    "ACTIONS",
    "BatchSummary",
    "DemonstrationRecord",
    "PipelineConfig",
    "SPLITS",
    "STAGES",
    "TaskFailure",
    "TaskGenerator",
    "TaskSpec",
    "generate_task",
    "load_config",
    "load_manifest",
    "make_instruction",
    "run_batch",
    "target_surface",
    "task_scene",
]
