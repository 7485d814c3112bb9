"""Resumable, deterministic batch generation over a task manifest.

A manifest is a JSON (or YAML) document::

    {"scene": "room.urdf", "robot": "robot.urdf", "config": {...},
     "tasks": [{"action": "Pick", "target_link": "cup", "seed": 0, ...}, ...]}

Task entries may omit ``scene_file``, ``robot_file``, ``base`` and ``arm``
to inherit the manifest-level ``scene``, ``robot``, ``base`` and ``arm``;
relative paths resolve against the manifest's directory.

Records go to ``out`` (one JSON line each, manifest order) and every task's
outcome to ``out + ".log"``. A rerun skips tasks already present in either
file, so an interrupted batch resumed later yields the same dataset as a
single uninterrupted run.
"""
import json
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from ..errors import DomainError, TaskSpecError
from ..scene_io.dataset import DatasetWriteError, encode_record
from .config import PipelineConfig
from .pipeline import TaskFailure, generate_task
from .spec import TaskSpec


@dataclass
class BatchSummary:
    total: int = 0
    succeeded: int = 0
    failed: int = 0
    resumed: int = 0
    per_split: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)  # stage -> count

    def to_dict(self):
        return {
            "total": self.total, "succeeded": self.succeeded, "failed": self.failed, "resumed": self.resumed,
            "per_split": dict(sorted(self.per_split.items())), "failures": dict(sorted(self.failures.items())),
        }


def load_manifest(path):
    """Read a manifest; returns (tasks, config dict, base_dir)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    if isinstance(data, list):
        data = {"tasks": data}
    if not isinstance(data, dict):
        raise TaskSpecError(f"manifest {path} must be a mapping or a list of tasks")
    tasks = []
    for entry in data.get("tasks") or []:
        entry = dict(entry)
        entry.setdefault("scene_file", data.get("scene"))
        entry.setdefault("robot_file", data.get("robot"))
        if "robot_init" not in entry:
            entry["robot_init"] = {"base": entry.pop("base", data.get("base", [0.0, 0.0, 0.0])),
                                   "arm": entry.pop("arm", data.get("arm"))}
        tasks.append(TaskSpec.from_dict(entry))
    ids = Counter(t.task_id for t in tasks)
    dup = sorted(k for k, n in ids.items() if n > 1)
    if dup:
        raise DomainError(f"duplicate task ids in manifest: {dup}")
    return tasks, data.get("config") or {}, path.parent


def _repair_tail(path):
    """Drop a partially written last line left by an interrupted run."""
    if not path.exists():
        return
    raw = path.read_bytes()
    if raw and not raw.endswith(b"\n"):
        path.write_bytes(raw[:raw.rfind(b"\n") + 1])


def _read_lines(path):
    if not path.exists():
        return []
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


def _run_one(args):
    spec, config, base_dir = args
    return generate_task(spec, config, base_dir)


def run_batch(manifest, out, workers=1, config=None, max_tasks=None):
    """Generate every manifest task not already done; returns a BatchSummary.

    ``config`` (a PipelineConfig or dict) overrides the manifest's config.
    ``max_tasks`` stops after that many new tasks, which is how tests stage
    an interruption.
    """
    tasks, cfg_dict, base_dir = load_manifest(manifest)
    if isinstance(config, PipelineConfig):
        cfg = config
    else:
        cfg = PipelineConfig.from_dict({**cfg_dict, **(config or {})})
    out = Path(out)
    log = Path(str(out) + ".log")
    out.parent.mkdir(parents=True, exist_ok=True)
    _repair_tail(out)
    _repair_tail(log)
    done = {r["task"]["task_id"] for r in _read_lines(out)} | {e["task_id"] for e in _read_lines(log)}
    todo = [t for t in tasks if t.task_id not in done]
    if max_tasks is not None:
        todo = todo[:max_tasks]
    resumed = len(tasks) - len([t for t in tasks if t.task_id not in done])

    jobs = [(t, cfg, base_dir) for t in todo]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = pool.map(_run_one, jobs)
            _append(results, out, log)
    else:
        _append(map(_run_one, jobs), out, log)

    summary = BatchSummary(total=len(tasks), resumed=resumed)
    outcomes = {r["task"]["task_id"]: {"status": "ok"} for r in _read_lines(out)}
    outcomes.update({e["task_id"]: e for e in _read_lines(log)})
    splits, stages = Counter(), Counter()
    for t in tasks:
        e = outcomes.get(t.task_id)
        if e is None:
            continue
        if e["status"] == "ok":
            summary.succeeded += 1
            splits[t.split] += 1
        else:
            summary.failed += 1
            stages[e["stage"]] += 1
    summary.per_split = dict(splits)
    summary.failures = dict(stages)
    return summary


def _append(results, out, log):
    """Single appender: records in manifest order, then their log entries."""
    with open(out, "a", encoding="utf-8") as fo, open(log, "a", encoding="utf-8") as fl:
        for res in results:
            if isinstance(res, TaskFailure):
                entry = {"task_id": res.task.task_id, "status": "failed", "stage": res.stage, "error": res.error}
            else:
                entry = {"task_id": res.task.task_id, "status": "ok", "stage": None, "error": None}
                try:
                    fo.write(encode_record(res) + "\n")
                    fo.flush()
                except (OSError, ValueError) as exc:
                    err = DatasetWriteError(str(exc), 0)
                    entry = {"task_id": res.task.task_id, "status": "failed", "stage": "io", "error": str(err)}
            fl.write(json.dumps(entry, sort_keys=True) + "\n")
            fl.flush()
            os.fsync(fl.fileno())
