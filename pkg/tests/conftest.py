import json
from pathlib import Path

import numpy as np
import pytest

from mmtaskgen.planner import assemble_vkc
from mmtaskgen.scene_io import load_robot, load_scene

DATA = Path(__file__).resolve().parents[1] / "src" / "mmtaskgen" / "data"
READY = np.array([0.0, 0.3, 0.0, 1.5, 0.0, 1.3, 0.0])

# acceptance verdicts, printed once at the end of the run
VERDICTS = {}


def record_verdict(n, ok, detail):
    VERDICTS[n] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(VERDICTS):
        ok, detail = VERDICTS[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def robot():
    return load_robot(DATA / "mobile_gen3.urdf")


@pytest.fixture(scope="session")
def room():
    return load_scene(DATA / "table_room.urdf")


@pytest.fixture(scope="session")
def chain(robot):
    return assemble_vkc(robot)


def strip_times(text):
    """Dataset lines with every solve_time field removed (canonical JSON)."""
    out = []
    for line in text.splitlines():
        d = json.loads(line)
        d["trajectory"].pop("solve_time")
        d["metrics"].pop("solve_time")
        out.append(json.dumps(d, sort_keys=True))
    return out


@pytest.fixture(scope="session")
def batch_runs(tmp_path_factory):
    """The 20-task manifest generated twice: once in one go, once interrupted and resumed."""
    from mmtaskgen.taskgen import run_batch

    root = tmp_path_factory.mktemp("batch")
    manifest = DATA / "manifest_20.json"
    single = root / "single" / "data.jsonl"
    s1 = run_batch(manifest, single)
    resumed = root / "resumed" / "data.jsonl"
    first = run_batch(manifest, resumed, max_tasks=7)
    # simulate a crash part way through writing a record
    with open(resumed, "ab") as fh:
        fh.write(b'{"task": {"task_id": "partial')
    s2 = run_batch(manifest, resumed)
    return {"single": single, "resumed": resumed, "summary": s1, "first": first, "summary_resumed": s2}
