import json
import subprocess
import sys

from conftest import DATA, READY
from mmtaskgen.cli import main

SCENE = str(DATA / "table_room.urdf")
ROBOT = str(DATA / "mobile_gen3.urdf")


def test_generate_then_validate(tmp_path, capsys):
    out = tmp_path / "one.jsonl"
    argv = ["generate", "--scene", SCENE, "--robot", ROBOT, "--action", "pick", "--target", "salt_shaker",
            "--base", "-0.5", "-1.2", "0.3", "--arm", *map(str, READY), "--seed", "1", "--out", str(out)]
    assert main(argv) == 0
    rec = json.loads(out.read_text())
    assert rec["task"]["task_id"] == "pick-salt_shaker-1" and rec["metrics"]["success"]
    assert main(["validate", str(out)]) == 0
    line = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert line["ok"] and line["joint_violation_rate"] == 0.0 and "solve_time" not in line


def test_validate_flags_a_tampered_record(tmp_path, batch_runs, capsys):
    rec = json.loads(batch_runs["single"].read_text().splitlines()[0])
    rec["trajectory"]["waypoints"][-1][0] += 5.0  # drive the base far from the grasp
    path = tmp_path / "bad.jsonl"
    path.write_text(json.dumps(rec) + "\n")
    assert main(["validate", str(path), "--base-dir", str(DATA)]) == 1
    assert json.loads(capsys.readouterr().out.strip())["ok"] is False


def test_generate_failure_exit_code(capsys):
    argv = ["generate", "--scene", SCENE, "--robot", ROBOT, "--target", "vase"]
    assert main(argv) == 1
    assert "stage spec" in capsys.readouterr().err


def test_batch_command(tmp_path, capsys):
    manifest = tmp_path / "m.json"
    manifest.write_text(json.dumps({"scene": SCENE, "robot": ROBOT, "arm": READY.tolist(), "base": [-0.5, -1.2, 0.3],
                                    "tasks": [{"action": "Pick", "target_link": "cup", "seed": 3}]}))
    assert main(["batch", str(manifest), "--out", str(tmp_path / "d.jsonl")]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["succeeded"] == 1 and summary["failed"] == 0


def test_inspect(tmp_path):
    out = tmp_path / "dump.json"
    assert main(["inspect", "--scene", SCENE, "--target", "cup", "--samples", "5", "--candidates", "4",
                 "--out", str(out)]) == 0
    dump = json.loads(out.read_text())
    assert dump["support"]["link"] == "dining_table"
    assert len(dump["samples"]) == 5 and len(dump["candidates"]) == 4
    assert {p["link"] for p in dump["planes"]} >= {"floor", "dining_table", "shelf"}


def test_missing_file_exit_code(tmp_path, capsys):
    assert main(["inspect", "--scene", str(tmp_path / "nope.urdf")]) == 2
    assert "error" in capsys.readouterr().err


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "mmtaskgen.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for cmd in ("generate", "batch", "validate", "inspect"):
        assert cmd in res.stdout
