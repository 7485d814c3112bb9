import json

import numpy as np
import pytest

from conftest import DATA, READY, strip_times
from mmtaskgen.errors import DomainError, StageError, TaskSpecError
from mmtaskgen.scene_io import parse_scene, read_demonstrations
from mmtaskgen.taskgen import (
    DemonstrationRecord,
    PipelineConfig,
    TaskFailure,
    TaskGenerator,
    TaskSpec,
    generate_task,
    load_config,
    load_manifest,
    make_instruction,
    run_batch,
)


def spec(action="Pick", target="cup", support=None, seed=0, base=(-0.5, -1.2, 0.3)):
    return TaskSpec(action, target, list(base), READY, "table_room.urdf", "mobile_gen3.urdf",
                    seed=seed, support_link=support)


def test_default_config_file_matches_defaults():
    assert load_config(DATA / "default_config.yaml") == PipelineConfig()
    assert load_config() == PipelineConfig()


def test_config_rejects_unknown_and_bad_values(tmp_path):
    with pytest.raises(DomainError, match="unknown"):
        PipelineConfig.from_dict({"thetad": 0.1})
    with pytest.raises(DomainError):
        PipelineConfig(feasibility="oracle")
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"weights": {"collision": 10.0}, "T": 20}))
    cfg = load_config(path)
    assert cfg.T == 20 and cfg.weights == {"travel": 1.0, "smooth": 1.0, "collision": 10.0}


def test_spec_validation():
    with pytest.raises(TaskSpecError):
        spec(action="Push")
    with pytest.raises(TaskSpecError, match="support_link"):
        spec(action="Place")
    with pytest.raises(TaskSpecError):
        TaskSpec("Pick", "cup", [0, 0, 0], READY, "a", "b", split="Holdout")
    s = spec()
    assert s.task_id == "pick-cup-0"
    assert TaskSpec.from_dict(s.to_dict()) == s


def test_instructions(room):
    assert make_instruction(spec(), room) == "Pick the cup in the living room on the dining table"
    assert make_instruction(spec("Place", "cup", "shelf"), room) == \
        "Place the cup in the living room on the shelf"
    varied = {make_instruction(spec(seed=k), room, variants=True) for k in range(3)}
    assert len(varied) == 3


def test_instruction_falls_back_without_labels():
    bare = parse_scene("""<scene>
      <link name="floor"><collision><geometry><box size="2 2 0.1"/></geometry></collision></link>
      <link name="mug"><collision><origin xyz="0 0 0.05"/><geometry><box size="0.05 0.05 0.1"/></geometry></collision></link>
      <joint name="j" type="fixed"><parent link="floor"/><child link="mug"/><origin xyz="0 0 0.05"/></joint>
    </scene>""")
    s = TaskSpec("Pick", "mug", [0, 0, 0], READY, "x.urdf", "mobile_gen3.urdf")
    with pytest.warns(UserWarning, match="bare template"):
        assert make_instruction(s, bare) == "Pick the mug"


def test_pick_end_to_end():
    res = generate_task(spec(), base_dir=DATA)
    assert isinstance(res, DemonstrationRecord), res
    m = res.metrics
    assert m.success and m.joint_violation_rate == m.env_collision_rate == m.self_collision_rate == 0.0
    assert res.trajectory.waypoints.shape == (30, 10)
    np.testing.assert_allclose(res.trajectory.waypoints[0], spec().robot_init)
    again = generate_task(spec(), base_dir=DATA)
    assert strip_times(json.dumps(res.to_dict())) == strip_times(json.dumps(again.to_dict()))


def test_failures_name_their_stage():
    res = generate_task(spec(target="vase"), base_dir=DATA)
    assert isinstance(res, TaskFailure) and res.stage == "spec"
    res = generate_task(TaskSpec("Pick", "cup", [0, 0, 0], READY, "missing.urdf", "mobile_gen3.urdf"),
                        base_dir=DATA)
    assert res.stage == "load"
    with pytest.raises(StageError):
        generate_task(spec(target="vase"), base_dir=DATA, raise_errors=True)


def test_estimator_front_end():
    gen = TaskGenerator(config={"search_budget": 8}, base_dir=DATA).fit()
    assert gen.config_.search_budget == 8
    (res,) = gen.predict([spec(target="vase")])
    assert isinstance(res, TaskFailure)


def test_manifest_defaults_and_duplicates(tmp_path):
    tasks, cfg, base = load_manifest(DATA / "manifest_20.json")
    assert len(tasks) == 20 and base == DATA
    assert all(t.scene_file == "table_room.urdf" for t in tasks)
    assert {t.split for t in tasks} >= {"Train", "Val", "Test"}
    dup = tmp_path / "dup.yaml"
    dup.write_text("scene: table_room.urdf\nrobot: mobile_gen3.urdf\narm: [0, 0.3, 0, 1.5, 0, 1.3, 0]\n"
                   "tasks:\n  - {action: Pick, target_link: cup}\n  - {action: Pick, target_link: cup}\n")
    with pytest.raises(DomainError, match="duplicate"):
        load_manifest(dup)


def test_batch_summary(batch_runs):
    s = batch_runs["summary"]
    assert s.total == 20 and s.succeeded + s.failed == 20
    assert s.failures.get("spec") == 1  # the manifest's deliberately missing link
    log = [json.loads(x) for x in (batch_runs["single"].parent / "data.jsonl.log").read_text().splitlines()]
    assert [e["task_id"] for e in log] == [t.task_id for t in load_manifest(DATA / "manifest_20.json")[0]]
    resumed = batch_runs["summary_resumed"]
    assert resumed.resumed == 7 and resumed.to_dict()["per_split"] == s.to_dict()["per_split"]


def test_batch_workers_match_serial(tmp_path):
    manifest = tmp_path / "m.json"
    manifest.write_text(json.dumps({
        "scene": str(DATA / "table_room.urdf"), "robot": str(DATA / "mobile_gen3.urdf"), "arm": READY.tolist(),
        "base": [-0.5, -1.2, 0.3],
        "tasks": [{"action": "Pick", "target_link": "salt_shaker", "seed": 1},
                  {"action": "Pick", "target_link": "teapot", "seed": 0},
                  {"action": "Pick", "target_link": "cup", "seed": 2}],
    }))
    a = run_batch(manifest, tmp_path / "serial.jsonl")
    b = run_batch(manifest, tmp_path / "pool.jsonl", workers=2)
    assert a == b
    assert strip_times((tmp_path / "serial.jsonl").read_text()) == strip_times((tmp_path / "pool.jsonl").read_text())
    # a finished batch resumes to a no-op
    c = run_batch(manifest, tmp_path / "serial.jsonl")
    assert c.resumed == 3 and c.succeeded == a.succeeded
    assert len(read_demonstrations(tmp_path / "serial.jsonl")) == a.succeeded
