import io

import numpy as np
import pytest

from conftest import DATA
from mmtaskgen.errors import ParseError, StructureError, ValidationError
from mmtaskgen.scene_io import (
    dump_robot,
    dump_scene,
    encode_record,
    load_robot,
    load_scene,
    parse_robot,
    parse_scene,
    read_demonstrations,
    write_demonstrations,
)

SCENE = """<scene name="s">
  <link name="floor"><collision><geometry><box size="2 2 0.1"/></geometry></collision></link>
  <link name="mug" room="kitchen" label="red mug">
    <collision><origin xyz="0 0 0.05"/><geometry><cylinder radius="0.04" length="0.1"/></geometry></collision>
  </link>
  <joint name="j" type="fixed"><parent link="floor"/><child link="mug"/><origin xyz="0.1 0 0.05"/></joint>
</scene>"""


def test_room_fixture_links(room):
    names = {lk.name for lk in room.links}
    assert {"floor", "dining_table", "shelf", "cup", "salt_shaker"} <= names
    assert room.root == "floor"
    assert room.room_labels["cup"] == "living room"
    np.testing.assert_allclose(room.link_pose("cup").translation, [1.0, 0.15, 0.75])


def test_robot_fixture(robot):
    assert robot.dof == 10
    assert [j.name for j in robot.base_joints] == ["base_x", "base_y", "base_theta"]
    assert np.all(robot.lower_limits < robot.upper_limits)


def test_labels_and_attributes():
    scene = parse_scene(SCENE)
    assert scene.link("mug").label == "red mug"
    assert scene.link("floor").label == "floor"
    assert scene.room_labels == {"mug": "kitchen"}


def test_degrees_rejected():
    bad = SCENE.replace('<origin xyz="0.1 0 0.05"/>', '<origin xyz="0.1 0 0.05" rpy_deg="0 0 90"/>')
    with pytest.raises(ValidationError, match="degrees"):
        parse_scene(bad)
    bad = SCENE.replace('<origin xyz="0.1 0 0.05"/>', '<origin xyz="0.1 0 0.05" rpy="0 0 90" units="deg"/>')
    with pytest.raises(ValidationError):
        parse_scene(bad)


def test_malformed_xml_reports_line():
    with pytest.raises(ParseError) as err:
        parse_scene("<scene>\n<link name='a'>\n</scene>")
    assert err.value.line == 3


def test_cycle_and_multiple_roots():
    two_roots = SCENE.replace('<joint name="j" type="fixed"><parent link="floor"/><child link="mug"/>'
                              '<origin xyz="0.1 0 0.05"/></joint>', "")
    with pytest.raises(StructureError, match="roots"):
        parse_scene(two_roots)
    cyc = SCENE.replace("</scene>", '<joint name="k" type="fixed"><parent link="mug"/>'
                                    '<child link="floor"/></joint></scene>')
    with pytest.raises(StructureError):
        parse_scene(cyc)


def test_movable_joint_needs_limits():
    bad = SCENE.replace('type="fixed"', 'type="revolute"')
    with pytest.raises(ValidationError, match="limit"):
        parse_scene(bad)


@pytest.mark.parametrize("name", ["table_room.urdf", "cabinet.urdf", "corridor.urdf"])
def test_scene_dump_roundtrip(name):
    scene = load_scene(DATA / name)
    again = parse_scene(dump_scene(scene))
    assert [lk.name for lk in again.links] == [lk.name for lk in scene.links]
    for a, b in zip(scene.links, again.links):
        assert a.attributes == b.attributes
        assert len(a.collision_geoms) == len(b.collision_geoms)
        for ga, gb in zip(a.collision_geoms, b.collision_geoms):
            assert ga.shape == gb.shape and ga.size == gb.size
            assert ga.local_pose.allclose(gb.local_pose, 1e-12)
    for name_ in (lk.name for lk in scene.links):
        assert scene.link_pose(name_).allclose(again.link_pose(name_), 1e-12)


def test_robot_dump_roundtrip(robot):
    again = parse_robot(dump_robot(robot))
    assert again.joint_names == robot.joint_names
    np.testing.assert_array_equal(again.lower_limits, robot.lower_limits)
    assert again.ee_frame == robot.ee_frame
    assert again.gripper_aperture == robot.gripper_aperture


def test_robot_requires_ee_frame():
    with pytest.raises(ValidationError, match="end-effector"):
        parse_robot(SCENE.replace("scene", "robot"))


def test_dataset_roundtrip(batch_runs, tmp_path):
    records = read_demonstrations(batch_runs["single"])
    assert records
    buf = io.StringIO()
    assert write_demonstrations(records, buf) == len(records)
    assert buf.getvalue() == batch_runs["single"].read_text()
    again = read_demonstrations(io.BytesIO(buf.getvalue().encode()))
    assert [encode_record(r) for r in again] == [encode_record(r) for r in records]


def test_dataset_malformed_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('\n{"task": 1}\n')
    with pytest.raises(ValidationError, match="line 2"):
        read_demonstrations(path)


def test_load_robot_fixture_paths():
    assert load_robot(DATA / "mobile_gen3.urdf").name
