"""Scene and robot descriptions: URDF-subset parsing, models and serialization."""
from .dataset import DatasetWriteError, encode_record, read_demonstrations, write_demonstrations
from .model import Joint, Link, RobotModel, SceneModel
from .urdf import dump_robot, dump_scene, load_robot, load_scene, parse_robot, parse_scene

__all__ = [
    "DatasetWriteError",
    "Joint",
    "Link",
    "RobotModel",
    "SceneModel",
    "dump_robot",
    "dump_scene",
    "encode_record",
    "load_robot",
    "load_scene",
    "parse_robot",
    "parse_scene",
    "read_demonstrations",
    "write_demonstrations",
]
