"""Command line front-end: ``mmtaskgen {generate,batch,validate,inspect}``.

Every command exits 0 only when no task hit a stage error.
"""
import argparse
import json
import sys
from pathlib import Path

from .errors import MMTaskGenError, StageError
from .goals.candidates import generate_grasp_candidates
from .goals.feasibility import READY_ARM
from .metrics import evaluate
from .sampler import sample_poses
from .scene_io import load_scene, read_demonstrations
from .scene_io.dataset import encode_record
from .support import MIN_ABS_NZ, extract_planes, support_of
from .taskgen.batch import run_batch
from .taskgen.config import load_config
from .taskgen.pipeline import TaskFailure, generate_task, task_scene
from .taskgen.spec import SPLITS, TaskSpec


def _emit(text, out):
    if out is None:
        sys.stdout.write(text + "\n")
    else:
        Path(out).write_text(text + "\n", encoding="utf-8")


def cmd_generate(args):
    cfg = load_config(args.config)
    spec = TaskSpec(args.action, args.target, args.base, args.arm or READY_ARM, args.scene, args.robot,
                    seed=args.seed, split=args.split, support_link=args.support)
    res = generate_task(spec, cfg)
    if isinstance(res, TaskFailure):
        print(f"failed at stage {res.stage}: {res.error}", file=sys.stderr)
        return 1
    _emit(encode_record(res), args.out)
    return 0


def cmd_batch(args):
    cfg = load_config(args.config) if args.config else None
    summary = run_batch(args.manifest, args.out, workers=args.workers, config=cfg, max_tasks=args.max_tasks)
    print(json.dumps(summary.to_dict(), indent=2))
    return 0 if summary.failed == 0 else 1


def cmd_validate(args):
    cfg = load_config(args.config)
    base_dir = args.base_dir or Path(args.dataset).parent
    bad = 0
    for rec in read_demonstrations(args.dataset):
        spec = rec.task
        if args.scene or args.robot:
            spec = TaskSpec.from_dict({**spec.to_dict(), "scene_file": args.scene or spec.scene_file,
                                       "robot_file": args.robot or spec.robot_file})
        try:
            scene, robot = task_scene(spec, cfg, base_dir)
            report = evaluate(rec.trajectory, spec, scene, robot, rec.goal)
        except StageError as exc:
            print(f"{spec.task_id}: {exc}", file=sys.stderr)
            bad += 1
            continue
        ok = report.success and report.success == rec.metrics.success
        bad += not ok
        d = report.to_dict()
        d.pop("solve_time", None)
        print(json.dumps({"task_id": spec.task_id, "ok": ok, **d}, sort_keys=True))
    return 0 if bad == 0 else 1


def cmd_inspect(args):
    """Plot-ready dump: planes, placement samples and grasp candidates."""
    cfg = load_config(args.config)
    scene = load_scene(args.scene)
    planes = extract_planes(scene, min_abs_nz=MIN_ABS_NZ)
    dump = {"planes": [{"link": p.link, "normal": p.normal.tolist(), "offset": p.offset,
                        "outline": p.outline.tolist()} for p in planes]}
    if args.target:
        sup = support_of(scene, args.target, cfg.theta_d, cfg.theta_a)
        dump["support"] = {"link": sup.link, "normal": sup.normal.tolist(), "offset": sup.offset}
        samples = sample_poses(args.target, scene, args.samples, args.seed, cfg.theta_d, cfg.theta_a,
                               support=sup)
        dump["samples"] = [s.pose.as_matrix()[:3, 3].tolist() for s in samples]
        cands = generate_grasp_candidates(scene.link(args.target), args.candidates, args.seed,
                                          world=scene.link_pose(args.target).as_matrix())
        dump["candidates"] = [{"position": c.pose.as_matrix()[:3, 3].tolist(),
                               "approach": c.pose.as_matrix()[:3, 2].tolist(),
                               "energy": c.energy, "kind": c.kind} for c in cands]
    _emit(json.dumps(dump), args.out)
    return 0


def build_parser():
    ap = argparse.ArgumentParser(prog="mmtaskgen", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a single task")
    g.add_argument("--scene", required=True)
    g.add_argument("--robot", required=True)
    g.add_argument("--action", choices=["pick", "place", "Pick", "Place"], default="Pick")
    g.add_argument("--target", required=True)
    g.add_argument("--support", default=None, help="destination link for place tasks")
    g.add_argument("--base", type=float, nargs=3, default=[0.0, 0.0, 0.0], metavar=("X", "Y", "THETA"))
    g.add_argument("--arm", type=float, nargs="+", default=None)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--split", choices=SPLITS, default="Train")
    g.add_argument("--config", default=None)
    g.add_argument("--out", default=None)
    g.set_defaults(func=cmd_generate)

    b = sub.add_parser("batch", help="generate every task of a manifest (resumable)")
    b.add_argument("manifest")
    b.add_argument("--out", required=True)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--config", default=None)
    b.add_argument("--max-tasks", type=int, default=None)
    b.set_defaults(func=cmd_batch)

    v = sub.add_parser("validate", help="re-score an existing dataset")
    v.add_argument("dataset")
    v.add_argument("--scene", default=None)
    v.add_argument("--robot", default=None)
    v.add_argument("--base-dir", default=None, help="directory task file paths are relative to")
    v.add_argument("--config", default=None)
    v.set_defaults(func=cmd_validate)

    i = sub.add_parser("inspect", help="dump planes, samples and candidates for a scene")
    i.add_argument("--scene", required=True)
    i.add_argument("--target", default=None)
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--samples", type=int, default=20)
    i.add_argument("--candidates", type=int, default=16)
    i.add_argument("--config", default=None)
    i.add_argument("--out", default=None)
    i.set_defaults(func=cmd_inspect)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (MMTaskGenError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
