"""Command-line entry points: ``track``, ``evaluate``, ``simulate``, ``benchmark``.

Exit status is 0 on success, 1 for bad usage or invalid inputs and 2 for
failures while running. Diagnostics go to stderr; reports go to ``--out``
or stdout as CSV. Set ``TRACKLITE_LOG`` (e.g. ``DEBUG``) for verbose logs.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import io as tio
from .benchmark import LatencyStats, clustering_latencies, tracker_latencies
from .config import CLASSES
from .errors import MissingFile, NoOverlap, ParseError, TrackliteError, ValidationError
from .metrics import MOT_COLUMNS, clear_mot, dominant_track, format_table, rmse, to_csv
from .scenario_sim import KINDS, SIM_CAMERA, NoiseSpec, ScenarioSpec, corrupt, generate, render_raw
from .tracker import Tracker, TrackerOutput, TrackSnapshot

log = logging.getLogger("tracklite")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with status 2
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tracklite", description="LIDAR/camera fusion and multi-object tracking.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("track", help="run the tracker over a recorded or simulated sequence")
    t.add_argument("--manifest", required=True, type=Path)
    t.add_argument("--config", type=Path, help="TOML file; missing sections keep their defaults")
    t.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override one configuration value (repeatable)")
    t.add_argument("--out", required=True, type=Path)
    t.add_argument("--mode", choices=["raw", "fused"], help="raw: cluster point clouds; fused: use detection files")
    t.add_argument("--format", choices=["csv", "kitti"], default="csv")
    t.add_argument("--seed", type=int, help="seed for the ground-plane RANSAC")

    e = sub.add_parser("evaluate", help="CLEAR MOT (and RMSE) of hypotheses against ground truth")
    e.add_argument("--gt", required=True, type=Path, help="ground-truth CSV or KITTI label file")
    e.add_argument("--hyp", required=True, type=Path, help="track CSV or KITTI result file")
    e.add_argument("--match", choices=["center3d", "iou2d"], default="center3d")
    e.add_argument("--threshold", type=float, help="metres for center3d, minimum IoU for iou2d")
    e.add_argument("--out", type=Path)

    s = sub.add_parser("simulate", help="write a synthetic pedestrian sequence and its ground truth")
    s.add_argument("--out", required=True, type=Path, help="output directory")
    s.add_argument("--kind", choices=KINDS, default="lateral")
    s.add_argument("--distance", type=float, default=10.0, help="target distance in metres")
    s.add_argument("--speed", type=float, default=1.5, help="pedestrian speed, m/s")
    s.add_argument("--ego-speed", type=float, default=0.0)
    s.add_argument("--duration", type=float, default=10.0)
    s.add_argument("--rate", type=float, default=10.0)
    s.add_argument("--sigma", type=float, default=0.15, help="centroid noise std, metres")
    s.add_argument("--range-scale", type=float, help="grow sigma as (1 + range / RANGE_SCALE)")
    s.add_argument("--dropout", type=float, default=0.0)
    s.add_argument("--clutter", type=float, default=0.0, help="mean false detections per frame")
    s.add_argument("--box-sigma", type=float, default=0.0)
    s.add_argument("--mode", choices=["raw", "fused"], default="fused")
    s.add_argument("--seed", type=int, default=0)

    b = sub.add_parser("benchmark", help="latency percentiles of the tracker step and of clustering")
    b.add_argument("--tracks", type=int, default=100)
    b.add_argument("--detections", type=int, default=100)
    b.add_argument("--iters", type=int, default=200)
    b.add_argument("--points", type=int, default=50_000)
    b.add_argument("--boxes", type=int, default=10)
    b.add_argument("--cluster-iters", type=int, default=30)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", type=Path)
    return p


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text, encoding="utf-8")


def _cmd_track(args) -> int:
    overrides = list(args.overrides)
    if args.mode is not None:
        overrides.append(f'tracker.mode="{args.mode}"')
    if args.seed is not None:
        overrides.append(f"ground.seed={args.seed}")
    cfg = tio.load_config(args.config, overrides)
    manifest = tio.read_manifest(args.manifest)
    if args.format == "kitti" and manifest.camera is None:
        raise ValidationError("KITTI output needs intrinsics and cam_from_lidar in the manifest")
    if cfg.tracker.mode == "raw" and manifest.camera is None:
        raise ValidationError("raw mode needs intrinsics and cam_from_lidar in the manifest")
    frames = list(tio.load_sequence(args.manifest))
    tracker = Tracker(cfg)
    outputs: list[TrackerOutput] = []
    for f in frames:
        outputs.append(tracker.step(f))
    frame_ids = [r.frame for r in manifest.frames]
    if args.format == "kitti":
        tio.write_kitti_results(tio.kitti_records(outputs, frames, manifest.camera, frame_ids), args.out)
    else:
        tio.write_tracks(args.out, outputs, frame_ids)
    log.info("tracked %d frames, %d track ids", len(frames), tracker.next_id)
    return 0


def _is_kitti(path: Path) -> bool:
    return path.suffix.lower() != ".csv"


def _cmd_evaluate(args) -> int:
    rows = []
    if args.match == "iou2d":
        if not (_is_kitti(args.gt) and _is_kitti(args.hyp)):
            raise ValidationError("iou2d matching needs KITTI-format files for --gt and --hyp")
        gt = tio.mot_objects_from_kitti(tio.read_kitti_tracking(args.gt))
        hyp = tio.mot_objects_from_kitti(tio.read_kitti_tracking(args.hyp))
    else:
        if _is_kitti(args.gt) or _is_kitti(args.hyp):
            raise ValidationError("center3d matching needs ground-truth and track CSV files")
        trajs, gt_rows = tio.read_ground_truth(args.gt)
        hyp_rows = tio.read_tracks(args.hyp)
        gt = tio.mot_objects_from_rows(gt_rows, "obj_id")
        hyp = tio.mot_objects_from_rows(hyp_rows, "track_id")
    for cls in CLASSES:
        g = [o for o in gt if o.cls == cls]
        if not g:
            continue
        h = [o for o in hyp if o.cls == cls]
        report = clear_mot(g, h, args.threshold, args.match)
        rows.append({"class": cls, **report.as_row()})
    if not rows:
        raise ValidationError("ground truth holds no car, pedestrian or cyclist objects")
    columns = ["class", *MOT_COLUMNS]
    if args.match == "center3d":
        _add_rmse(rows, trajs, hyp_rows, args.threshold or 1.0)
        columns += ["position_rmse", "velocity_rmse"]
    text = to_csv(rows)
    if args.out is not None:
        _emit(text, args.out)
        print(format_table(rows, columns))
    else:
        _emit(text, None)
    return 0


def _add_rmse(rows: list[dict], trajs, hyp_rows: list[dict], threshold: float) -> None:
    """Per-class RMSE of each GT object's dominant track, pooled over objects."""
    outputs_by_t: dict[float, list] = {}
    for r in hyp_rows:
        outputs_by_t.setdefault(r["timestamp"], []).append(r)
    outputs = [
        TrackerOutput(t, tuple(
            TrackSnapshot(r["track_id"], r["class"], r["confidence"], (r["x"], r["y"], r["z"]),
                          (r["vx"], r["vy"]), (r["w"], r["h"]), 0)
            for r in rs
        ))
        for t, rs in sorted(outputs_by_t.items())
    ]
    for row in rows:
        sq_p = sq_v = 0.0
        n = 0
        for gt in (t for t in trajs if t.cls == row["class"]):
            est = dominant_track(gt, [replace(o, tracks=tuple(s for s in o.tracks if s.cls == gt.cls))
                                      for o in outputs], threshold)
            if est is None:
                continue
            try:
                rep = rmse(gt, est)
            except NoOverlap:
                continue
            sq_p += rep.position_rmse ** 2 * rep.n_samples
            sq_v += rep.velocity_rmse ** 2 * rep.n_samples
            n += rep.n_samples
        row["position_rmse"] = (sq_p / n) ** 0.5 if n else float("nan")
        row["velocity_rmse"] = (sq_v / n) ** 0.5 if n else float("nan")


def _cmd_simulate(args) -> int:
    try:
        spec = ScenarioSpec(kind=args.kind, target_distance=args.distance, pedestrian_speed=args.speed,
                            ego_speed=args.ego_speed, duration=args.duration, rate=args.rate, seed=args.seed)
        noise = NoiseSpec(centroid_sigma=args.sigma, dropout_prob=args.dropout, clutter_rate=args.clutter,
                          box_sigma=args.box_sigma, range_scale=args.range_scale)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    gt, poses = generate(spec)
    if args.mode == "raw":
        frames = render_raw(gt, poses, noise, seed=args.seed + 1000, sensor_height=spec.sensor_height)
    else:
        frames = corrupt(gt, poses, noise, seed=args.seed + 1000)
    meta = {f"scenario.{k}": v for k, v in spec.to_dict().items()}
    meta.update({f"noise.{k}": v for k, v in noise.to_dict().items()})
    tio.write_sequence(args.out, frames, f"sim-{spec.kind}-{args.seed}", SIM_CAMERA, meta)
    tio.write_ground_truth(args.out / "gt.csv", [gt])
    log.info("wrote %d frames to %s", len(frames), args.out)
    return 0


def _cmd_benchmark(args) -> int:
    if min(args.tracks, args.detections, args.iters, args.points, args.boxes, args.cluster_iters) < 0 \
            or args.iters == 0 or args.cluster_iters == 0:
        raise ValidationError("benchmark sizes must be non-negative and iteration counts positive")
    stats = [
        LatencyStats.from_seconds("tracker_step", tracker_latencies(args.tracks, args.detections, args.iters,
                                                                    args.seed)),
        LatencyStats.from_seconds("clustering", clustering_latencies(args.points, args.boxes, args.cluster_iters,
                                                                     args.seed)),
    ]
    rows = [s.as_row() for s in stats]
    if args.out is not None:
        _emit(to_csv(rows), args.out)
    print(format_table(rows, floatfmt=".2f"))
    return 0


_COMMANDS = {
    "track": _cmd_track,
    "evaluate": _cmd_evaluate,
    "simulate": _cmd_simulate,
    "benchmark": _cmd_benchmark,
}


def _configure_logging() -> None:
    level = os.environ.get("TRACKLITE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def run(argv: Sequence[str] | None = None) -> int:
    _configure_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (ValidationError, ParseError, MissingFile) as exc:
        print(f"tracklite: {exc}", file=sys.stderr)
        return 1
    except (TrackliteError, OSError, ValueError, ArithmeticError, LookupError) as exc:
        print(f"tracklite: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
