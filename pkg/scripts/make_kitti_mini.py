"""Regenerate tests/data/kitti_mini, a 50-frame synthetic tracking split.

The split holds KITTI-format ground-truth labels (``label_02/0000.txt``)
and a tracklite sequence with pre-fused detection files for the same
frames. Output is a pure function of the seed.

    python scripts/make_kitti_mini.py [--out tests/data/kitti_mini] [--seed 7]
"""

from __future__ import annotations

import argparse
import math
from pathlib import Path

import numpy as np

from tracklite.clustering import Detection3D
from tracklite.geometry import Point3, RigidTransform, project
from tracklite.io import KITTI_TYPES, KittiTrackRecord, write_ground_truth, write_kitti_results, write_sequence
from tracklite.metrics import Trajectory
from tracklite.scenario_sim import SIM_CAMERA
from tracklite.tracker import FrameInput

N_FRAMES = 50
RATE = 10.0
EGO_SPEED = 5.0
SENSOR_HEIGHT = 1.7

# (class, start xy in the map, velocity xy, (height, width, length))
OBJECTS = [
    ("car", (15.0, -3.5), (7.0, 0.0), (1.5, 1.8, 4.5)),
    ("car", (30.0, 3.5), (-6.0, 0.0), (1.5, 1.8, 4.5)),
    ("pedestrian", (12.0, 6.0), (0.0, -1.4), (1.7, 0.6, 0.6)),
    ("pedestrian", (20.0, -6.0), (0.3, 1.0), (1.7, 0.6, 0.6)),
    ("cyclist", (8.0, -1.5), (5.5, 0.0), (1.7, 0.6, 1.8)),
    ("car", (48.0, 0.5), (2.0, 0.0), (1.5, 1.8, 4.5)),
]


def _visible(p_sensor: np.ndarray, p_cam: np.ndarray) -> bool:
    if not (0.0 < p_sensor[0] <= 40.0 and abs(p_sensor[1]) <= 15.0) or p_cam[2] < 2.0:
        return False
    px = project(p_cam, SIM_CAMERA.intrinsics)
    K = SIM_CAMERA.intrinsics
    return 0.0 <= px.u < K.width and 0.0 <= px.v < K.height


def _box(p_cam: np.ndarray, width: float, height: float) -> tuple[float, float, float, float]:
    K = SIM_CAMERA.intrinsics
    px = project(p_cam, K)
    w, h = K.fx * width / p_cam[2], K.fy * height / p_cam[2]
    return px.u - w / 2, px.v - h / 2, px.u + w / 2, px.v + h / 2


def build(out: Path, seed: int) -> None:
    rng = np.random.default_rng(seed)
    times = np.arange(N_FRAMES) / RATE
    poses = [RigidTransform(np.eye(3), [-EGO_SPEED * t, 0.0, -SENSOR_HEIGHT]) for t in times]
    labels, frames = [], []
    gt_rows: dict[int, list] = {}
    for k, (t, pose) in enumerate(zip(times, poses)):
        to_cam = SIM_CAMERA.T_cam_lidar @ pose
        dets = []
        for oid, (cls, start, vel, (h, w, l)) in enumerate(OBJECTS):
            p_map = np.array([start[0] + vel[0] * t, start[1] + vel[1] * t, h / 2])
            p_s, p_cam = pose.apply(p_map), to_cam.apply(p_map)
            if not _visible(p_s, p_cam):
                continue
            box = _box(p_cam, w, h)
            heading = math.atan2(vel[1], vel[0])
            labels.append(KittiTrackRecord(
                frame=k, track_id=oid, type=KITTI_TYPES[cls], truncated=0.0, occluded=0,
                alpha=-10.0, bbox=box, dimensions=(h, w, l),
                location=(float(p_cam[0]), float(p_cam[1] + h / 2), float(p_cam[2])),
                rotation_y=-heading,
            ))
            gt_rows.setdefault(oid, []).append((t, p_map, vel))
            if rng.random() < 0.05:
                continue
            noisy = p_s + rng.normal(0.0, 0.1, 3)
            bw = box[2] - box[0] + rng.normal(0.0, 2.0)
            bh = box[3] - box[1] + rng.normal(0.0, 2.0)
            dets.append(Detection3D(Point3.from_array(noisy), cls, round(float(rng.uniform(0.6, 0.95)), 3),
                                    max(bw, 2.0), max(bh, 2.0)))
        for _ in range(rng.poisson(0.3)):
            p = np.array([rng.uniform(5.0, 35.0), rng.uniform(-10.0, 10.0), rng.uniform(-1.2, 0.0)])
            dets.append(Detection3D(Point3.from_array(p), str(rng.choice(["car", "pedestrian", "cyclist"])),
                                    0.4, 30.0, 40.0))
        frames.append(FrameInput(float(t), pose, tuple(dets)))

    write_sequence(out, frames, "kitti-mini-0000", SIM_CAMERA, {"source": "scripts/make_kitti_mini.py", "seed": seed})
    write_kitti_results(labels, out / "label_02" / "0000.txt")
    trajs = []
    for oid, rows in sorted(gt_rows.items()):
        trajs.append(Trajectory(oid, OBJECTS[oid][0], [r[0] for r in rows], [r[1] for r in rows],
                                [r[2] for r in rows]))
    write_ground_truth(out / "gt.csv", trajs, {float(t): k for k, t in enumerate(times)})


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "tests/data/kitti_mini")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    build(args.out, args.seed)


if __name__ == "__main__":
    main()
