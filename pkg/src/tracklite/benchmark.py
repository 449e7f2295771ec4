"""Latency measurements for the tracker step and the clustering front end."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .clustering import BoundingBox2D, Detection3D, PointCloud, fuse
from .config import PipelineConfig
from .geometry import Point3, RigidTransform
from .scenario_sim import SIM_CAMERA, blob_box, ground_points, pedestrian_blob
from .tracker import FrameInput, Tracker


@dataclass(frozen=True)
class LatencyStats:
    name: str
    n: int
    p50_ms: float
    p95_ms: float
    max_ms: float
    mean_ms: float

    @classmethod
    def from_seconds(cls, name: str, samples) -> LatencyStats:
        ms = np.asarray(samples, dtype=np.float64) * 1e3
        return cls(name, len(ms), float(np.percentile(ms, 50)), float(np.percentile(ms, 95)),
                   float(ms.max()), float(ms.mean()))

    def as_row(self) -> dict:
        return {"stage": self.name, "n": self.n, "p50_ms": self.p50_ms, "p95_ms": self.p95_ms,
                "max_ms": self.max_ms, "mean_ms": self.mean_ms}


def _grid(n: int, spacing: float) -> np.ndarray:
    side = int(np.ceil(np.sqrt(n)))
    ij = np.array([(i, j) for i in range(side) for j in range(side)][:n], dtype=np.float64)
    return np.column_stack([2.0 + ij[:, 0] * spacing, (ij[:, 1] - side / 2) * spacing, np.zeros(n)])


def tracker_latencies(n_tracks: int = 100, n_detections: int = 100, iters: int = 200, seed: int = 0,
                      config: PipelineConfig | None = None) -> np.ndarray:
    """Seconds per ``Tracker.step`` with ``n_tracks`` confirmed tracks alive.

    Objects sit on a grid wider than the gates and drift at walking pace,
    so every step predicts, associates and updates the full population.
    Detections beyond ``n_tracks`` are spread elsewhere as clutter.
    """
    rng = np.random.default_rng(seed)
    tracker = Tracker(config)
    base = _grid(max(n_tracks, n_detections), 3.0)
    vel = rng.uniform(-1.0, 1.0, size=(len(base), 3)) * [1, 1, 0]
    ego = RigidTransform.identity()
    out = []
    warmup = tracker.config.tracker.promotion_threshold + 2
    for k in range(warmup + iters):
        t = 0.1 * k
        pts = base + vel * t + rng.normal(0.0, 0.05, size=base.shape)
        dets = [Detection3D(Point3.from_array(p), "pedestrian", 0.9, 40.0, 100.0) for p in pts[:n_detections]]
        if k < warmup:
            dets = dets[:n_tracks]
        frame = FrameInput(t, ego, tuple(dets))
        t0 = time.perf_counter()
        tracker.step(frame)
        dt = time.perf_counter() - t0
        if k >= warmup:
            out.append(dt)
    return np.array(out)


def synthetic_scene(n_points: int = 50_000, n_boxes: int = 10, seed: int = 0):
    """A ground plane with ``n_boxes`` pedestrian blobs, and a box per blob."""
    rng = np.random.default_rng(seed)
    ground_z = -1.7
    per_blob = 200
    fwd = np.linspace(6.0, 30.0, n_boxes)
    centres = np.column_stack([fwd, 0.4 * fwd * np.where(np.arange(n_boxes) % 2 == 0, 1.0, -1.0)])
    blobs, boxes = [], []
    for c in centres:
        blobs.append(pedestrian_blob(rng, c, ground_z, per_blob))
        corners = pedestrian_blob(rng, c, ground_z, 64)
        corners[:, 2] = np.where(np.arange(64) % 2 == 0, ground_z, ground_z + 1.7)
        b = blob_box(corners, SIM_CAMERA)
        if b is not None:
            boxes.append(BoundingBox2D(*b, "pedestrian", 0.9))
    n_ground = max(0, n_points - per_blob * n_boxes)
    pts = np.vstack([ground_points(rng, n_ground, ground_z), *blobs])
    return PointCloud(pts, 0.0), boxes


def clustering_latencies(n_points: int = 50_000, n_boxes: int = 10, iters: int = 30, seed: int = 0,
                         config: PipelineConfig | None = None) -> np.ndarray:
    """Seconds per full ``fuse`` call on a synthetic scene."""
    cfg = config or PipelineConfig()
    cloud, boxes = synthetic_scene(n_points, n_boxes, seed)
    fuse(cloud, boxes, SIM_CAMERA.intrinsics, SIM_CAMERA.T_cam_lidar, cfg)
    out = []
    for _ in range(iters):
        t0 = time.perf_counter()
        fuse(cloud, boxes, SIM_CAMERA.intrinsics, SIM_CAMERA.T_cam_lidar, cfg)
        out.append(time.perf_counter() - t0)
    return np.array(out)
