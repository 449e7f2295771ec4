"""Synthetic single-pedestrian sequences with exact ground truth.

The map frame has x along the ego vehicle's initial heading, y to the left
and z up, with the ground at z = 0. The ego vehicle starts at the origin and
drives along +x. Its sensor sits ``sensor_height`` above the ground.

Scenario kinds:

* ``lateral``: straight crossing perpendicular to the ego heading at
  ``target_distance`` ahead.
* ``longitudinal_toward`` / ``longitudinal_away``: straight walk along the
  ego heading, ``lateral_offset`` to the side.
* ``zigzag``: walk toward the ego vehicle in legs alternating +/-45 degrees.
* ``curve``: parabolic arc that bows toward the ego vehicle.
* ``wait``: the ego vehicle drives for half the sequence and stops; the
  pedestrian waits, then crosses laterally.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .clustering import BoundingBox2D, Detection3D, PointCloud
from .config import RoiConfig
from .geometry import CameraIntrinsics, Point3, RigidTransform, lidar_to_camera_rotation, project_points
from .metrics import Trajectory
from .tracker import CameraSetup, FrameInput

KINDS = ("lateral", "longitudinal_toward", "longitudinal_away", "zigzag", "curve", "wait")

PEDESTRIAN_WIDTH = 0.6
PEDESTRIAN_HEIGHT = 1.7
BLOB_RADIUS = 0.4

# KITTI-like colour camera, mounted just below and ahead of the LIDAR.
SIM_INTRINSICS = CameraIntrinsics(fx=721.5, fy=721.5, cx=609.6, cy=172.9, width=1242, height=375)
_CAMERA_IN_LIDAR = np.array([0.25, 0.0, -0.1])
SIM_CAMERA = CameraSetup(
    SIM_INTRINSICS,
    RigidTransform(lidar_to_camera_rotation(), -lidar_to_camera_rotation() @ _CAMERA_IN_LIDAR),
)


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str = "lateral"
    target_distance: float = 10.0
    pedestrian_speed: float = 1.5
    ego_speed: float = 0.0
    duration: float = 10.0
    rate: float = 10.0
    seed: int = 0
    lateral_offset: float = 2.0
    leg_length: float = 3.0
    curve_depth: float = 3.0
    sensor_height: float = 1.7
    centroid_height: float = 0.85
    start_time: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if not (self.rate > 0 and self.duration > 0):
            raise ValueError("rate and duration must be positive")
        if self.pedestrian_speed < 0 or self.ego_speed < 0:
            raise ValueError("speeds must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> ScenarioSpec:
        types = {f.name: f.type for f in fields(cls)}
        out = {}
        for k, v in d.items():
            if k not in types:
                raise ValueError(f"unknown scenario field {k!r}")
            out[k] = v if types[k] == "str" else (int(v) if types[k] == "int" else float(v))
        return cls(**out)


@dataclass(frozen=True)
class NoiseSpec:
    centroid_sigma: float = 0.0  # per-axis std of the centroid error, metres
    dropout_prob: float = 0.0
    clutter_rate: float = 0.0  # mean false detections per frame
    box_sigma: float = 0.0  # pixels
    # when set, the centroid std grows as sigma * (1 + range / range_scale)
    range_scale: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.dropout_prob <= 1.0:
            raise ValueError("dropout_prob must lie in [0, 1]")
        if min(self.centroid_sigma, self.clutter_rate, self.box_sigma) < 0:
            raise ValueError("noise magnitudes must be non-negative")
        if self.range_scale is not None and not self.range_scale > 0:
            raise ValueError("range_scale must be positive")

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_dict(cls, d: dict) -> NoiseSpec:
        allowed = {f.name for f in fields(cls)}
        unknown = set(d) - allowed
        if unknown:
            raise ValueError(f"unknown noise fields {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})


def timestamps_for(spec: ScenarioSpec) -> np.ndarray:
    n = int(round(spec.duration * spec.rate)) + 1
    return spec.start_time + np.arange(n) / spec.rate


def _ego_x(spec: ScenarioSpec, tau: np.ndarray) -> np.ndarray:
    if spec.kind == "wait":
        return spec.ego_speed * np.minimum(tau, spec.duration / 2)
    return spec.ego_speed * tau


def _path(spec: ScenarioSpec, tau: np.ndarray, direction: int) -> tuple[np.ndarray, np.ndarray]:
    """Planar position (N, 2) and its analytic time derivative at times ``tau``."""
    s, d, T = spec.pedestrian_speed, spec.target_distance, spec.duration
    n = len(tau)
    pos = np.zeros((n, 2))
    vel = np.zeros((n, 2))
    kind = spec.kind
    if kind == "lateral":
        half = s * T / 2
        pos[:, 0] = d
        pos[:, 1] = direction * (-half + s * tau)
        vel[:, 1] = direction * s
    elif kind == "longitudinal_toward":
        pos[:, 0] = d - s * tau
        pos[:, 1] = spec.lateral_offset
        vel[:, 0] = -s
    elif kind == "longitudinal_away":
        pos[:, 0] = d + s * tau
        pos[:, 1] = spec.lateral_offset
        vel[:, 0] = s
    elif kind == "zigzag":
        c = math.cos(math.pi / 4)
        leg_t = spec.leg_length / s if s > 0 else math.inf
        leg = np.floor(tau / leg_t).astype(int) if s > 0 else np.zeros(n, dtype=int)
        within = tau - leg * leg_t if s > 0 else tau
        signs = direction * np.where(leg % 2 == 0, 1.0, -1.0)
        # completed legs alternate, so the lateral offset at a leg start is 0 or one leg's swing
        start_y = np.where(leg % 2 == 0, 0.0, direction * s * c * leg_t)
        pos[:, 0] = d - s * c * tau
        pos[:, 1] = start_y + signs * s * c * within
        vel[:, 0] = -s * c
        vel[:, 1] = signs * s * c
    elif kind == "curve":
        half = s * T / 2
        u = direction * (-half + s * tau)
        k = spec.curve_depth / half**2 if half > 0 else 0.0
        pos[:, 0] = d - spec.curve_depth + k * u**2
        pos[:, 1] = u
        vel[:, 0] = 2 * k * u * direction * s
        vel[:, 1] = direction * s
    elif kind == "wait":
        half_t = T / 2
        half = s * half_t / 2
        moving = tau > half_t
        pos[:, 0] = d
        pos[:, 1] = direction * (-half + s * np.clip(tau - half_t, 0.0, None))
        vel[:, 1] = np.where(moving, direction * s, 0.0)
    return pos, vel


def generate(spec: ScenarioSpec) -> tuple[Trajectory, list[RigidTransform]]:
    """Ground-truth pedestrian trajectory and per-frame ego poses.

    Each ego pose maps map-frame points into the sensor frame. The seed only
    picks the crossing direction (and the first zigzag swing), so the
    output is fully determined by ``spec``.
    """
    rng = np.random.default_rng(spec.seed)
    direction = int(rng.choice([-1, 1]))
    t = timestamps_for(spec)
    tau = t - spec.start_time
    xy, vxy = _path(spec, tau, direction)
    positions = np.column_stack([xy, np.full(len(t), spec.centroid_height)])
    gt = Trajectory(0, "pedestrian", t, positions, vxy)
    ego_x = _ego_x(spec, tau)
    poses = [RigidTransform(np.eye(3), [-ex, 0.0, -spec.sensor_height]) for ex in ego_x]
    return gt, poses


def sensor_positions(poses: list[RigidTransform]) -> np.ndarray:
    """Map-frame origin of the sensor for each pose."""
    return np.array([-(p.rotation.T @ p.translation) for p in poses])


def _box_size(depth: float, camera: CameraSetup) -> tuple[float, float]:
    K = camera.intrinsics
    depth = max(depth, 0.5)
    return K.fx * PEDESTRIAN_WIDTH / depth, K.fy * PEDESTRIAN_HEIGHT / depth


def _clutter(rng: np.random.Generator, rate: float, z: float, roi: RoiConfig) -> list[Detection3D]:
    out = []
    for _ in range(rng.poisson(rate)):
        x = rng.uniform(max(roi.forward_min, 1.0), roi.forward_max)
        y = rng.uniform(-roi.lateral_max, roi.lateral_max)
        w, h = _box_size(x, SIM_CAMERA)
        out.append(Detection3D(Point3(x, y, z), "pedestrian", 0.5, w, h))
    return out


def corrupt(
    gt: Trajectory,
    ego_poses: list[RigidTransform],
    noise: NoiseSpec,
    seed: int = 0,
    camera: CameraSetup = SIM_CAMERA,
    roi: RoiConfig = RoiConfig(),
) -> list[FrameInput]:
    """Pre-fused sensor-frame detections: dropout, Gaussian noise and clutter."""
    rng = np.random.default_rng(seed)
    frames = []
    for t, p_map, pose in zip(gt.timestamps, gt.positions, ego_poses):
        p_s = pose.apply(p_map)
        drop = rng.random() < noise.dropout_prob
        sigma = noise.centroid_sigma
        if noise.range_scale is not None:
            sigma *= 1.0 + float(np.linalg.norm(p_s)) / noise.range_scale
        err = rng.normal(0.0, 1.0, 3) * sigma
        box_err = rng.normal(0.0, 1.0, 2) * noise.box_sigma
        dets = []
        if not drop:
            w, h = _box_size(p_s[0], camera)
            dets.append(Detection3D(
                Point3.from_array(p_s + err), "pedestrian", 0.9,
                max(1.0, w + box_err[0]), max(1.0, h + box_err[1]),
            ))
        z_clutter = float(p_s[2])
        dets.extend(_clutter(rng, noise.clutter_rate, z_clutter, roi))
        frames.append(FrameInput(float(t), pose, tuple(dets)))
    return frames


def pedestrian_blob(rng: np.random.Generator, centre_xy, ground_z: float, n: int) -> np.ndarray:
    """Points on a standing pedestrian: Gaussian footprint clipped to 0.4 m radius."""
    offsets = np.empty((0, 2))
    while len(offsets) < n:
        draw = rng.normal(0.0, BLOB_RADIUS / 2, size=(2 * n, 2))
        offsets = np.vstack([offsets, draw[np.hypot(draw[:, 0], draw[:, 1]) <= BLOB_RADIUS]])
    offsets = offsets[:n]
    z = ground_z + rng.uniform(0.0, PEDESTRIAN_HEIGHT, size=n)
    return np.column_stack([centre_xy[0] + offsets[:, 0], centre_xy[1] + offsets[:, 1], z])


def ground_points(rng: np.random.Generator, n: int, ground_z: float, roi: RoiConfig = RoiConfig(),
                  jitter: float = 0.02) -> np.ndarray:
    x = rng.uniform(max(roi.forward_min, 0.5), roi.forward_max, n)
    y = rng.uniform(-roi.lateral_max, roi.lateral_max, n)
    return np.column_stack([x, y, ground_z + rng.normal(0.0, jitter, n)])


def blob_box(points: np.ndarray, camera: CameraSetup) -> tuple[float, float, float, float] | None:
    """Tight image box around the projection of ``points``, clipped to the image."""
    K = camera.intrinsics
    uv, front = project_points(camera.T_cam_lidar.apply(points), K)
    if not front.any():
        return None
    uv = uv[front]
    u0, v0 = max(0.0, uv[:, 0].min()), max(0.0, uv[:, 1].min())
    u1, v1 = min(K.width - 1.0, uv[:, 0].max()), min(K.height - 1.0, uv[:, 1].max())
    if not (u0 < u1 and v0 < v1):
        return None
    return u0, v0, u1, v1


def render_raw(
    gt: Trajectory,
    ego_poses: list[RigidTransform],
    noise: NoiseSpec,
    seed: int = 0,
    camera: CameraSetup = SIM_CAMERA,
    n_ground: int = 4000,
    density: float = 20000.0,
    sensor_height: float = 1.7,
) -> list[FrameInput]:
    """Raw frames: ground plane plus a pedestrian blob, and a 2D box for it.

    The blob holds about ``density / range**2`` points, so far targets are
    sparse.
    """
    rng = np.random.default_rng(seed)
    frames = []
    ground_z = -sensor_height
    for t, p_map, pose in zip(gt.timestamps, gt.positions, ego_poses):
        p_s = pose.apply(p_map)
        rng_m = float(np.hypot(p_s[0], p_s[1]))
        n_blob = max(3, int(round(density / max(rng_m, 1.0) ** 2)))
        blob = pedestrian_blob(rng, p_s[:2], ground_z, n_blob)
        cloud = np.vstack([ground_points(rng, n_ground, ground_z), blob])
        boxes = []
        if rng.random() >= noise.dropout_prob:
            corners = pedestrian_blob(rng, p_s[:2], ground_z, 64)
            corners[:, 2] = np.where(np.arange(64) % 2 == 0, ground_z, ground_z + PEDESTRIAN_HEIGHT)
            box = blob_box(corners, camera)
            if box is not None:
                du = rng.normal(0.0, noise.box_sigma, 2)
                u0, v0, u1, v1 = box
                boxes.append(BoundingBox2D(u0 + du[0], v0 + du[1], u1 + du[0], v1 + du[1], "pedestrian", 0.9))
        frames.append(FrameInput(float(t), pose, (), PointCloud(cloud, float(t)), tuple(boxes), camera))
    return frames
