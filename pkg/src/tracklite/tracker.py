"""Per-frame tracking loop and track lifecycle management.

Every observation founds a trial track. A trial track is dropped the first
frame it goes unmatched and is confirmed after ``promotion_threshold``
consecutive hits. Confirmed tracks coast through misses and are deleted
after ``deletion_threshold`` consecutive unmatched frames.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .association import GateCandidate, associate, gate_radius
from .clustering import BoundingBox2D, Detection3D, PointCloud, fuse
from .config import PipelineConfig
from .errors import NonMonotonicTimestamp
from .filter import HOM, NoiseConfig, ObjectState, deaugment, initial_state, predict_batch, update_map_batch
from .geometry import CameraIntrinsics, RigidTransform, invert

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CameraSetup:
    intrinsics: CameraIntrinsics
    T_cam_lidar: RigidTransform


@dataclass(frozen=True, eq=False)
class FrameInput:
    """One time step.

    ``ego_pose`` maps map-frame points into the sensor frame. In fused mode
    ``detections`` carries sensor-frame measurements; in raw mode ``cloud``,
    ``boxes`` and ``camera`` are fused first.
    """

    timestamp: float
    ego_pose: RigidTransform
    detections: tuple[Detection3D, ...] = ()
    cloud: PointCloud | None = None
    boxes: tuple[BoundingBox2D, ...] = ()
    camera: CameraSetup | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "detections", tuple(self.detections))
        object.__setattr__(self, "boxes", tuple(self.boxes))

    @property
    def is_raw(self) -> bool:
        return self.cloud is not None


@dataclass(eq=False)
class Track:
    id: int
    cls: str
    confidence: float
    state_aug: np.ndarray = field(repr=False)
    cov_aug: np.ndarray = field(repr=False)
    missed_frames: int = 0
    is_trial: bool = True
    consecutive_hits: int = 1
    age_frames: int = 0

    @property
    def state(self) -> ObjectState:
        return ObjectState.from_array(self.state_aug)

    @property
    def cov(self) -> np.ndarray:
        return deaugment(self.state_aug, self.cov_aug)[1]

    @property
    def position(self) -> np.ndarray:
        return self.state_aug[:3]

    @property
    def speed(self) -> float:
        return float(np.hypot(self.state_aug[4], self.state_aug[5]))


@dataclass(frozen=True)
class TrackSnapshot:
    track_id: int
    cls: str
    confidence: float
    position: tuple[float, float, float]
    velocity: tuple[float, float]
    box: tuple[float, float]
    age_frames: int


@dataclass(frozen=True)
class TrackerOutput:
    timestamp: float
    tracks: tuple[TrackSnapshot, ...]

    def __len__(self) -> int:
        return len(self.tracks)


def promote(track: Track, promotion_threshold: int = 3) -> Track:
    """End the trial period once enough consecutive hits have accrued."""
    if not track.is_trial:
        return track
    if track.consecutive_hits >= promotion_threshold:
        return replace(track, is_trial=False)
    return track


class Tracker:
    """Single-writer tracker; ``step`` must not run concurrently with itself."""

    def __init__(self, config: PipelineConfig | None = None):
        self.config = (config or PipelineConfig()).validate()
        self.noise = NoiseConfig.from_config(self.config.filter)
        self._Q_aug = self.noise.Q_aug
        self._R = self.noise.R
        self.tracks: list[Track] = []
        self.last_timestamp: float | None = None
        self._next_id = 0

    def reset(self) -> None:
        """Forget all tracks; ids keep counting up."""
        self.tracks = []
        self.last_timestamp = None

    @property
    def next_id(self) -> int:
        return self._next_id

    def _detections_for(self, frame: FrameInput) -> Sequence[Detection3D]:
        if self.config.tracker.mode == "raw":
            if frame.cloud is None or frame.camera is None:
                raise ValueError("raw mode needs a point cloud and camera calibration per frame")
            return fuse(frame.cloud, list(frame.boxes), frame.camera.intrinsics, frame.camera.T_cam_lidar,
                        self.config)
        return frame.detections

    def step(self, frame: FrameInput) -> TrackerOutput:
        cfg = self.config
        dt = None
        if self.last_timestamp is not None:
            if not frame.timestamp > self.last_timestamp:
                raise NonMonotonicTimestamp(
                    f"timestamp {frame.timestamp!r} does not follow {self.last_timestamp!r}"
                )
            dt = frame.timestamp - self.last_timestamp
        self.last_timestamp = frame.timestamp

        # (1) predict, coasting included
        if self.tracks and dt is not None:
            X = np.stack([t.state_aug for t in self.tracks])
            P = np.stack([t.cov_aug for t in self.tracks])
            X, P = predict_batch(X, P, dt, self._Q_aug)
            for t, x, p in zip(self.tracks, X, P):
                t.state_aug, t.cov_aug = x, p
                t.age_frames += 1

        # (2) detections, fusing raw sensor data if needed
        detections = list(self._detections_for(frame))
        ego = frame.ego_pose
        if detections:
            sensor_meas = np.array([d.measurement_vector() for d in detections])
            map_pos = invert(ego).apply(sensor_meas[:, :3])
        else:
            sensor_meas = np.empty((0, 5))
            map_pos = np.empty((0, 3))

        # (3) associate in the map frame
        gate_dt = dt if dt is not None else 0.1
        candidates = [
            GateCandidate(t.id, t.cls, t.position, gate_radius(t.cls, t.speed, gate_dt, cfg.gate), t.age_frames)
            for t in self.tracks
        ]
        map_dets = [_MapDetection(p, d.cls) for p, d in zip(map_pos, detections)]
        assignment = associate(candidates, map_dets)
        by_id = {t.id: t for t in self.tracks}

        # (4) update matched tracks
        if assignment.pairs:
            matched = [by_id[tid] for tid, _ in assignment.pairs]
            det_idx = [j for _, j in assignment.pairs]
            X = np.stack([t.state_aug for t in matched])
            P = np.stack([t.cov_aug for t in matched])
            X, P = update_map_batch(X, P, sensor_meas[det_idx], ego, self._R)
            X[:, HOM] = 1.0
            a = cfg.tracker.confidence_alpha
            for t, x, p, j in zip(matched, X, P, det_idx):
                t.state_aug, t.cov_aug = x, p
                t.missed_frames = 0
                t.consecutive_hits += 1
                t.confidence = (1.0 - a) * t.confidence + a * detections[j].confidence

        # (5) misses: trials die immediately, confirmed tracks count up
        dead = set()
        for tid in assignment.unmatched_tracks:
            t = by_id[tid]
            t.consecutive_hits = 0
            if t.is_trial:
                dead.add(tid)
            else:
                t.missed_frames += 1
        # (6) lazy deletion of confirmed tracks
        for t in self.tracks:
            if not t.is_trial and t.missed_frames >= cfg.tracker.deletion_threshold:
                dead.add(t.id)
        if dead:
            log.debug("deleting tracks %s", sorted(dead))
            self.tracks = [t for t in self.tracks if t.id not in dead]

        # (7) every unclaimed detection founds a trial track
        for j in assignment.unmatched_detections:
            d = detections[j]
            x, p = initial_state(sensor_meas[j], ego, cfg.filter)
            self.tracks.append(Track(self._next_id, d.cls, float(d.confidence), x, p))
            self._next_id += 1

        # (8) promotion
        M = cfg.tracker.promotion_threshold
        self.tracks = [promote(t, M) for t in self.tracks]
        return self.output(frame.timestamp)

    def output(self, timestamp: float) -> TrackerOutput:
        snaps = []
        for t in sorted(self.tracks, key=lambda t: t.id):
            if t.is_trial:
                continue
            x = t.state_aug
            snaps.append(TrackSnapshot(
                track_id=t.id,
                cls=t.cls,
                confidence=float(t.confidence),
                position=(float(x[0]), float(x[1]), float(x[2])),
                velocity=(float(x[4]), float(x[5])),
                box=(float(x[6]), float(x[7])),
                age_frames=t.age_frames,
            ))
        return TrackerOutput(timestamp, tuple(snaps))

    def run(self, frames) -> list[TrackerOutput]:
        return [self.step(f) for f in frames]


@dataclass(frozen=True, eq=False)
class _MapDetection:
    position: np.ndarray
    cls: str
