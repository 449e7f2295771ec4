"""Sequence ingestion and emission.

File formats (all text files are UTF-8 CSV with a header row; floats are
written with ``repr`` so they parse back bit-exactly):

* Sequence manifest: ``# key = value`` metadata lines, then the columns
  ``frame,timestamp,detections,cloud,boxes``. Paths are relative to the
  manifest. Metadata keys: ``sequence_id``; ``intrinsics`` (``fx fy cx cy
  width height``); ``cam_from_lidar`` (row-major rotation then translation,
  12 numbers, mapping LIDAR points into the camera frame); ``pose_log``.
  Any other key is kept verbatim in :attr:`SequenceManifest.metadata`.
* Detections: ``class,confidence,x,y,z,box_w,box_h`` (sensor frame).
* 2D boxes: ``class,confidence,u_min,v_min,u_max,v_max``.
* Pose log: ``timestamp,tx,ty,tz,qw,qx,qy,qz``, the sensor pose in the map
  frame. Frames take the nearest pose within 0.2 s.
* Point cloud: binary, little-endian. Header ``b"TLPC"``, uint32 version
  (1), uint32 point count, float64 timestamp; then float32 ``x, y, z``
  records.
* Tracks: ``frame,timestamp,track_id,class,confidence,x,y,z,vx,vy,w,h``.
* Ground truth: ``frame,timestamp,obj_id,class,x,y,z,vx,vy``.
* KITTI tracking: space separated ``frame id type truncated occluded alpha
  left top right bottom h w l x y z rotation_y [score]``. Fields the
  tracker does not estimate are written as the dev-kit placeholders
  (-1 for truncation/occlusion/dimensions, -10 for angles, -1000 for the
  3D location).
"""

from __future__ import annotations

import csv
import logging
import math
import struct
import sys
from bisect import bisect_left
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np
import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .clustering import BoundingBox2D, Detection3D, PointCloud
from .config import CLASSES, PipelineConfig
from .errors import MissingFile, ParseError, StalePose, ValidationError
from .geometry import CameraIntrinsics, Point3, RigidTransform, invert, project
from .metrics import MotObject, Trajectory
from .tracker import CameraSetup, FrameInput, TrackerOutput

log = logging.getLogger(__name__)

MANIFEST_COLUMNS = ["frame", "timestamp", "detections", "cloud", "boxes"]
DETECTION_COLUMNS = ["class", "confidence", "x", "y", "z", "box_w", "box_h"]
BOX_COLUMNS = ["class", "confidence", "u_min", "v_min", "u_max", "v_max"]
POSE_COLUMNS = ["timestamp", "tx", "ty", "tz", "qw", "qx", "qy", "qz"]
TRACK_COLUMNS = ["frame", "timestamp", "track_id", "class", "confidence", "x", "y", "z", "vx", "vy", "w", "h"]
GT_COLUMNS = ["frame", "timestamp", "obj_id", "class", "x", "y", "z", "vx", "vy"]

POSE_STALENESS = 0.2
CLOUD_MAGIC = b"TLPC"
CLOUD_VERSION = 1
_CLOUD_HEADER = struct.Struct("<4sIId")

KITTI_TYPES = {"car": "Car", "pedestrian": "Pedestrian", "cyclist": "Cyclist"}


def fmt(v: float) -> str:
    return repr(float(v))


def _float(raw: str, path, line: int, name: str) -> float:
    try:
        v = float(raw)
    except (TypeError, ValueError):
        raise ParseError(f"not a number: {raw!r}", path, line, name) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite value {raw!r}", path, line, name)
    return v


def _int(raw: str, path, line: int, name: str) -> int:
    try:
        return int(raw)
    except (TypeError, ValueError):
        raise ParseError(f"not an integer: {raw!r}", path, line, name) from None


def _read_csv(path, columns: Sequence[str]) -> Iterator[tuple[int, dict]]:
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"{path} does not exist")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = (line for line in fh if not line.startswith("#"))
        reader = csv.DictReader(rows)
        header = reader.fieldnames or []
        missing = [c for c in columns if c not in header]
        if missing:
            raise ParseError(f"missing columns {missing}", path, 1)
        for row in reader:
            if None in row or any(v is None for v in row.values()):
                raise ParseError("wrong number of fields", path, reader.line_num)
            yield reader.line_num, row


def _write_csv(path, columns: Sequence[str], rows: Iterable[Sequence], preamble: Sequence[str] = ()) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        for line in preamble:
            fh.write(line + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        writer.writerows(rows)


def _class(raw: str, path, line: int) -> str:
    if raw not in CLASSES:
        raise ParseError(f"unknown class {raw!r}", path, line, "class")
    return raw


# detections and boxes

def write_detections(path, detections: Iterable[Detection3D]) -> None:
    _write_csv(path, DETECTION_COLUMNS, (
        [d.cls, fmt(d.confidence), fmt(d.centroid.x), fmt(d.centroid.y), fmt(d.centroid.z),
         fmt(d.box_w), fmt(d.box_h)]
        for d in detections
    ))


def read_detections(path) -> list[Detection3D]:
    out = []
    for line, row in _read_csv(path, DETECTION_COLUMNS):
        vals = {k: _float(row[k], path, line, k) for k in DETECTION_COLUMNS[1:]}
        try:
            out.append(Detection3D(Point3(vals["x"], vals["y"], vals["z"]), _class(row["class"], path, line),
                                   vals["confidence"], vals["box_w"], vals["box_h"]))
        except ValueError as exc:
            raise ParseError(str(exc), path, line) from None
    return out


def write_boxes(path, boxes: Iterable[BoundingBox2D]) -> None:
    _write_csv(path, BOX_COLUMNS, (
        [b.cls, fmt(b.confidence), fmt(b.u_min), fmt(b.v_min), fmt(b.u_max), fmt(b.v_max)] for b in boxes
    ))


def read_boxes(path) -> list[BoundingBox2D]:
    out = []
    for line, row in _read_csv(path, BOX_COLUMNS):
        v = {k: _float(row[k], path, line, k) for k in BOX_COLUMNS[1:]}
        try:
            out.append(BoundingBox2D(v["u_min"], v["v_min"], v["u_max"], v["v_max"],
                                     _class(row["class"], path, line), v["confidence"]))
        except ValueError as exc:
            raise ParseError(str(exc), path, line) from None
    return out


# point clouds

def write_point_cloud(path, cloud: PointCloud) -> None:
    pts = np.ascontiguousarray(cloud.points, dtype="<f4")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(_CLOUD_HEADER.pack(CLOUD_MAGIC, CLOUD_VERSION, len(pts), float(cloud.timestamp)))
        fh.write(pts.tobytes())


def read_point_cloud(path) -> PointCloud:
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"{path} does not exist")
    data = path.read_bytes()
    if len(data) < _CLOUD_HEADER.size:
        raise ParseError("truncated point cloud header", path)
    magic, version, count, stamp = _CLOUD_HEADER.unpack_from(data)
    if magic != CLOUD_MAGIC or version != CLOUD_VERSION:
        raise ParseError("not a version-1 point cloud file", path)
    body = data[_CLOUD_HEADER.size:]
    if len(body) != count * 12:
        raise ParseError(f"expected {count} points, found {len(body) / 12:g}", path)
    pts = np.frombuffer(body, dtype="<f4").reshape(count, 3).astype(np.float64)
    if not np.all(np.isfinite(pts)) or not math.isfinite(stamp):
        raise ParseError("non-finite values in point cloud", path)
    return PointCloud(pts, stamp)


# ego poses

@dataclass(frozen=True)
class PoseLog:
    """Sensor poses in the map frame, looked up by nearest timestamp."""

    timestamps: tuple[float, ...]
    sensor_to_map: tuple[RigidTransform, ...]
    staleness: float = POSE_STALENESS

    def lookup(self, t: float) -> RigidTransform:
        """The map-to-sensor transform valid at ``t``."""
        ts = self.timestamps
        if not ts:
            raise StalePose("pose log is empty")
        i = bisect_left(ts, t)
        best = min((j for j in (i - 1, i) if 0 <= j < len(ts)), key=lambda j: (abs(ts[j] - t), j))
        if abs(ts[best] - t) > self.staleness:
            raise StalePose(f"no pose within {self.staleness} s of t={t!r}")
        return invert(self.sensor_to_map[best])


def write_pose_log(path, timestamps: Sequence[float], map_to_sensor: Sequence[RigidTransform]) -> None:
    rows = []
    for t, T in zip(timestamps, map_to_sensor):
        pose = invert(T)
        q = pose.quaternion_wxyz()
        rows.append([fmt(t), *map(fmt, pose.translation), *map(fmt, q)])
    _write_csv(path, POSE_COLUMNS, rows)


def read_pose_log(path) -> PoseLog:
    ts, poses = [], []
    for line, row in _read_csv(path, POSE_COLUMNS):
        v = [_float(row[k], path, line, k) for k in POSE_COLUMNS]
        if ts and v[0] <= ts[-1]:
            raise ParseError("pose timestamps must strictly increase", path, line, "timestamp")
        q = np.array(v[4:8])
        if np.linalg.norm(q) < 1e-9:
            raise ParseError("zero quaternion", path, line, "qw")
        ts.append(v[0])
        poses.append(RigidTransform.from_quaternion(v[1:4], q / np.linalg.norm(q)))
    return PoseLog(tuple(ts), tuple(poses))


# manifests

@dataclass(frozen=True)
class FrameRecord:
    frame: int
    timestamp: float
    detections: Path | None = None
    cloud: Path | None = None
    boxes: Path | None = None


@dataclass(frozen=True)
class SequenceManifest:
    path: Path
    sequence_id: str
    frames: tuple[FrameRecord, ...]
    camera: CameraSetup | None = None
    pose_log: Path | None = None
    metadata: dict = field(default_factory=dict)


def _parse_metadata(path: Path) -> dict[str, tuple[int, str]]:
    meta = {}
    with path.open(encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            if not line.startswith("#"):
                continue
            body = line[1:].strip()
            if "=" not in body:
                continue
            key, value = (s.strip() for s in body.split("=", 1))
            meta[key] = (n, value)
    return meta


def _numbers(raw: str, count: int, path, line: int, name: str) -> list[float]:
    parts = raw.split()
    if len(parts) != count:
        raise ParseError(f"expected {count} numbers, got {len(parts)}", path, line, name)
    return [_float(p, path, line, name) for p in parts]


def read_manifest(path) -> SequenceManifest:
    """Parse and validate a manifest; every referenced file must exist."""
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"{path} does not exist")
    root = path.parent
    meta = _parse_metadata(path)

    camera = None
    if "intrinsics" in meta or "cam_from_lidar" in meta:
        if not ("intrinsics" in meta and "cam_from_lidar" in meta):
            raise ParseError("intrinsics and cam_from_lidar must be given together", path)
        line, raw = meta["intrinsics"]
        fx, fy, cx, cy, w, h = _numbers(raw, 6, path, line, "intrinsics")
        line2, raw2 = meta["cam_from_lidar"]
        ext = _numbers(raw2, 12, path, line2, "cam_from_lidar")
        try:
            camera = CameraSetup(
                CameraIntrinsics(fx, fy, cx, cy, int(w), int(h)),
                RigidTransform(np.array(ext[:9]).reshape(3, 3), ext[9:]),
            )
        except ValueError as exc:
            raise ParseError(str(exc), path, line) from None

    pose_log = None
    if "pose_log" in meta:
        pose_log = root / meta["pose_log"][1]
        if not pose_log.exists():
            raise MissingFile(f"pose log {pose_log} referenced by {path} does not exist")

    frames = []
    last_t = None
    for line, row in _read_csv(path, MANIFEST_COLUMNS):
        t = _float(row["timestamp"], path, line, "timestamp")
        if last_t is not None and not t > last_t:
            raise ParseError("timestamps must strictly increase", path, line, "timestamp")
        last_t = t
        refs = {}
        for key in ("detections", "cloud", "boxes"):
            rel = row[key].strip()
            if rel:
                p = root / rel
                if not p.exists():
                    raise MissingFile(f"{p} referenced at {path}:{line} does not exist")
                refs[key] = p
        if not refs:
            raise ParseError("frame references no data file", path, line)
        if ("cloud" in refs) != ("boxes" in refs):
            raise ParseError("raw frames need both cloud and boxes", path, line)
        frames.append(FrameRecord(_int(row["frame"], path, line, "frame"), t, **refs))

    extra = {k: v for k, (_, v) in meta.items() if k not in ("sequence_id", "intrinsics", "cam_from_lidar", "pose_log")}
    seq_id = meta.get("sequence_id", (0, path.stem))[1]
    return SequenceManifest(path, seq_id, tuple(frames), camera, pose_log, extra)


def write_manifest(
    path,
    frames: Sequence[FrameRecord],
    sequence_id: str = "sequence",
    camera: CameraSetup | None = None,
    pose_log: str | None = None,
    metadata: dict | None = None,
) -> None:
    path = Path(path)
    root = path.parent
    pre = ["# tracklite sequence manifest v1", f"# sequence_id = {sequence_id}"]
    if camera is not None:
        K, T = camera.intrinsics, camera.T_cam_lidar
        pre.append("# intrinsics = " + " ".join(map(fmt, (K.fx, K.fy, K.cx, K.cy))) + f" {K.width} {K.height}")
        pre.append("# cam_from_lidar = " + " ".join(map(fmt, [*T.rotation.ravel(), *T.translation])))
    if pose_log is not None:
        pre.append(f"# pose_log = {pose_log}")
    for k, v in (metadata or {}).items():
        pre.append(f"# {k} = {v}")

    def rel(p):
        if p is None:
            return ""
        p = Path(p)
        return (p.relative_to(root) if p.is_absolute() else p).as_posix()

    _write_csv(path, MANIFEST_COLUMNS, (
        [f.frame, fmt(f.timestamp), rel(f.detections), rel(f.cloud), rel(f.boxes)] for f in frames
    ), preamble=pre)


def load_sequence(manifest_path) -> Iterator[FrameInput]:
    """Validate the manifest now; load each frame's files on demand."""
    manifest = read_manifest(manifest_path)
    poses = read_pose_log(manifest.pose_log) if manifest.pose_log is not None else None
    return _iter_frames(manifest, poses)


def _iter_frames(manifest: SequenceManifest, poses: PoseLog | None) -> Iterator[FrameInput]:
    for rec in manifest.frames:
        ego = poses.lookup(rec.timestamp) if poses is not None else RigidTransform.identity()
        dets = tuple(read_detections(rec.detections)) if rec.detections is not None else ()
        cloud = boxes = None
        if rec.cloud is not None:
            if manifest.camera is None:
                raise ParseError("raw frames need intrinsics and cam_from_lidar", manifest.path)
            cloud = read_point_cloud(rec.cloud)
            boxes = tuple(read_boxes(rec.boxes))
        yield FrameInput(rec.timestamp, ego, dets, cloud, boxes or (), manifest.camera)


# tracker outputs and ground truth

def track_rows(outputs: Iterable[TrackerOutput], frames: Sequence[int] | None = None) -> Iterator[list]:
    for k, out in enumerate(outputs):
        frame = frames[k] if frames is not None else k
        for s in out.tracks:
            yield [frame, fmt(out.timestamp), s.track_id, s.cls, fmt(s.confidence), *map(fmt, s.position),
                   *map(fmt, s.velocity), *map(fmt, s.box)]


def write_tracks(path, outputs: Iterable[TrackerOutput], frames: Sequence[int] | None = None) -> None:
    _write_csv(path, TRACK_COLUMNS, track_rows(outputs, frames))


def read_tracks(path) -> list[dict]:
    out = []
    for line, row in _read_csv(path, TRACK_COLUMNS):
        rec = {"frame": _int(row["frame"], path, line, "frame"),
               "track_id": _int(row["track_id"], path, line, "track_id"),
               "class": _class(row["class"], path, line)}
        for k in ("timestamp", "confidence", "x", "y", "z", "vx", "vy", "w", "h"):
            rec[k] = _float(row[k], path, line, k)
        out.append(rec)
    return out


def write_ground_truth(path, trajectories: Iterable[Trajectory], frame_of: dict[float, int] | None = None) -> None:
    rows = []
    for traj in trajectories:
        for k, (t, p, v) in enumerate(zip(traj.timestamps, traj.positions, traj.velocities)):
            frame = frame_of[float(t)] if frame_of is not None else k
            rows.append([frame, fmt(t), traj.obj_id, traj.cls, *map(fmt, p), *map(fmt, v)])
    rows.sort(key=lambda r: (r[0], r[2]))
    _write_csv(path, GT_COLUMNS, rows)


def read_ground_truth(path) -> tuple[list[Trajectory], list[dict]]:
    """Trajectories per object id, plus the raw per-frame rows."""
    rows = []
    for line, row in _read_csv(path, GT_COLUMNS):
        rec = {"frame": _int(row["frame"], path, line, "frame"),
               "obj_id": _int(row["obj_id"], path, line, "obj_id"),
               "class": _class(row["class"], path, line)}
        for k in ("timestamp", "x", "y", "z", "vx", "vy"):
            rec[k] = _float(row[k], path, line, k)
        rows.append(rec)
    by_id: dict[int, list[dict]] = {}
    for r in rows:
        by_id.setdefault(r["obj_id"], []).append(r)
    trajs = []
    for oid in sorted(by_id):
        rs = sorted(by_id[oid], key=lambda r: r["timestamp"])
        try:
            trajs.append(Trajectory(oid, rs[0]["class"], [r["timestamp"] for r in rs],
                                    [[r["x"], r["y"], r["z"]] for r in rs], [[r["vx"], r["vy"]] for r in rs]))
        except ValueError as exc:
            raise ParseError(str(exc), path) from None
    return trajs, rows


def mot_objects_from_rows(rows: Iterable[dict], id_key: str) -> list[MotObject]:
    return [MotObject(r["frame"], r[id_key], r["class"], (r["x"], r["y"], r["z"])) for r in rows]


# KITTI tracking format

@dataclass(frozen=True)
class KittiTrackRecord:
    frame: int
    track_id: int
    type: str
    truncated: float = -1
    occluded: int = -1
    alpha: float = -10.0
    bbox: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    dimensions: tuple[float, float, float] = (-1.0, -1.0, -1.0)  # h, w, l
    location: tuple[float, float, float] = (-1000.0, -1000.0, -1000.0)
    rotation_y: float = -10.0
    score: float | None = None

    def __post_init__(self) -> None:
        l, t, r, b = self.bbox
        if not (l <= r and t <= b):
            raise ValueError("KITTI bbox corners are not ordered")

    @property
    def cls(self) -> str | None:
        return self.type.lower() if self.type.lower() in CLASSES else None

    def to_line(self) -> str:
        fields_ = [str(self.frame), str(self.track_id), self.type, _kitti_num(self.truncated),
                   str(int(self.occluded)), _kitti_num(self.alpha), *map(_kitti_num, self.bbox),
                   *map(_kitti_num, self.dimensions), *map(_kitti_num, self.location), _kitti_num(self.rotation_y)]
        if self.score is not None:
            fields_.append(_kitti_num(self.score))
        return " ".join(fields_)


def _kitti_num(v: float) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)


def parse_kitti_line(line: str, path=None, lineno: int | None = None) -> KittiTrackRecord:
    parts = line.split()
    if len(parts) not in (17, 18):
        raise ParseError(f"expected 17 or 18 fields, got {len(parts)}", path, lineno)
    nums = [_float(p, path, lineno, f"column {i}") for i, p in enumerate(parts) if i != 2]
    try:
        return KittiTrackRecord(
            frame=int(nums[0]), track_id=int(nums[1]), type=parts[2], truncated=nums[2], occluded=int(nums[3]),
            alpha=nums[4], bbox=tuple(nums[5:9]), dimensions=tuple(nums[9:12]), location=tuple(nums[12:15]),
            rotation_y=nums[15], score=nums[16] if len(nums) == 17 else None,
        )
    except ValueError as exc:
        raise ParseError(str(exc), path, lineno) from None


def read_kitti_tracking(path) -> list[KittiTrackRecord]:
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"{path} does not exist")
    out = []
    with path.open(encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            if line.strip():
                out.append(parse_kitti_line(line, path, n))
    return out


def write_kitti_results(records: Iterable[KittiTrackRecord], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for r in sorted(records, key=lambda r: (r.frame, r.track_id)):
            fh.write(r.to_line() + "\n")


def kitti_records(
    outputs: Sequence[TrackerOutput],
    frames: Sequence[FrameInput],
    camera: CameraSetup,
    frame_ids: Sequence[int] | None = None,
) -> list[KittiTrackRecord]:
    """Image-plane boxes for confirmed tracks.

    The box is centred on the projection of the tracked position with the
    tracked width and height, clipped to the image. Tracks behind the
    camera or entirely off-image are skipped.
    """
    K = camera.intrinsics
    out = []
    for k, (res, frame) in enumerate(zip(outputs, frames)):
        fid = frame_ids[k] if frame_ids is not None else k
        to_cam = camera.T_cam_lidar @ frame.ego_pose
        for s in res.tracks:
            p_cam = to_cam.apply(np.array(s.position))
            if p_cam[2] <= 0.1:
                continue
            px = project(p_cam, K)
            w, h = s.box
            l, r = max(0.0, px.u - w / 2), min(K.width - 1.0, px.u + w / 2)
            t, b = max(0.0, px.v - h / 2), min(K.height - 1.0, px.v + h / 2)
            if not (l < r and t < b):
                continue
            out.append(KittiTrackRecord(fid, s.track_id, KITTI_TYPES[s.cls], bbox=(l, t, r, b),
                                        score=s.confidence))
    return out


def mot_objects_from_kitti(records: Iterable[KittiTrackRecord], classes: Sequence[str] | None = None) -> list[MotObject]:
    out = []
    for r in records:
        if r.cls is None or (classes is not None and r.cls not in classes):
            continue
        out.append(MotObject(r.frame, r.track_id, r.cls, box=tuple(r.bbox)))
    return out


# configuration

def load_config(path=None, overrides: dict | Sequence[str] | None = None) -> PipelineConfig:
    """Defaults, then the TOML file (if it exists), then ``overrides``.

    Overrides are ``{"section.key": value}`` or ``["section.key=value", ...]``
    with TOML-syntax values.
    """
    data: dict = {}
    if path is not None:
        p = Path(path)
        if p.exists():
            try:
                data = tomllib.loads(p.read_text(encoding="utf-8"))
            except tomllib.TOMLDecodeError as exc:
                raise ParseError(str(exc), p) from None
        else:
            log.info("config %s not found; using defaults", p)
    for key, value in _normalise_overrides(overrides).items():
        section, _, name = key.partition(".")
        if not name:
            raise ValidationError(f"override {key!r} must look like section.key")
        data.setdefault(section, {})[name] = value
    return PipelineConfig.from_dict(data)


def _normalise_overrides(overrides) -> dict:
    if overrides is None:
        return {}
    if isinstance(overrides, dict):
        return dict(overrides)
    out = {}
    for item in overrides:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ValidationError(f"override {item!r} must look like section.key=value")
        try:
            out[key.strip()] = tomllib.loads(f"v = {raw.strip()}")["v"]
        except tomllib.TOMLDecodeError:
            out[key.strip()] = raw.strip()
    return out


def write_config(cfg: PipelineConfig, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(tomli_w.dumps(cfg.to_dict()), encoding="utf-8")


def write_sequence(
    directory,
    frames: Sequence[FrameInput],
    sequence_id: str = "sequence",
    camera: CameraSetup | None = None,
    metadata: dict | None = None,
) -> Path:
    """Persist frames as a manifest plus per-frame files; returns the manifest path."""
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    if camera is None:
        camera = next((f.camera for f in frames if f.camera is not None), None)
    records = []
    for k, f in enumerate(frames):
        det = cloud = boxes = None
        if f.detections or f.cloud is None:
            det = Path("detections") / f"{k:06d}.csv"
            write_detections(root / det, f.detections)
        if f.cloud is not None:
            cloud = Path("clouds") / f"{k:06d}.bin"
            boxes = Path("boxes") / f"{k:06d}.csv"
            write_point_cloud(root / cloud, f.cloud)
            write_boxes(root / boxes, f.boxes)
        records.append(FrameRecord(k, f.timestamp, det, cloud, boxes))
    write_pose_log(root / "poses.csv", [f.timestamp for f in frames], [f.ego_pose for f in frames])
    manifest = root / "manifest.csv"
    write_manifest(manifest, records, sequence_id, camera, "poses.csv", metadata)
    return manifest
