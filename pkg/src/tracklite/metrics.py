"""Tracking evaluation: CLEAR MOT counts and RMSE against ground truth."""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Sequence

import numpy as np
from scipy.ndimage import uniform_filter1d

from .errors import EmptyGroundTruth, NoOverlap

MT_THRESHOLD = 0.8
ML_THRESHOLD = 0.2


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time series for one object: map-frame position (m) and planar velocity (m/s)."""

    obj_id: int
    cls: str
    timestamps: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    boxes: np.ndarray | None = None

    def __post_init__(self) -> None:
        t = np.asarray(self.timestamps, dtype=np.float64).reshape(-1)
        p = np.asarray(self.positions, dtype=np.float64).reshape(len(t), 3)
        v = np.asarray(self.velocities, dtype=np.float64).reshape(len(t), -1)[:, :2]
        if len(t) > 1 and np.any(np.diff(t) <= 0):
            raise ValueError(f"timestamps of object {self.obj_id} are not strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(p)) and np.all(np.isfinite(v))):
            raise ValueError("trajectory has non-finite samples")
        object.__setattr__(self, "timestamps", t)
        object.__setattr__(self, "positions", p)
        object.__setattr__(self, "velocities", v)
        if self.boxes is not None:
            object.__setattr__(self, "boxes", np.asarray(self.boxes, dtype=np.float64).reshape(len(t), 4))

    def __len__(self) -> int:
        return len(self.timestamps)

    def subset(self, mask: np.ndarray) -> Trajectory:
        return Trajectory(self.obj_id, self.cls, self.timestamps[mask], self.positions[mask],
                          self.velocities[mask], None if self.boxes is None else self.boxes[mask])

    def shifted(self, dt: float) -> Trajectory:
        return Trajectory(self.obj_id, self.cls, self.timestamps + dt, self.positions, self.velocities, self.boxes)


GroundTruthTrack = Trajectory


def finite_difference_velocity(timestamps, positions, taps: int = 5) -> np.ndarray:
    """Planar velocity from sampled positions.

    Central differences (one-sided at the ends) smoothed by a ``taps``-wide
    moving average.
    """
    t = np.asarray(timestamps, dtype=np.float64)
    p = np.asarray(positions, dtype=np.float64)[:, :2]
    if len(t) < 2:
        return np.zeros((len(t), 2))
    v = np.gradient(p, t, axis=0)
    if taps > 1:
        v = uniform_filter1d(v, size=taps, axis=0, mode="nearest")
    return v


@dataclass(frozen=True)
class RmseReport:
    position_rmse: float
    velocity_rmse: float
    n_samples: int


def rmse(gt: Trajectory, est: Trajectory, interpolation: str = "linear") -> RmseReport:
    """RMSE over ground-truth times, with the estimate interpolated onto them.

    Only ground-truth samples inside the estimate's time span count.
    Position error is 3D; velocity error is planar.
    """
    if interpolation != "linear":
        raise ValueError(f"unsupported interpolation {interpolation!r}")
    if len(est) == 0 or len(gt) == 0:
        raise NoOverlap("empty trajectory")
    t = gt.timestamps
    inside = (t >= est.timestamps[0]) & (t <= est.timestamps[-1])
    if not inside.any():
        raise NoOverlap(f"object {gt.obj_id}: estimate does not overlap ground truth in time")
    tq = t[inside]
    p_est = np.column_stack([np.interp(tq, est.timestamps, est.positions[:, k]) for k in range(3)])
    v_est = np.column_stack([np.interp(tq, est.timestamps, est.velocities[:, k]) for k in range(2)])
    dp = p_est - gt.positions[inside]
    dv = v_est - gt.velocities[inside]
    return RmseReport(
        position_rmse=float(np.sqrt(np.mean(np.sum(dp**2, axis=1)))),
        velocity_rmse=float(np.sqrt(np.mean(np.sum(dv**2, axis=1)))),
        n_samples=int(inside.sum()),
    )


def bucket_by_distance(
    gt: Trajectory,
    est: Trajectory,
    edges: Sequence[float],
    sensor_positions: np.ndarray | None = None,
) -> dict[tuple[float, float], RmseReport]:
    """Per-range-bucket RMSE; buckets are ``[edges[i], edges[i+1])``.

    ``sensor_positions`` holds the map-frame sensor origin at each
    ground-truth sample (default: the map origin). Buckets with no usable
    samples are absent from the result.
    """
    edges = np.asarray(edges, dtype=np.float64)
    origin = np.zeros((len(gt), 3)) if sensor_positions is None else np.asarray(sensor_positions).reshape(len(gt), 3)
    dist = np.linalg.norm(gt.positions - origin, axis=1)
    which = np.digitize(dist, edges) - 1
    out = {}
    for b in range(len(edges) - 1):
        mask = which == b
        if not mask.any():
            continue
        try:
            out[(float(edges[b]), float(edges[b + 1]))] = rmse(gt.subset(mask), est)
        except NoOverlap:
            continue
    return out


@dataclass(frozen=True)
class MotObject:
    """One object in one frame, either ground truth or hypothesis."""

    frame: int
    obj_id: int
    cls: str = "pedestrian"
    position: tuple[float, float, float] | None = None
    box: tuple[float, float, float, float] | None = None


@dataclass(frozen=True)
class MotReport:
    mota: float
    motp: float
    mt: float  # percent of GT trajectories tracked >= 80% of their life
    ml: float  # percent tracked <= 20%
    ids: int
    frag: int
    precision: float
    recall: float
    tp: int = 0
    fp: int = 0
    fn: int = 0
    n_gt: int = 0
    n_gt_tracks: int = 0

    def as_row(self) -> dict:
        return asdict(self)


def iou(a, b) -> float:
    iw = min(a[2], b[2]) - max(a[0], b[0])
    ih = min(a[3], b[3]) - max(a[1], b[1])
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return inter / union if union > 0 else 0.0


def _pair_cost(g: MotObject, h: MotObject, mode: str) -> float:
    """Distance-like cost (smaller is better) and similarity for MOTP."""
    if mode == "center3d":
        return float(np.linalg.norm(np.subtract(g.position, h.position)))
    return 1.0 - iou(g.box, h.box)


def _valid(cost: float, threshold: float, mode: str) -> bool:
    if mode == "center3d":
        return cost <= threshold
    return 1.0 - cost >= threshold


def clear_mot(
    gt: Iterable[MotObject],
    hyp: Iterable[MotObject],
    threshold: float | None = None,
    mode: str = "center3d",
) -> MotReport:
    """CLEAR MOT metrics with greedy per-frame matching.

    ``mode="center3d"`` matches on centre distance (``threshold`` metres,
    default 1.0; MOTP is the mean matched distance). ``mode="iou2d"``
    matches on box overlap (``threshold`` is the minimum IoU, default 0.5;
    MOTP is the mean matched IoU). A correspondence from the previous
    frame is kept while it stays valid, so identity switches are only
    counted when a ground-truth object is matched to a new hypothesis.
    """
    if mode not in ("center3d", "iou2d"):
        raise ValueError(f"unknown matching mode {mode!r}")
    if threshold is None:
        threshold = 1.0 if mode == "center3d" else 0.5
    gt_frames: dict[int, list[MotObject]] = defaultdict(list)
    hyp_frames: dict[int, list[MotObject]] = defaultdict(list)
    for o in gt:
        gt_frames[o.frame].append(o)
    for o in hyp:
        hyp_frames[o.frame].append(o)
    n_gt = sum(len(v) for v in gt_frames.values())
    if n_gt == 0:
        raise EmptyGroundTruth("ground truth contains no objects")

    last_match: dict[int, int] = {}
    history: dict[int, list[int | None]] = defaultdict(list)
    tp = fp = fn = ids = 0
    motp_sum = 0.0

    for frame in sorted(set(gt_frames) | set(hyp_frames)):
        gts = sorted(gt_frames.get(frame, []), key=lambda o: o.obj_id)
        hyps = sorted(hyp_frames.get(frame, []), key=lambda o: o.obj_id)
        hyp_index = {h.obj_id: k for k, h in enumerate(hyps)}
        taken_h: set[int] = set()
        matches: dict[int, int] = {}

        for gi, g in enumerate(gts):
            prev = last_match.get(g.obj_id)
            if prev is None or prev not in hyp_index:
                continue
            hk = hyp_index[prev]
            if hk in taken_h:
                continue
            if _valid(_pair_cost(g, hyps[hk], mode), threshold, mode):
                matches[gi] = hk
                taken_h.add(hk)

        cand = []
        for gi, g in enumerate(gts):
            if gi in matches:
                continue
            for hk, h in enumerate(hyps):
                if hk in taken_h:
                    continue
                c = _pair_cost(g, h, mode)
                if _valid(c, threshold, mode):
                    # ties broken by geometry so relabelling hypotheses cannot change the outcome
                    cand.append((c, gi, h.box or h.position, hk))
        for c, gi, _, hk in sorted(cand):
            if gi in matches or hk in taken_h:
                continue
            matches[gi] = hk
            taken_h.add(hk)

        for gi, g in enumerate(gts):
            hk = matches.get(gi)
            if hk is None:
                fn += 1
                history[g.obj_id].append(None)
                continue
            h = hyps[hk]
            tp += 1
            c = _pair_cost(g, h, mode)
            motp_sum += c if mode == "center3d" else 1.0 - c
            prev = last_match.get(g.obj_id)
            if prev is not None and prev != h.obj_id:
                ids += 1
            last_match[g.obj_id] = h.obj_id
            history[g.obj_id].append(h.obj_id)
        fp += len(hyps) - len(taken_h)

    frag = 0
    mt = ml = 0
    for seq in history.values():
        seen = False
        for f, cur in enumerate(seq):
            if cur is not None:
                if seen and seq[f - 1] != cur:
                    frag += 1
                seen = True
        ratio = sum(c is not None for c in seq) / len(seq)
        if ratio >= MT_THRESHOLD:
            mt += 1
        elif ratio <= ML_THRESHOLD:
            ml += 1
    n_tracks = len(history)
    return MotReport(
        mota=1.0 - (fn + fp + ids) / n_gt,
        motp=motp_sum / tp if tp else float("nan"),
        mt=100.0 * mt / n_tracks,
        ml=100.0 * ml / n_tracks,
        ids=ids,
        frag=frag,
        precision=tp / (tp + fp) if tp + fp else 0.0,
        recall=tp / n_gt,
        tp=tp,
        fp=fp,
        fn=fn,
        n_gt=n_gt,
        n_gt_tracks=n_tracks,
    )


def trajectories_from_outputs(outputs) -> dict[int, Trajectory]:
    """Regroup per-frame tracker outputs into one trajectory per track id."""
    rows: dict[int, list] = defaultdict(list)
    classes = {}
    for out in outputs:
        for s in out.tracks:
            rows[s.track_id].append((out.timestamp, *s.position, *s.velocity))
            classes[s.track_id] = s.cls
    trajs = {}
    for tid, r in rows.items():
        a = np.array(r)
        trajs[tid] = Trajectory(tid, classes[tid], a[:, 0], a[:, 1:4], a[:, 4:6])
    return trajs


def dominant_track(gt: Trajectory, outputs, threshold: float = 1.0) -> Trajectory | None:
    """The estimated trajectory matched to ``gt`` most often within ``threshold``."""
    gt_at = {float(t): p for t, p in zip(gt.timestamps, gt.positions)}
    votes: dict[int, int] = defaultdict(int)
    for out in outputs:
        p = gt_at.get(float(out.timestamp))
        if p is None or not out.tracks:
            continue
        d = [(math.dist(s.position, p), s.track_id) for s in out.tracks]
        best = min(d)
        if best[0] <= threshold:
            votes[best[1]] += 1
    if not votes:
        return None
    tid = min(votes, key=lambda k: (-votes[k], k))
    return trajectories_from_outputs(outputs)[tid]


def format_table(rows: Sequence[dict], columns: Sequence[str] | None = None, floatfmt: str = ".3f") -> str:
    """Plain-text table, one row per dict."""
    if not rows:
        return ""
    columns = list(columns or rows[0].keys())

    def cell(v):
        if isinstance(v, float):
            return format(v, floatfmt)
        return str(v)

    body = [[cell(r.get(c, "")) for c in columns] for r in rows]
    widths = [max(len(c), *(len(b[i]) for b in body)) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines += ["  ".join(v.rjust(w) for v, w in zip(b, widths)) for b in body]
    return "\n".join(lines)


def to_csv(rows: Sequence[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})
    return buf.getvalue()


MOT_COLUMNS = [f.name for f in fields(MotReport)]
