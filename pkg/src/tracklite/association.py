"""Gated greedy nearest-neighbour association on metric positions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import GateConfig, check_class


def gate_radius(cls: str, tracked_speed: float, dt: float, cfg: GateConfig = GateConfig()) -> float:
    """Largest plausible displacement of an object of ``cls`` over ``dt``.

    Pedestrians and cyclists use a static bound from their maximum speed.
    Car gates also grow with the tracked speed plus ``car_margin``.
    """
    check_class(cls)
    if not dt > 0:
        raise ValueError("dt must be positive")
    if cls == "pedestrian":
        return cfg.ped_max_speed * dt
    if cls == "cyclist":
        return cfg.cyclist_max_speed * dt
    return max(cfg.car_max_speed * dt, tracked_speed * dt + cfg.car_margin)


@dataclass(frozen=True)
class GateCandidate:
    """What association needs to know about one predicted track."""

    track_id: int
    cls: str
    position: np.ndarray
    gate: float
    age: int = 0


@dataclass
class Assignment:
    pairs: list[tuple[int, int]] = field(default_factory=list)
    unmatched_tracks: list[int] = field(default_factory=list)
    unmatched_detections: list[int] = field(default_factory=list)


def greedy_order(tracks: Sequence[GateCandidate]) -> list[int]:
    """Indices of ``tracks`` oldest first, ties by ascending id."""
    return sorted(range(len(tracks)), key=lambda i: (-tracks[i].age, tracks[i].track_id))


def associate(tracks: Sequence[GateCandidate], detections: Sequence) -> Assignment:
    """Let each track claim its nearest unclaimed same-class detection in its gate.

    ``detections`` are :class:`~tracklite.clustering.Detection3D` (or anything
    with ``position`` and ``cls``) expressed in the same frame as the track
    positions.
    """
    n_det = len(detections)
    out = Assignment()
    if n_det == 0:
        out.unmatched_tracks = [t.track_id for t in tracks]
        return out
    det_pos = np.array([d.position for d in detections], dtype=np.float64).reshape(n_det, 3)
    det_cls = np.array([d.cls for d in detections])
    available = np.ones(n_det, dtype=bool)

    if tracks:
        trk_pos = np.array([t.position for t in tracks], dtype=np.float64).reshape(len(tracks), 3)
        diff = trk_pos[:, None, :] - det_pos[None, :, :]
        dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    for i in greedy_order(tracks):
        t = tracks[i]
        ok = available & (det_cls == t.cls) & (dist[i] <= t.gate)
        if not ok.any():
            out.unmatched_tracks.append(t.track_id)
            continue
        cand = np.flatnonzero(ok)
        j = int(cand[np.argmin(dist[i, cand])])
        available[j] = False
        out.pairs.append((t.track_id, j))
    out.unmatched_detections = [int(j) for j in np.flatnonzero(available)]
    return out
