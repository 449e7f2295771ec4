"""LIDAR/camera fusion: turn a point cloud and 2D boxes into 3D centroids.

The processing order is ROI crop -> ground removal -> transform into the
camera frame -> projection -> per-box frustum gather -> Euclidean
clustering -> cluster selection -> centroid. Point clouds arrive in the
vehicle sensor frame (x forward, y left, z up); emitted centroids are in the
same frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .config import CLASSES, ClusterConfig, GroundConfig, PipelineConfig, RoiConfig, SelectConfig, check_class
from .geometry import CameraIntrinsics, Point3, RigidTransform, project_points


@dataclass(frozen=True, eq=False)
class PointCloud:
    points: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(pts)):
            raise ValueError("point cloud has non-finite coordinates")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class BoundingBox2D:
    u_min: float
    v_min: float
    u_max: float
    v_max: float
    cls: str
    confidence: float = 1.0

    def __post_init__(self) -> None:
        check_class(self.cls)
        if not (self.u_min < self.u_max and self.v_min < self.v_max):
            raise ValueError("bounding box corners are not well ordered")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")

    @property
    def width(self) -> float:
        return self.u_max - self.u_min

    @property
    def height(self) -> float:
        return self.v_max - self.v_min


@dataclass(frozen=True, eq=False)
class Cluster:
    point_indices: np.ndarray
    points: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if len(self.point_indices) == 0:
            raise ValueError("clusters are non-empty")

    @property
    def size(self) -> int:
        return len(self.point_indices)

    @property
    def centroid(self) -> Point3:
        return Point3.from_array(self.points.mean(axis=0))


@dataclass(frozen=True)
class Detection3D:
    """A fused measurement: 3D centroid plus image-plane box size."""

    centroid: Point3
    cls: str
    confidence: float
    box_w: float
    box_h: float

    def __post_init__(self) -> None:
        check_class(self.cls)
        if not (self.box_w > 0 and self.box_h > 0):
            raise ValueError("box width and height must be positive")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence must lie in [0, 1]")
        if not all(math.isfinite(v) for v in (self.box_w, self.box_h, self.confidence)):
            raise ValueError("detection has non-finite fields")

    @property
    def position(self) -> np.ndarray:
        return self.centroid.as_array()

    def measurement_vector(self) -> np.ndarray:
        c = self.centroid
        return np.array([c.x, c.y, c.z, self.box_w, self.box_h])


def roi_mask(points: np.ndarray, cfg: RoiConfig) -> np.ndarray:
    fwd = points[:, 0]
    return (fwd > cfg.forward_min) & (fwd <= cfg.forward_max) & (np.abs(points[:, 1]) <= cfg.lateral_max)


def crop_roi(cloud: PointCloud, cfg: RoiConfig = RoiConfig()) -> PointCloud:
    return PointCloud(cloud.points[roi_mask(cloud.points, cfg)], cloud.timestamp)


def fit_ground_plane(points: np.ndarray, cfg: GroundConfig = GroundConfig()):
    """RANSAC plane fit restricted to near-horizontal planes.

    Returns ``(normal, offset, inlier_mask)`` for the plane
    ``normal . p + offset = 0`` with the most support, or ``None`` when no
    admissible hypothesis could be drawn.
    """
    n = len(points)
    if n < 3:
        return None
    rng = np.random.default_rng(cfg.seed)
    if n > cfg.score_sample_size:
        score_pts = points[rng.choice(n, size=cfg.score_sample_size, replace=False)]
    else:
        score_pts = points
    m = len(score_pts)
    cos_max = math.cos(math.radians(cfg.max_normal_angle_deg))
    thr = cfg.inlier_threshold

    best_count = -1
    best_plane = None
    needed = cfg.max_iterations
    drawn = 0
    batch = 64
    while drawn < needed:
        b = min(batch, needed - drawn)
        drawn += b
        idx = rng.integers(0, n, size=(b, 3))
        p0, p1, p2 = points[idx[:, 0]], points[idx[:, 1]], points[idx[:, 2]]
        normals = np.cross(p1 - p0, p2 - p0)
        norms = np.linalg.norm(normals, axis=1)
        ok = norms > 1e-9
        if not np.any(ok):
            continue
        normals = normals[ok] / norms[ok, None]
        p0 = p0[ok]
        upright = np.abs(normals[:, 2]) >= cos_max
        if not np.any(upright):
            continue
        normals, p0 = normals[upright], p0[upright]
        offsets = -np.einsum("ij,ij->i", normals, p0)
        counts = (np.abs(score_pts @ normals.T + offsets) <= thr).sum(axis=0)
        k = int(np.argmax(counts))
        if counts[k] > best_count:
            best_count = int(counts[k])
            best_plane = (normals[k], offsets[k])
            # adaptive stop at 99% confidence of having drawn an all-inlier sample
            w = best_count / m
            if w >= 1.0:
                needed = drawn
            elif w > 0:
                est = math.log(0.01) / math.log(1.0 - w**3)
                needed = min(cfg.max_iterations, max(drawn, math.ceil(est)))
    if best_plane is None:
        return None

    normal, offset = best_plane
    inliers = np.abs(points @ normal + offset) <= thr
    # least-squares refinement on the consensus set
    if inliers.sum() >= 3:
        sel = points[inliers]
        centre = sel.mean(axis=0)
        d = sel - centre
        _, vecs = np.linalg.eigh(d.T @ d)
        refined = vecs[:, 0]
        if abs(refined[2]) >= cos_max:
            r_off = -float(refined @ centre)
            r_inliers = np.abs(points @ refined + r_off) <= thr
            if r_inliers.sum() >= inliers.sum():
                normal, offset, inliers = refined, r_off, r_inliers
    return normal, float(offset), inliers


def remove_ground(cloud: PointCloud, cfg: GroundConfig = GroundConfig()) -> PointCloud:
    """Drop the dominant ground plane; leave the cloud alone if there is none."""
    if not cfg.enabled or len(cloud) == 0:
        return cloud
    fit = fit_ground_plane(cloud.points, cfg)
    if fit is None:
        return cloud
    _, _, inliers = fit
    if inliers.sum() < cfg.min_inlier_fraction * len(cloud):
        return cloud
    return PointCloud(cloud.points[~inliers], cloud.timestamp)


def _box_mask(uv: np.ndarray, in_front: np.ndarray, box: BoundingBox2D) -> np.ndarray:
    u, v = uv[:, 0], uv[:, 1]
    with np.errstate(invalid="ignore"):
        return in_front & (u >= box.u_min) & (u <= box.u_max) & (v >= box.v_min) & (v <= box.v_max)


def gather_frustum(
    cloud: PointCloud, box: BoundingBox2D, K: CameraIntrinsics, T_cam_lidar: RigidTransform
) -> np.ndarray:
    """Camera-frame points whose projection lands inside ``box`` (edges included)."""
    cam = T_cam_lidar.apply(cloud.points)
    uv, in_front = project_points(cam, K)
    return cam[_box_mask(uv, in_front, box)]


def _neighbour_pairs(points: np.ndarray, tolerance: float) -> tuple[np.ndarray, np.ndarray]:
    """All index pairs (i, j), i < j, at distance <= tolerance."""
    pairs = cKDTree(points).query_pairs(tolerance, output_type="ndarray")
    return pairs[:, 0], pairs[:, 1]


def _union_find(n: int, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Component label (smallest member index) for every node.

    Batched union-find: every round hooks the larger root of each edge under
    the smaller one, then path-compresses by pointer jumping.
    """
    parent = np.arange(n)
    while True:
        ri, rj = parent[src], parent[dst]
        differ = ri != rj
        if not np.any(differ):
            return parent
        lo = np.minimum(ri[differ], rj[differ])
        hi = np.maximum(ri[differ], rj[differ])
        np.minimum.at(parent, hi, lo)
        while True:
            grand = parent[parent]
            if np.array_equal(grand, parent):
                break
            parent = grand


def euclidean_cluster(points: np.ndarray, tolerance: float = 0.5, min_points: int = 5) -> list[Cluster]:
    """Connected components under the "within ``tolerance``" relation.

    Components smaller than ``min_points`` are discarded. Clusters come back
    largest first; equal sizes are ordered by their smallest point index.
    """
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    n = len(pts)
    if n == 0:
        return []
    src, dst = _neighbour_pairs(pts, tolerance)
    labels = _union_find(n, src, dst)
    roots, counts = np.unique(labels, return_counts=True)
    keep = counts >= min_points
    roots, counts = roots[keep], counts[keep]
    rank = np.lexsort((roots, -counts))
    order = np.argsort(labels, kind="stable")
    sorted_labels = labels[order]
    clusters = []
    for r in roots[rank]:
        lo, hi = np.searchsorted(sorted_labels, [r, r + 1])
        idx = order[lo:hi]
        clusters.append(Cluster(idx, pts[idx]))
    return clusters


def horizontal_extent(points: np.ndarray, vertical_axis: int = 1) -> float:
    """Longest side of the ground-plane footprint of ``points``."""
    span = np.ptp(points, axis=0)
    return float(np.delete(span, vertical_axis).max())


def select_best_cluster(
    clusters: list[Cluster],
    cls: str,
    cfg: SelectConfig = SelectConfig(),
    implied_range: float | None = None,
) -> Cluster | None:
    """Pick the cluster most likely to be the detected object.

    Clusters are expected in the camera frame (y down, z forward). A cluster
    is rejected outright when its footprint is more than
    ``max_extent_ratio`` times the class's expected size, or when its depth
    disagrees with ``implied_range`` (the range implied by the box height)
    by more than ``max_range_disagreement``. Survivors are scored by point
    count normalised to the largest survivor, minus ``alpha`` times the
    footprint mismatch in metres. Equal scores go to the nearer cluster.
    """
    check_class(cls)
    expected = cfg.expected_extent[cls]
    survivors = []
    for c in clusters:
        extent = horizontal_extent(c.points)
        if extent > cfg.max_extent_ratio * expected:
            continue
        depth = float(c.points[:, 2].mean())
        if implied_range is not None and abs(depth - implied_range) > cfg.max_range_disagreement * implied_range:
            continue
        survivors.append((c, extent, depth))
    if not survivors:
        return None
    max_n = max(c.size for c, _, _ in survivors)
    best, best_key = None, None
    for c, extent, depth in survivors:
        score = c.size / max_n - cfg.alpha * abs(extent - expected)
        key = (-score, depth)
        if best_key is None or key < best_key:
            best, best_key = c, key
    return best


def implied_range_from_box(box: BoundingBox2D, K: CameraIntrinsics, cfg: SelectConfig = SelectConfig()) -> float:
    return K.fy * cfg.nominal_height[box.cls] / box.height


def fuse(
    cloud: PointCloud,
    boxes: list[BoundingBox2D],
    K: CameraIntrinsics,
    T_cam_lidar: RigidTransform,
    cfg: PipelineConfig = PipelineConfig(),
) -> list[Detection3D]:
    """One :class:`Detection3D` per box that has LIDAR support, in box order."""
    if not boxes:
        return []
    cropped = crop_roi(cloud, cfg.roi)
    cleaned = remove_ground(cropped, cfg.ground)
    if len(cleaned) == 0:
        return []
    cam = T_cam_lidar.apply(cleaned.points)
    uv, in_front = project_points(cam, K)
    detections = []
    for box in boxes:
        members = np.flatnonzero(_box_mask(uv, in_front, box))
        frustum = cam[members]
        clusters = euclidean_cluster(frustum, cfg.cluster.tolerance, cfg.cluster.min_points)
        best = select_best_cluster(clusters, box.cls, cfg.select, implied_range_from_box(box, K, cfg.select))
        if best is None:
            continue
        # averaging the sensor-frame points keeps the centroid inside the ROI exactly
        centroid = cleaned.points[members[best.point_indices]].mean(axis=0)
        detections.append(
            Detection3D(Point3.from_array(centroid), box.cls, float(box.confidence), box.width, box.height)
        )
    return detections


__all__ = [
    "CLASSES",
    "BoundingBox2D",
    "Cluster",
    "ClusterConfig",
    "Detection3D",
    "PointCloud",
    "crop_roi",
    "euclidean_cluster",
    "fuse",
    "gather_frustum",
    "remove_ground",
    "select_best_cluster",
]
