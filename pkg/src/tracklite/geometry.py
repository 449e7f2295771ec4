"""Rigid transforms and pinhole projection.

Camera frame convention: z forward, x right, y down. LIDAR / vehicle sensor
frame convention: x forward, y left, z up. No lens distortion is modelled;
images are assumed rectified upstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import BehindCamera

ORTHONORMAL_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """SE(3) transform acting as ``p -> R @ p + t``."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self) -> None:
        R = np.array(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.array(self.translation, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(R)) and np.all(np.isfinite(t))):
            raise ValueError("rigid transform has non-finite entries")
        if np.max(np.abs(R.T @ R - np.eye(3))) > ORTHONORMAL_TOL:
            raise ValueError("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > ORTHONORMAL_TOL:
            raise ValueError("rotation determinant is not +1")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls) -> RigidTransform:
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> RigidTransform:
        M = np.asarray(matrix, dtype=np.float64)
        return cls(M[:3, :3], M[:3, 3])

    @classmethod
    def from_quaternion(cls, translation, quaternion_wxyz) -> RigidTransform:
        w, x, y, z = (float(q) for q in quaternion_wxyz)
        rot = Rotation.from_quat([x, y, z, w]).as_matrix()
        return cls(_reorthonormalize(rot), translation)

    @classmethod
    def from_yaw(cls, yaw: float, translation=(0.0, 0.0, 0.0)) -> RigidTransform:
        c, s = np.cos(yaw), np.sin(yaw)
        R = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return cls(R, translation)

    def quaternion_wxyz(self) -> np.ndarray:
        x, y, z, w = Rotation.from_matrix(self.rotation).as_quat()
        return np.array([w, x, y, z])

    def as_matrix(self) -> np.ndarray:
        """Homogeneous 4x4 form."""
        M = np.eye(4)
        M[:3, :3] = self.rotation
        M[:3, 3] = self.translation
        return M

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform an (N, 3) array (or a single 3-vector) of points."""
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.rotation.T + self.translation

    def __matmul__(self, other: RigidTransform) -> RigidTransform:
        return compose(self, other)

    def allclose(self, other: RigidTransform, atol: float = 1e-9) -> bool:
        return bool(
            np.allclose(self.rotation, other.rotation, atol=atol, rtol=0)
            and np.allclose(self.translation, other.translation, atol=atol, rtol=0)
        )


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self) -> None:
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if not all(np.isfinite((self.x, self.y, self.z))):
            raise ValueError("point has non-finite components")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    @classmethod
    def from_array(cls, a) -> Point3:
        return cls(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class Pixel:
    u: float
    v: float


def _reorthonormalize(R: np.ndarray) -> np.ndarray:
    U, _, Vt = np.linalg.svd(R)
    out = U @ Vt
    if np.linalg.det(out) < 0:
        U[:, -1] *= -1
        out = U @ Vt
    return out


def _as_vec(p) -> np.ndarray:
    if isinstance(p, Point3):
        return p.as_array()
    return np.asarray(p, dtype=np.float64).reshape(3)


def transform_point(T: RigidTransform, p):
    """Apply ``T`` to one point; returns the same kind it was given."""
    out = T.rotation @ _as_vec(p) + T.translation
    return Point3.from_array(out) if isinstance(p, Point3) else out


def compose(A: RigidTransform, B: RigidTransform) -> RigidTransform:
    """Return ``A o B``, i.e. the transform applying ``B`` first."""
    return RigidTransform(A.rotation @ B.rotation, A.rotation @ B.translation + A.translation)


def invert(T: RigidTransform) -> RigidTransform:
    Rt = T.rotation.T
    return RigidTransform(Rt, -(Rt @ T.translation))


def project(p, K: CameraIntrinsics) -> Pixel:
    x, y, z = _as_vec(p)
    if not z > 0:
        raise BehindCamera(f"point depth {z} is not positive")
    return Pixel(K.fx * x / z + K.cx, K.fy * y / z + K.cy)


def project_points(points: np.ndarray, K: CameraIntrinsics) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised projection of camera-frame points.

    Returns ``(uv, in_front)`` where ``uv`` is (N, 2) and rows with
    ``in_front == False`` are NaN.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    z = pts[:, 2]
    in_front = z > 0
    uv = np.full((len(pts), 2), np.nan)
    zf = z[in_front]
    uv[in_front, 0] = K.fx * pts[in_front, 0] / zf + K.cx
    uv[in_front, 1] = K.fy * pts[in_front, 1] / zf + K.cy
    return uv, in_front


def lidar_to_camera_rotation() -> np.ndarray:
    """Axis permutation taking (forward, left, up) into (right, down, forward)."""
    return np.array([[0.0, -1.0, 0.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]])


def random_transform(rng: np.random.Generator, scale: float = 10.0) -> RigidTransform:
    rot = Rotation.random(random_state=rng).as_matrix()
    return RigidTransform(_reorthonormalize(rot), rng.uniform(-scale, scale, size=3))
