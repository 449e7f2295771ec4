"""LIDAR/camera fusion and constant-velocity multi-object tracking."""

from .clustering import BoundingBox2D, Detection3D, PointCloud, euclidean_cluster, fuse
from .config import PipelineConfig
from .geometry import CameraIntrinsics, Point3, RigidTransform
from .tracker import FrameInput, Tracker, TrackerOutput

__version__ = "0.1.0"

__all__ = [
    "BoundingBox2D",
    "CameraIntrinsics",
    "Detection3D",
    "FrameInput",
    "PipelineConfig",
    "Point3",
    "PointCloud",
    "RigidTransform",
    "Tracker",
    "TrackerOutput",
    "euclidean_cluster",
    "fuse",
]
