"""Pipeline configuration with the shipped defaults.

Every section maps one-to-one onto a table of the TOML config file read by
:func:`tracklite.io.load_config`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields, replace

from .errors import ValidationError

CLASSES = ("car", "pedestrian", "cyclist")


def check_class(cls: str) -> str:
    if cls not in CLASSES:
        raise ValueError(f"unknown object class {cls!r}; expected one of {CLASSES}")
    return cls


@dataclass(frozen=True)
class RoiConfig:
    forward_min: float = 0.0  # exclusive
    forward_max: float = 40.0
    lateral_max: float = 15.0

    def validate(self) -> None:
        if not self.forward_max > self.forward_min:
            raise ValidationError("roi.forward_max must exceed roi.forward_min")
        if not self.lateral_max > 0:
            raise ValidationError("roi.lateral_max must be positive")


@dataclass(frozen=True)
class GroundConfig:
    enabled: bool = True
    max_iterations: int = 200
    inlier_threshold: float = 0.2
    min_inlier_fraction: float = 0.3
    max_normal_angle_deg: float = 30.0
    # hypotheses are scored on a random subset of at most this many points
    score_sample_size: int = 2048
    seed: int = 0

    def validate(self) -> None:
        if self.max_iterations < 1:
            raise ValidationError("ground.max_iterations must be >= 1")
        if not self.inlier_threshold > 0:
            raise ValidationError("ground.inlier_threshold must be positive")
        if not 0.0 <= self.min_inlier_fraction <= 1.0:
            raise ValidationError("ground.min_inlier_fraction must be in [0, 1]")
        if not 0.0 <= self.max_normal_angle_deg <= 90.0:
            raise ValidationError("ground.max_normal_angle_deg must be in [0, 90]")
        if self.score_sample_size < 3:
            raise ValidationError("ground.score_sample_size must be >= 3")


@dataclass(frozen=True)
class ClusterConfig:
    tolerance: float = 0.5
    min_points: int = 5

    def validate(self) -> None:
        if not self.tolerance > 0:
            raise ValidationError("cluster.tolerance must be positive")
        if self.min_points < 1:
            raise ValidationError("cluster.min_points must be >= 1")


def _per_class(car: float, pedestrian: float, cyclist: float):
    return field(default_factory=lambda: {"car": car, "pedestrian": pedestrian, "cyclist": cyclist})


@dataclass(frozen=True)
class SelectConfig:
    # weight of the extent mismatch (per metre) against the normalised point count
    alpha: float = 0.5
    expected_extent: dict = _per_class(4.5, 0.8, 1.8)
    # physical object height used to infer range from box height
    nominal_height: dict = _per_class(1.5, 1.7, 1.7)
    max_extent_ratio: float = 2.0
    max_range_disagreement: float = 0.5

    def validate(self) -> None:
        if self.alpha < 0:
            raise ValidationError("select.alpha must be >= 0")
        for name in ("expected_extent", "nominal_height"):
            table = getattr(self, name)
            if set(table) != set(CLASSES):
                raise ValidationError(f"select.{name} must define exactly {CLASSES}")
            if any(not v > 0 for v in table.values()):
                raise ValidationError(f"select.{name} entries must be positive")
        if not self.max_extent_ratio > 0 or not self.max_range_disagreement > 0:
            raise ValidationError("select ratios must be positive")


@dataclass(frozen=True)
class FilterConfig:
    q_diag: tuple = (0.1, 0.1, 0.1, 1.0, 1.0, 10.0, 10.0)
    r_diag: tuple = (0.25, 0.25, 0.25, 25.0, 25.0)
    init_var_position: float = 1.0
    init_var_velocity: float = 4.0
    init_var_box: float = 100.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "q_diag", tuple(float(v) for v in self.q_diag))
        object.__setattr__(self, "r_diag", tuple(float(v) for v in self.r_diag))

    def validate(self) -> None:
        if len(self.q_diag) != 7:
            raise ValidationError("filter.q_diag must have 7 entries")
        if len(self.r_diag) != 5:
            raise ValidationError("filter.r_diag must have 5 entries")
        if any(v < 0 for v in self.q_diag):
            raise ValidationError("filter.q_diag entries must be >= 0")
        if any(v < 0 for v in self.r_diag):
            raise ValidationError("filter.r_diag entries must be >= 0")
        for name in ("init_var_position", "init_var_velocity", "init_var_box"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"filter.{name} must be positive")


@dataclass(frozen=True)
class GateConfig:
    ped_max_speed: float = 6.0
    cyclist_max_speed: float = 10.0
    car_max_speed: float = 20.0
    car_margin: float = 0.5

    def validate(self) -> None:
        for f in fields(self):
            if not getattr(self, f.name) > 0:
                raise ValidationError(f"gate.{f.name} must be positive")


@dataclass(frozen=True)
class TrackerConfig:
    deletion_threshold: int = 5  # consecutive misses that delete a confirmed track
    promotion_threshold: int = 3  # consecutive hits that end the trial period
    confidence_alpha: float = 0.5
    mode: str = "fused"  # "fused" (pre-fused detections) or "raw" (cloud + boxes)

    def validate(self) -> None:
        if self.deletion_threshold < 1:
            raise ValidationError("tracker.deletion_threshold must be >= 1")
        if self.promotion_threshold < 1:
            raise ValidationError("tracker.promotion_threshold must be >= 1")
        if not 0.0 <= self.confidence_alpha <= 1.0:
            raise ValidationError("tracker.confidence_alpha must be in [0, 1]")
        if self.mode not in ("fused", "raw"):
            raise ValidationError("tracker.mode must be 'fused' or 'raw'")


@dataclass(frozen=True)
class PipelineConfig:
    roi: RoiConfig = field(default_factory=RoiConfig)
    ground: GroundConfig = field(default_factory=GroundConfig)
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    select: SelectConfig = field(default_factory=SelectConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    gate: GateConfig = field(default_factory=GateConfig)
    tracker: TrackerConfig = field(default_factory=TrackerConfig)

    def validate(self) -> PipelineConfig:
        for f in fields(self):
            section = getattr(self, f.name)
            for sf in fields(section):
                _check_finite(f"{f.name}.{sf.name}", getattr(section, sf.name))
            section.validate()
        return self

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            d = asdict(getattr(self, f.name))
            out[f.name] = {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> PipelineConfig:
        sections = {}
        known = {f.name: f for f in fields(cls)}
        for name, values in data.items():
            if name not in known:
                raise ValidationError(f"unknown config section [{name}]")
            if not isinstance(values, dict):
                raise ValidationError(f"config section [{name}] must be a table")
            default = known[name].default_factory()
            allowed = {f.name for f in fields(default)}
            unknown = set(values) - allowed
            if unknown:
                raise ValidationError(f"unknown keys in [{name}]: {sorted(unknown)}")
            merged = {}
            for key, value in values.items():
                try:
                    merged[key] = _coerce(f"{name}.{key}", getattr(default, key), value)
                except (TypeError, ValueError, OverflowError) as exc:
                    if isinstance(exc, ValidationError):
                        raise
                    raise ValidationError(f"{name}.{key}: {exc}") from None
            sections[name] = replace(default, **merged)
        return cls(**sections).validate()


def _coerce(name: str, current, value):
    """Convert a raw TOML value to the type of the default it replaces."""
    if isinstance(current, dict):
        if not isinstance(value, dict):
            raise ValidationError(f"{name} must be a table")
        return {**current, **value}
    if isinstance(current, tuple):
        if not isinstance(value, (list, tuple)):
            raise ValidationError(f"{name} must be an array")
        return tuple(value)
    if isinstance(current, bool):
        if not isinstance(value, bool):
            raise ValidationError(f"{name} must be a boolean")
        return value
    if isinstance(current, int):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ValidationError(f"{name} must be an integer")
        return int(value)
    if isinstance(current, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ValidationError(f"{name} must be a number")
        return float(value)
    if isinstance(current, str) and not isinstance(value, str):
        raise ValidationError(f"{name} must be a string")
    return value


def _check_finite(name: str, value) -> None:
    if isinstance(value, bool) or isinstance(value, str):
        return
    if isinstance(value, dict):
        values = value.values()
    elif isinstance(value, (tuple, list)):
        values = value
    else:
        values = (value,)
    for v in values:
        if not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ValidationError(f"{name} must be finite numbers, got {v!r}")
