"""Constant-velocity Kalman filter, in sensor frame and in a static map frame.

State layout (7): ``[x, y, z, vx, vy, w, h]``. Position and planar velocity
are metric; ``w, h`` are the image-plane box size in pixels. The
measurement (5) is ``[x, y, z, w, h]``.

Map-frame tracking uses the homogeneous augmented state
``[x, y, z, 1, vx, vy, w, h]``. The measurement model composes the box
selector with the 8x8 lift of the map-to-sensor transform, so a sensor-frame
measurement updates a map-frame state directly.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .config import FilterConfig
from .errors import SingularInnovation
from .geometry import RigidTransform, invert

STATE_DIM = 7
AUG_DIM = 8
MEAS_DIM = 5
HOM = 3
MAX_CONDITION = 1e12

# Observes x, y, z, w, h; velocity is hidden.
C = np.zeros((MEAS_DIM, STATE_DIM))
C[0:3, 0:3] = np.eye(3)
C[3:5, 5:7] = np.eye(2)

C_AUG = np.zeros((MEAS_DIM, AUG_DIM))
C_AUG[0:3, 0:3] = np.eye(3)
C_AUG[3:5, 6:8] = np.eye(2)

_AUG_KEEP = np.array([0, 1, 2, 4, 5, 6, 7])


class Frame(str, Enum):
    SENSOR = "sensor"
    MAP = "map"


@dataclass(frozen=True)
class ObjectState:
    x: float
    y: float
    z: float
    vx: float
    vy: float
    w: float
    h: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.vx, self.vy, self.w, self.h], dtype=np.float64)

    @classmethod
    def from_array(cls, a) -> ObjectState:
        a = np.asarray(a, dtype=np.float64)
        if a.shape == (AUG_DIM,):
            a = a[_AUG_KEEP]
        return cls(*(float(v) for v in a))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @property
    def velocity(self) -> np.ndarray:
        return np.array([self.vx, self.vy])


@dataclass(frozen=True)
class Measurement:
    x: float
    y: float
    z: float
    w: float
    h: float
    frame: Frame = Frame.SENSOR

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z, self.w, self.h], dtype=np.float64)


@dataclass(frozen=True)
class NoiseConfig:
    """Diagonals of the process (7) and measurement (5) noise covariances."""

    q_diag: tuple = FilterConfig.q_diag
    r_diag: tuple = FilterConfig.r_diag

    def __post_init__(self) -> None:
        if len(self.q_diag) != STATE_DIM or len(self.r_diag) != MEAS_DIM:
            raise ValueError("q_diag needs 7 entries and r_diag needs 5")
        if min(self.q_diag) < 0 or min(self.r_diag) < 0:
            raise ValueError("noise variances must be non-negative")

    @classmethod
    def from_config(cls, cfg: FilterConfig) -> NoiseConfig:
        return cls(tuple(cfg.q_diag), tuple(cfg.r_diag))

    @property
    def Q(self) -> np.ndarray:
        return np.diag(np.asarray(self.q_diag, dtype=np.float64))

    @property
    def R(self) -> np.ndarray:
        return np.diag(np.asarray(self.r_diag, dtype=np.float64))

    @property
    def Q_aug(self) -> np.ndarray:
        return augment_cov(self.Q)


def make_A(T: float) -> np.ndarray:
    """Constant-velocity transition over ``T`` seconds."""
    if T < 0:
        raise ValueError("time step must be non-negative")
    A = np.eye(STATE_DIM)
    A[0, 3] = T
    A[1, 4] = T
    return A


def make_A_aug(T: float) -> np.ndarray:
    """The transition embedded in the augmented state, 1 at the homogeneous slot."""
    return augment_cov(make_A(T), hom_value=1.0)


def augment_cov(M: np.ndarray, hom_value: float = 0.0) -> np.ndarray:
    """Insert a homogeneous row/column into a 7x7 matrix (or a stack of them)."""
    M = np.asarray(M, dtype=np.float64)
    out = np.zeros(M.shape[:-2] + (AUG_DIM, AUG_DIM))
    idx = np.ix_(_AUG_KEEP, _AUG_KEEP)
    out[(...,) + idx] = M
    out[..., HOM, HOM] = hom_value
    return out


def augment(state, cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = state.as_array() if isinstance(state, ObjectState) else np.asarray(state, dtype=np.float64)
    x_aug = np.insert(x, HOM, 1.0)
    return x_aug, augment_cov(cov)


def deaugment(state_aug: np.ndarray, cov_aug: np.ndarray) -> tuple[ObjectState, np.ndarray]:
    """Drop the homogeneous component; returns ``(ObjectState, 7x7 cov)``."""
    x = np.asarray(state_aug, dtype=np.float64)
    if x[HOM] != 1.0:
        raise ValueError("augmented state must carry hom == 1")
    return ObjectState.from_array(x[_AUG_KEEP]), np.asarray(cov_aug)[np.ix_(_AUG_KEEP, _AUG_KEEP)].copy()


def symmetrize(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P + np.swapaxes(P, -1, -2))


def transition_for(dim: int, T: float) -> np.ndarray:
    if dim == STATE_DIM:
        return make_A(T)
    if dim == AUG_DIM:
        return make_A_aug(T)
    raise ValueError(f"unsupported state dimension {dim}")


def predict(state: np.ndarray, cov: np.ndarray, T: float, Q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Propagate mean and covariance; works on 7- or 8-dimensional states."""
    x = np.asarray(state, dtype=np.float64)
    A = transition_for(len(x), T)
    Q = np.asarray(Q, dtype=np.float64)
    if Q.shape == (STATE_DIM, STATE_DIM) and len(x) == AUG_DIM:
        Q = augment_cov(Q)
    P = A @ cov @ A.T + Q
    return A @ x, symmetrize(P)


def _gain(P: np.ndarray, H: np.ndarray, R: np.ndarray) -> np.ndarray:
    S = H @ P @ H.T + R
    if not np.all(np.isfinite(S)) or np.linalg.cond(S) > MAX_CONDITION:
        raise SingularInnovation("innovation covariance is numerically singular")
    try:
        factor = cho_factor(S)
    except np.linalg.LinAlgError as exc:
        raise SingularInnovation("innovation covariance is not positive definite") from exc
    # K = P H^T S^-1  ->  K^T = S^-1 H P  (S and P symmetric)
    return cho_solve(factor, H @ P).T


def _correct(x, P, y, H, R):
    K = _gain(P, H, R)
    x_new = x + K @ (y - H @ x)
    P_new = (np.eye(len(x)) - K @ H) @ P
    return x_new, symmetrize(P_new)


def _measurement_array(y, expect: Frame) -> np.ndarray:
    if isinstance(y, Measurement):
        if y.frame != expect:
            raise ValueError(f"measurement must be expressed in the {expect.value} frame")
        return y.as_array()
    return np.asarray(y, dtype=np.float64).reshape(MEAS_DIM)


def update_sensor(state: np.ndarray, cov: np.ndarray, y, R: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Standard linear update with the box-selector observation model."""
    return _correct(np.asarray(state, dtype=np.float64), np.asarray(cov, dtype=np.float64),
                    _measurement_array(y, Frame.SENSOR), C, np.asarray(R, dtype=np.float64))


def lift_transform(T_c2o: RigidTransform) -> np.ndarray:
    """8x8 block-diagonal lift: the homogeneous 4x4 transform, then identity."""
    T = np.eye(AUG_DIM)
    T[:4, :4] = T_c2o.as_matrix()
    return T


def observation_map(T_c2o: RigidTransform) -> np.ndarray:
    """``G = C' T'``: maps an augmented map-frame state to a sensor measurement."""
    return C_AUG @ lift_transform(T_c2o)


def update_map(
    state_aug: np.ndarray, cov_aug: np.ndarray, y, T_c2o: RigidTransform, R: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Update a map-frame augmented state with a sensor-frame measurement.

    ``T_c2o`` maps map-frame points into the sensor frame. ``R`` enters the
    innovation covariance untransformed.
    """
    x = np.asarray(state_aug, dtype=np.float64)
    if x.shape != (AUG_DIM,) or x[HOM] != 1.0:
        raise ValueError("augmented state must be 8-dimensional with hom == 1")
    G = observation_map(T_c2o)
    return _correct(x, np.asarray(cov_aug, dtype=np.float64), _measurement_array(y, Frame.SENSOR), G,
                    np.asarray(R, dtype=np.float64))


def initial_state(
    y, T_c2o: RigidTransform, cfg: FilterConfig = FilterConfig()
) -> tuple[np.ndarray, np.ndarray]:
    """Augmented map-frame state and covariance for a track founded by ``y``.

    Position and box come from the measurement, velocity starts at zero.
    """
    m = _measurement_array(y, Frame.SENSOR)
    pos = invert(T_c2o).apply(m[:3])
    x = np.array([pos[0], pos[1], pos[2], 1.0, 0.0, 0.0, m[3], m[4]])
    P = np.diag([
        cfg.init_var_position, cfg.init_var_position, cfg.init_var_position, 0.0,
        cfg.init_var_velocity, cfg.init_var_velocity, cfg.init_var_box, cfg.init_var_box,
    ])
    return x, P


# Batched forms used by the tracker: one call per frame instead of one per track.

def predict_batch(X: np.ndarray, P: np.ndarray, T: float, Q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    A = transition_for(X.shape[1], T)
    return X @ A.T, symmetrize(A @ P @ A.T + Q)


def update_map_batch(
    X: np.ndarray, P: np.ndarray, Y: np.ndarray, T_c2o: RigidTransform, R: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """``update_map`` over a stack of M tracks sharing one ego pose."""
    if len(X) == 0:
        return X, P
    G = observation_map(T_c2o)
    PGt = P @ G.T
    S = G @ PGt + R
    if not np.all(np.isfinite(S)) or np.any(np.linalg.cond(S) > MAX_CONDITION):
        raise SingularInnovation("innovation covariance is numerically singular")
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise SingularInnovation("innovation covariance is not positive definite") from exc
    Lt = np.swapaxes(L, -1, -2)
    # K^T = S^-1 (P G^T)^T via the two triangular factors
    Kt = np.linalg.solve(Lt, np.linalg.solve(L, np.swapaxes(PGt, -1, -2)))
    K = np.swapaxes(Kt, -1, -2)
    innov = Y - X @ G.T
    X_new = X + np.einsum("mij,mj->mi", K, innov)
    P_new = P - K @ G @ P
    return X_new, symmetrize(P_new)


def nees(error: np.ndarray, cov: np.ndarray) -> float:
    """Normalised estimation error squared."""
    e = np.asarray(error, dtype=np.float64)
    return float(e @ np.linalg.solve(cov, e))
