from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tracklite.errors import BehindCamera
from tracklite.geometry import (
    CameraIntrinsics,
    Pixel,
    Point3,
    RigidTransform,
    compose,
    invert,
    lidar_to_camera_rotation,
    project,
    project_points,
    random_transform,
    transform_point,
)

K = CameraIntrinsics(fx=700.0, fy=710.0, cx=620.0, cy=180.0, width=1242, height=375)

seeds = st.integers(min_value=0, max_value=2**32 - 1)
coords = st.floats(min_value=-100.0, max_value=100.0, allow_nan=False)
points = st.tuples(coords, coords, coords)


def _rot_z(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


class TestRigidTransform:
    def test_identity_leaves_points(self):
        p = Point3(1.0, -2.0, 3.0)
        assert transform_point(RigidTransform.identity(), p) == p

    def test_translation_only(self):
        T = RigidTransform(np.eye(3), [1.0, 2.0, 3.0])
        np.testing.assert_allclose(transform_point(T, [0.0, 0.0, 0.0]), [1.0, 2.0, 3.0])

    def test_quarter_turn(self):
        T = RigidTransform(_rot_z(np.pi / 2), [0.0, 0.0, 0.0])
        np.testing.assert_allclose(transform_point(T, [1.0, 0.0, 0.0]), [0.0, 1.0, 0.0], atol=1e-15)

    def test_rejects_non_orthonormal(self):
        with pytest.raises(ValueError):
            RigidTransform(np.diag([1.0, 1.0, 1.001]), [0.0, 0.0, 0.0])

    def test_rejects_reflection(self):
        with pytest.raises(ValueError):
            RigidTransform(np.diag([1.0, 1.0, -1.0]), [0.0, 0.0, 0.0])

    def test_arrays_are_read_only(self):
        T = RigidTransform.identity()
        with pytest.raises(ValueError):
            T.translation[0] = 5.0

    def test_matrix_round_trip(self):
        T = random_transform(np.random.default_rng(3))
        assert RigidTransform.from_matrix(T.as_matrix()).allclose(T, atol=1e-15)

    def test_quaternion_round_trip(self):
        T = random_transform(np.random.default_rng(4))
        back = RigidTransform.from_quaternion(T.translation, T.quaternion_wxyz())
        assert back.allclose(T, atol=1e-12)

    def test_yaw_constructor(self):
        T = RigidTransform.from_yaw(np.pi, (1.0, 0.0, 0.0))
        np.testing.assert_allclose(T.apply(np.array([1.0, 0.0, 0.0])), [0.0, 0.0, 0.0], atol=1e-15)

    def test_matmul_is_compose(self):
        rng = np.random.default_rng(5)
        A, B = random_transform(rng), random_transform(rng)
        assert (A @ B).allclose(compose(A, B), atol=0.0)

    def test_point3_rejects_nan(self):
        with pytest.raises(ValueError):
            Point3(float("nan"), 0.0, 0.0)


class TestTransformProperties:
    @settings(max_examples=200, deadline=None)
    @given(seeds, points)
    def test_inverse_undoes(self, seed, p):
        T = random_transform(np.random.default_rng(seed))
        back = transform_point(invert(T), transform_point(T, p))
        np.testing.assert_allclose(back, p, atol=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(seeds)
    def test_double_inversion(self, seed):
        T = random_transform(np.random.default_rng(seed))
        assert invert(invert(T)).allclose(T, atol=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(seeds)
    def test_compose_with_inverse_is_identity(self, seed):
        T = random_transform(np.random.default_rng(seed))
        assert compose(T, invert(T)).allclose(RigidTransform.identity(), atol=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(seeds)
    def test_compose_matches_point_action(self, seed):
        # oracle: applying B then A point by point
        rng = np.random.default_rng(seed)
        A, B = random_transform(rng), random_transform(rng)
        AB = compose(A, B)
        for p in rng.uniform(-50, 50, size=(10, 3)):
            expected = A.rotation @ (B.rotation @ p + B.translation) + A.translation
            np.testing.assert_allclose(transform_point(AB, p), expected, atol=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(seeds)
    def test_compose_associative(self, seed):
        rng = np.random.default_rng(seed)
        A, B, C = (random_transform(rng) for _ in range(3))
        assert compose(compose(A, B), C).allclose(compose(A, compose(B, C)), atol=1e-9)

    @settings(max_examples=100, deadline=None)
    @given(seeds)
    def test_random_transform_is_rigid(self, seed):
        T = random_transform(np.random.default_rng(seed))
        np.testing.assert_allclose(T.rotation.T @ T.rotation, np.eye(3), atol=1e-12)
        assert abs(np.linalg.det(T.rotation) - 1.0) < 1e-12


class TestProjection:
    def test_principal_point(self):
        assert project(Point3(0.0, 0.0, 5.0), K) == Pixel(K.cx, K.cy)

    def test_hand_value(self):
        px = project([1.0, -0.5, 10.0], K)
        assert px.u == pytest.approx(620.0 + 70.0)
        assert px.v == pytest.approx(180.0 - 35.5)

    @pytest.mark.parametrize("z", [0.0, -1.0])
    def test_behind_camera(self, z):
        with pytest.raises(BehindCamera):
            project([0.0, 0.0, z], K)

    @settings(max_examples=200, deadline=None)
    @given(points, st.floats(min_value=0.01, max_value=100.0))
    def test_scale_invariant_along_rays(self, p, lam):
        x, y, z = p
        z = abs(z) + 0.1
        a = project([x, y, z], K)
        b = project([lam * x, lam * y, lam * z], K)
        assert abs(a.u - b.u) <= 1e-9 * max(1.0, abs(a.u))
        assert abs(a.v - b.v) <= 1e-9 * max(1.0, abs(a.v))

    def test_vectorised_matches_scalar(self):
        rng = np.random.default_rng(0)
        pts = rng.uniform(-5, 5, size=(50, 3))
        uv, front = project_points(pts, K)
        for p, row, f in zip(pts, uv, front):
            if f:
                px = project(p, K)
                np.testing.assert_allclose(row, [px.u, px.v], rtol=1e-15)
            else:
                assert np.all(np.isnan(row))

    def test_lidar_axes_map_to_camera_axes(self):
        R = lidar_to_camera_rotation()
        np.testing.assert_array_equal(R @ [1, 0, 0], [0, 0, 1])  # forward -> depth
        np.testing.assert_array_equal(R @ [0, 1, 0], [-1, 0, 0])  # left -> -right
        np.testing.assert_array_equal(R @ [0, 0, 1], [0, -1, 0])  # up -> -down
        assert np.linalg.det(R) == pytest.approx(1.0)

    def test_intrinsics_validate(self):
        with pytest.raises(ValueError):
            CameraIntrinsics(fx=-1.0, fy=1.0, cx=0.0, cy=0.0, width=10, height=10)
