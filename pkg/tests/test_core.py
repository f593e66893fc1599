"""Core type tests: covariance construction, cloud init, quaternions."""

import numpy as np
import pytest

from splatgen.core import (
    Camera,
    GaussianCloud,
    covariance_from,
    init_cloud,
    normalize_quaternion,
    quat_to_rotmat,
)
from splatgen.errors import InvalidParameterError

IDENTITY_Q = np.array([1.0, 0.0, 0.0, 0.0])
# 90 degrees about z, scalar-first
ROT90_Z = np.array([np.cos(np.pi / 4), 0.0, 0.0, np.sin(np.pi / 4)])


class TestCovarianceFrom:
    def test_identity(self):
        cov = covariance_from(np.ones(3), IDENTITY_Q)
        np.testing.assert_allclose(cov, np.eye(3), atol=1e-15)

    def test_axis_aligned(self):
        cov = covariance_from(np.array([2.0, 1.0, 1.0]), IDENTITY_Q)
        np.testing.assert_allclose(cov, np.diag([4.0, 1.0, 1.0]), atol=1e-15)

    def test_rotated_90_about_z(self):
        # Oracle: numeric R S S^T R^T with R built directly from the angle
        # gives diag(1, 4, 1) for scale (2, 1, 1).
        cov = covariance_from(np.array([2.0, 1.0, 1.0]), ROT90_Z)
        np.testing.assert_allclose(cov, np.diag([1.0, 4.0, 1.0]), atol=1e-12)

    def test_symmetry_and_eigenvalues(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            scale = rng.uniform(0.05, 2.0, size=3)
            q = rng.normal(size=4)
            cov = covariance_from(scale, q)
            np.testing.assert_allclose(cov, cov.T, atol=1e-14)
            eig = np.sort(np.linalg.eigvalsh(cov))
            np.testing.assert_allclose(eig, np.sort(scale**2), atol=1e-6)

    def test_rejects_bad_input(self):
        with pytest.raises(InvalidParameterError):
            covariance_from(np.array([1.0, -1.0, 1.0]), IDENTITY_Q)
        with pytest.raises(InvalidParameterError):
            covariance_from(np.array([1.0, np.nan, 1.0]), IDENTITY_Q)
        with pytest.raises(InvalidParameterError):
            covariance_from(np.ones(3), np.array([np.inf, 0, 0, 0]))


class TestQuaternions:
    def test_normalization_idempotent_bitexact(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            q = rng.normal(size=4) * rng.uniform(0.1, 10.0)
            once = normalize_quaternion(q)
            twice = normalize_quaternion(once)
            assert np.array_equal(once, twice)

    def test_zero_quaternion_rejected(self):
        with pytest.raises(InvalidParameterError):
            normalize_quaternion(np.zeros(4))

    def test_rotmat_orthonormal(self):
        rng = np.random.default_rng(11)
        q = normalize_quaternion(rng.normal(size=(20, 4)))
        rot = quat_to_rotmat(q)
        eye = rot @ np.swapaxes(rot, -1, -2)
        np.testing.assert_allclose(eye, np.broadcast_to(np.eye(3), (20, 3, 3)), atol=1e-12)
        np.testing.assert_allclose(np.linalg.det(rot), np.ones(20), atol=1e-12)


class TestInitCloud:
    def test_published_defaults(self):
        cloud = init_cloud(5000, 0.5, seed=42)
        assert len(cloud) == 5000
        assert np.all(np.linalg.norm(cloud.centers, axis=1) <= 0.5 + 1e-12)
        assert np.all(cloud.opacities == 0.1)
        assert np.all(cloud.colors == 0.5)
        assert np.all(cloud.rotations == np.array([1.0, 0.0, 0.0, 0.0]))
        assert np.all(cloud.scales > 0.0)

    def test_degenerate_radius(self):
        cloud = init_cloud(1, 0.0)
        assert len(cloud) == 1
        np.testing.assert_array_equal(cloud.centers, np.zeros((1, 3)))
        assert np.all(cloud.scales > 0.0)

    def test_deterministic(self):
        a = init_cloud(100, 0.5, seed=9)
        b = init_cloud(100, 0.5, seed=9)
        assert np.array_equal(a.centers, b.centers)
        assert np.array_equal(a.scales, b.scales)

    def test_zero_count_rejected(self):
        with pytest.raises(InvalidParameterError):
            init_cloud(0, 0.5)

    def test_ball_uniformity(self):
        # Mean radius of a uniform ball is 3r/4.
        cloud = init_cloud(5000, 0.5, seed=123)
        mean_r = np.mean(np.linalg.norm(cloud.centers, axis=1))
        assert abs(mean_r - 0.375) <= 0.1 * 0.375


class TestCamera:
    def test_orbit_position(self):
        cam = Camera(azimuth=0.0, elevation=0.0, radius=2.0)
        np.testing.assert_allclose(cam.position, [0.0, -2.0, 0.0], atol=1e-12)
        cam = Camera(azimuth=90.0, elevation=0.0, radius=2.0)
        np.testing.assert_allclose(cam.position, [2.0, 0.0, 0.0], atol=1e-12)

    def test_rotation_is_orthonormal_and_looks_at_target(self):
        for az, el in [(0, 0), (45, 20), (-120, -25), (180, 30)]:
            cam = Camera(azimuth=az, elevation=el, radius=2.0)
            rot = cam.rotation
            np.testing.assert_allclose(rot @ rot.T, np.eye(3), atol=1e-12)
            # target must land on the +z camera axis
            tc = cam.world_to_camera(cam.target)[0]
            np.testing.assert_allclose(tc[:2], 0.0, atol=1e-12)
            assert tc[2] == pytest.approx(2.0)

    def test_validation(self):
        with pytest.raises(InvalidParameterError):
            Camera(azimuth=0, elevation=0, radius=0.0)
        with pytest.raises(InvalidParameterError):
            Camera(azimuth=0, elevation=0, radius=1.0, fov_y=0.0)
        with pytest.raises(InvalidParameterError):
            Camera(azimuth=0, elevation=0, radius=1.0, width=4)

    def test_pole_views_have_valid_frames(self):
        for el in (90.0, -90.0):
            cam = Camera(azimuth=0.0, elevation=el, radius=2.0)
            rot = cam.rotation
            np.testing.assert_allclose(rot @ rot.T, np.eye(3), atol=1e-12)


class TestGaussianCloudContainer:
    def test_indexing_roundtrip(self):
        cloud = init_cloud(10, 0.5, seed=1)
        g = cloud[3]
        np.testing.assert_array_equal(g.center, cloud.centers[3])
        assert g.opacity == cloud.opacities[3]

    def test_shape_validation(self):
        with pytest.raises(InvalidParameterError):
            GaussianCloud(
                centers=np.zeros((4, 3)),
                scales=np.ones((3, 3)),
                rotations=np.tile([1.0, 0, 0, 0], (4, 1)),
                opacities=np.full(4, 0.5),
                colors=np.full((4, 3), 0.5),
            )
