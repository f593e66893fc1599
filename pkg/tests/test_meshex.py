"""Density query and block-grid tests against naive summation oracles."""

import numpy as np
import pytest

from splatgen.backend import HAVE_NUMBA, use_backend
from splatgen.core import GaussianCloud
from splatgen.meshex import block_partition, build_grid, density_at
from splatgen.meshex.density import GRID_RES
from splatgen.synthetic import single_blob_scene, three_blob_scene

from oracles import naive_density, random_cloud


def scene_cloud(rng, n, scale_range=(0.01, 0.08)):
    """Cloud confined to the grid domain with trained-scale statistics."""
    return random_cloud(rng, n, center_range=0.6, scale_range=scale_range,
                        opacity_range=(0.05, 1.0))


class TestDensityAt:
    def test_center_of_single_gaussian(self):
        scene = single_blob_scene(sigma=0.1, opacity=0.8)
        assert density_at(np.zeros(3), scene) == pytest.approx(0.8, abs=1e-14)

    def test_analytic_offset(self):
        # 0.8 * exp(-0.5) at one stddev from an isotropic gaussian
        scene = single_blob_scene(sigma=0.1, opacity=0.8)
        val = density_at(np.array([0.1, 0.0, 0.0]), scene)
        assert val == pytest.approx(0.4852245277701068, abs=1e-12)

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(8)
        cloud = scene_cloud(rng, 50, scale_range=(0.02, 0.3))
        points = rng.uniform(-1, 1, (100, 3))
        expected = naive_density(points, cloud.centers, cloud.scales,
                                 cloud.rotations, cloud.opacities)
        got = density_at(points, cloud)
        np.testing.assert_allclose(got, expected, atol=1e-10)

    def test_rotation_invariance(self):
        # rotating points, centers and orientations together leaves d unchanged
        from splatgen.core.gaussians import quat_to_rotmat

        rng = np.random.default_rng(9)
        cloud = scene_cloud(rng, 20)
        points = rng.uniform(-0.8, 0.8, (50, 3))
        base = density_at(points, cloud)

        q = np.array([0.8, 0.36, -0.3, 0.37])
        q /= np.linalg.norm(q)
        rot = quat_to_rotmat(q)

        def quat_mul(a, b):
            w1, x1, y1, z1 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
            w2, x2, y2, z2 = b[0], b[1], b[2], b[3]
            return np.stack([
                w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
                w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
                w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
                w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
            ], axis=-1)

        rotated = GaussianCloud(
            centers=cloud.centers @ rot.T,
            scales=cloud.scales,
            rotations=np.array([quat_mul(q[None, :], r)[0] for r in cloud.rotations]),
            opacities=cloud.opacities,
            colors=cloud.colors,
        )
        got = density_at(points @ rot.T, rotated)
        np.testing.assert_allclose(got, base, atol=1e-8)

    def test_empty_cloud(self):
        empty = GaussianCloud(
            centers=np.zeros((0, 3)), scales=np.zeros((0, 3)),
            rotations=np.zeros((0, 4)), opacities=np.zeros(0), colors=np.zeros((0, 3)),
        )
        assert density_at(np.zeros(3), empty) == 0.0


class TestBuildGrid:
    def test_matches_bruteforce_within_truncation(self):
        rng = np.random.default_rng(4)
        cloud = scene_cloud(rng, 150)
        grid = build_grid(cloud)
        coords = grid.coordinates()
        # compare on a subsampled lattice to keep the oracle cheap
        sub = coords[::8]
        pts = np.stack(np.meshgrid(sub, sub, sub, indexing="ij"), axis=-1).reshape(-1, 3)
        expected = naive_density(pts, cloud.centers, cloud.scales,
                                 cloud.rotations, cloud.opacities)
        got = grid.values[::8, ::8, ::8].ravel()
        assert np.max(np.abs(got - expected)) < 1.2e-4

    def test_empty_cloud_zero_grid(self):
        empty = GaussianCloud(
            centers=np.zeros((0, 3)), scales=np.zeros((0, 3)),
            rotations=np.zeros((0, 4)), opacities=np.zeros(0), colors=np.zeros((0, 3)),
        )
        grid = build_grid(empty)
        assert grid.values.shape == (GRID_RES, GRID_RES, GRID_RES)
        assert np.all(grid.values == 0.0)

    def test_locality_of_tiny_gaussian(self):
        cloud = single_blob_scene(sigma=0.01, opacity=1.0)
        cloud.centers[0] = np.array([0.4, 0.3, -0.2])
        grid = build_grid(cloud)
        coords = grid.coordinates()
        nz = np.argwhere(grid.values > 1e-12)
        pts = np.stack([coords[nz[:, 0]], coords[nz[:, 1]], coords[nz[:, 2]]], axis=1)
        dist = np.linalg.norm(pts - cloud.centers[0], axis=1)
        assert nz.size > 0
        assert np.max(dist) < 0.1  # confined to the gaussian's neighborhood

    def test_conservative_culling_superset(self):
        rng = np.random.default_rng(5)
        cloud = scene_cloud(rng, 40)
        part = block_partition(cloud, "bbox")
        part_center = block_partition(cloud, "center")
        # bbox lists must be supersets of center lists per block
        for bx in range(0, 16, 5):
            for by in range(0, 16, 5):
                for bz in range(0, 16, 5):
                    a = set(part.block(bx, by, bz).tolist())
                    c = set(part_center.block(bx, by, bz).tolist())
                    assert c.issubset(a)

    def test_center_culling_coarser(self):
        cloud = single_blob_scene(sigma=0.2, opacity=1.0)
        bbox_grid = build_grid(cloud, culling="bbox")
        center_grid = build_grid(cloud, culling="center")
        # center culling truncates support crossing block boundaries
        assert np.sum(center_grid.values > 1e-6) < np.sum(bbox_grid.values > 1e-6)

    def test_grid_finite_nonnegative(self):
        grid = build_grid(three_blob_scene())
        assert np.all(np.isfinite(grid.values))
        assert np.all(grid.values >= 0.0)
        assert grid.values.max() > 1.0  # acceptance scene crosses the MC threshold

    @pytest.mark.skipif(not HAVE_NUMBA, reason="needs both backends")
    def test_backends_agree(self):
        rng = np.random.default_rng(6)
        cloud = scene_cloud(rng, 60)
        with use_backend("numba"):
            a = build_grid(cloud)
        with use_backend("numpy"):
            b = build_grid(cloud)
        np.testing.assert_allclose(a.values, b.values, atol=1e-12)
