"""Guidance oracle tests: residual/refine semantics and their invariants."""

import numpy as np
import pytest

from splatgen.core import Camera, ImageBuffer
from splatgen.errors import InvalidParameterError
from splatgen.guidance import (
    GuidanceRequest,
    GuidanceResponse,
    ImageConditioning,
    OracleGuidance,
    TextConditioning,
    ZeroGuidance,
    oracle_refine,
    oracle_residual,
)
from splatgen.renderer import render
from splatgen.synthetic import three_blob_scene

from oracles import random_cloud

CAM = Camera(azimuth=40.0, elevation=-10.0, radius=2.0, fov_y=49.0, width=64, height=64)


def residual_request(image, background=(1, 1, 1), timestep=0.5):
    return GuidanceRequest(
        kind="residual", image=image, camera=CAM, timestep=timestep,
        conditioning=TextConditioning(prompt="test"), background=background,
    )


def refine_request(image, background=(1, 1, 1), timestep=0.5):
    return GuidanceRequest(
        kind="refine", image=image, camera=CAM, timestep=timestep,
        conditioning=TextConditioning(prompt="test"), background=background,
    )


class TestOracleResidual:
    def test_fixed_point(self):
        scene = three_blob_scene()
        img = render(scene, CAM, (1, 1, 1))
        resp = oracle_residual(residual_request(img), scene)
        assert np.max(np.abs(resp.residual)) == 0.0

    def test_extremes(self):
        scene = three_blob_scene()
        black = ImageBuffer(rgb=np.zeros((64, 64, 3)), alpha=np.zeros((64, 64)))
        resp = oracle_residual(residual_request(black, background=(1, 1, 1)), scene)
        gt = render(scene, CAM, (1, 1, 1))
        # empty background regions: residual = 0 - 1 = -1
        bg_mask = gt.alpha < 1e-6
        assert np.all(np.abs(resp.residual[bg_mask] + 1.0) < 1e-12)

    def test_matches_pixel_loop(self):
        rng = np.random.default_rng(0)
        scene = random_cloud(rng, 30)
        img = ImageBuffer(rgb=rng.random((64, 64, 3)), alpha=rng.random((64, 64)))
        resp = oracle_residual(residual_request(img, background=(0, 0, 0)), scene)
        gt = render(scene, CAM, (0, 0, 0))
        expected = np.empty((64, 64, 3))
        for y in range(64):
            for x in range(64):
                for c in range(3):
                    expected[y, x, c] = img.rgb[y, x, c] - gt.rgb[y, x, c]
        np.testing.assert_array_equal(resp.residual, expected)

    def test_antisymmetric(self):
        scene = three_blob_scene()
        rng = np.random.default_rng(5)
        img = ImageBuffer(rgb=rng.random((64, 64, 3)), alpha=np.ones((64, 64)))
        gt = render(scene, CAM, (1, 1, 1))
        fwd = oracle_residual(residual_request(img), scene).residual
        # swapping image and ground truth negates the residual exactly
        swapped = oracle_residual(residual_request(gt), scene).residual + (
            img.rgb - gt.rgb
        ) - fwd
        rev = gt.rgb - img.rgb  # analytic swap
        np.testing.assert_array_equal(fwd, -rev)
        assert np.max(np.abs(swapped)) < 1e-15


class TestOracleRefine:
    def test_blend_zero_identity(self):
        scene = three_blob_scene()
        rng = np.random.default_rng(2)
        img = ImageBuffer(rgb=rng.random((64, 64, 3)), alpha=np.ones((64, 64)))
        resp = oracle_refine(refine_request(img), scene, blend=0.0)
        np.testing.assert_array_equal(resp.refined.rgb, img.rgb)

    def test_blend_one_replacement(self):
        scene = three_blob_scene()
        img = ImageBuffer(rgb=np.zeros((64, 64, 3)), alpha=np.zeros((64, 64)))
        resp = oracle_refine(refine_request(img), scene, blend=1.0)
        gt = render(scene, CAM, (1, 1, 1))
        np.testing.assert_array_equal(resp.refined.rgb, gt.rgb)

    def test_midpoint_exact(self):
        scene = three_blob_scene()
        rng = np.random.default_rng(3)
        img = ImageBuffer(rgb=rng.random((64, 64, 3)), alpha=np.ones((64, 64)))
        resp = oracle_refine(refine_request(img), scene, blend=0.5)
        gt = render(scene, CAM, (1, 1, 1))
        expected = np.empty_like(img.rgb)
        for y in range(64):
            for x in range(64):
                for c in range(3):
                    expected[y, x, c] = 0.5 * gt.rgb[y, x, c] + 0.5 * img.rgb[y, x, c]
        np.testing.assert_allclose(resp.refined.rgb, expected, atol=1e-15)

    def test_blend_defaults_to_timestep(self):
        scene = three_blob_scene()
        rng = np.random.default_rng(4)
        img = ImageBuffer(rgb=rng.random((64, 64, 3)), alpha=np.ones((64, 64)))
        gt = render(scene, CAM, (1, 1, 1))
        resp = oracle_refine(refine_request(img, timestep=0.25), scene)
        expected = 0.25 * gt.rgb + 0.75 * img.rgb
        np.testing.assert_allclose(resp.refined.rgb, expected, atol=1e-15)

    def test_convex_combination_bounds(self):
        scene = three_blob_scene()
        rng = np.random.default_rng(6)
        img = ImageBuffer(rgb=rng.random((64, 64, 3)), alpha=np.ones((64, 64)))
        gt = render(scene, CAM, (1, 1, 1))
        for blend in (0.1, 0.5, 0.9):
            out = oracle_refine(refine_request(img), scene, blend=blend).refined.rgb
            lo = np.minimum(img.rgb, gt.rgb) - 1e-12
            hi = np.maximum(img.rgb, gt.rgb) + 1e-12
            assert np.all(out >= lo) and np.all(out <= hi)


class TestRequestValidation:
    def test_timestep_range(self):
        img = ImageBuffer(rgb=np.zeros((64, 64, 3)), alpha=np.zeros((64, 64)))
        with pytest.raises(InvalidParameterError):
            GuidanceRequest(kind="residual", image=img, camera=CAM, timestep=0.0,
                            conditioning=TextConditioning("x"))
        with pytest.raises(InvalidParameterError):
            GuidanceRequest(kind="residual", image=img, camera=CAM, timestep=1.5,
                            conditioning=TextConditioning("x"))

    def test_conditioning_required(self):
        img = ImageBuffer(rgb=np.zeros((64, 64, 3)), alpha=np.zeros((64, 64)))
        with pytest.raises(InvalidParameterError):
            GuidanceRequest(kind="residual", image=img, camera=CAM, timestep=0.5,
                            conditioning=None)

    def test_response_exactly_one_payload(self):
        with pytest.raises(InvalidParameterError):
            GuidanceResponse()
        with pytest.raises(InvalidParameterError):
            GuidanceResponse(
                residual=np.zeros((4, 4, 3)),
                refined=ImageBuffer(rgb=np.zeros((4, 4, 3)), alpha=np.zeros((4, 4))),
            )

    def test_zero_guidance(self):
        img = ImageBuffer(rgb=np.full((64, 64, 3), 0.3), alpha=np.ones((64, 64)))
        z = ZeroGuidance()
        assert np.all(z(residual_request(img)).residual == 0.0)
        np.testing.assert_array_equal(z(refine_request(img)).refined.rgb, img.rgb)

    def test_oracle_guidance_dispatches_both_kinds(self):
        scene = three_blob_scene()
        g = OracleGuidance(scene)
        img = render(scene, CAM, (1, 1, 1))
        assert g(residual_request(img)).residual is not None
        assert g(refine_request(img)).refined is not None
