"""Analytic backward pass vs central finite differences.

The loss is sum(g_rgb * rgb) + sum(g_alpha * alpha) for fixed random
upstream images, so its exact gradient is what render_backward returns.
Finite differences re-render through the public forward path only. The
h=1e-3 suite runs on an FD-safe cloud (see oracles.fd_safe_cloud); a
tighter-step spot check covers the regime where the 1/255 support skip
is active inside the frame.
"""

import numpy as np
import pytest

from splatgen.backend import HAVE_NUMBA, use_backend
from splatgen.core import Camera, GaussianCloud
from splatgen.errors import InvalidParameterError
from splatgen.renderer import render, render_backward

from oracles import fd_safe_cloud, random_cloud, spread_depths

FD_H = 1e-3
REL_TOL = 2e-2
GRAD_FLOOR = 1e-6

CAM = Camera(azimuth=25.0, elevation=12.0, radius=2.0, fov_y=49.0, width=48, height=48)
FIELDS = ("centers", "scales", "rotations", "opacities", "colors")


def loss_value(cloud, cam, bg, g_rgb, g_alpha):
    img = render(cloud, cam, bg)
    return float(np.sum(img.rgb * g_rgb) + np.sum(img.alpha * g_alpha))


def fd_gradient(cloud, cam, bg, g_rgb, g_alpha, field, index, h=FD_H):
    """Central finite difference on one scalar entry of a cloud array."""
    up = cloud.copy()
    getattr(up, field)[index] += h
    dn = cloud.copy()
    getattr(dn, field)[index] -= h
    return (
        loss_value(up, cam, bg, g_rgb, g_alpha)
        - loss_value(dn, cam, bg, g_rgb, g_alpha)
    ) / (2 * h)


def compare_all_entries(cloud, cam, bg, g_rgb, g_alpha, bundle, h=FD_H,
                        tol=REL_TOL, entries=None):
    analytic = {
        "centers": bundle.centers,
        "scales": bundle.scales,
        "rotations": bundle.rotations,
        "opacities": bundle.opacities,
        "colors": bundle.colors,
    }
    bad = []
    checked = 0
    for field in FIELDS:
        arr = getattr(cloud, field)
        index_iter = entries[field] if entries else np.ndindex(*arr.shape)
        for index in index_iter:
            a = analytic[field][index]
            f = fd_gradient(cloud, cam, bg, g_rgb, g_alpha, field, index, h)
            denom = max(abs(a), abs(f))
            if denom <= GRAD_FLOOR:
                continue
            checked += 1
            rel = abs(a - f) / denom
            if rel >= tol:
                bad.append((field, index, a, f, rel))
    assert checked > 0
    assert not bad, f"gradient mismatches: {bad[:10]}"


def upstream(rng, cam):
    return (
        rng.normal(size=(cam.height, cam.width, 3)),
        rng.normal(size=(cam.height, cam.width)),
    )


def test_zero_upstream_gives_zero_gradients():
    rng = np.random.default_rng(0)
    cloud = random_cloud(rng, 10)
    g = render_backward(cloud, CAM, (1, 1, 1),
                        np.zeros((48, 48, 3)), np.zeros((48, 48)))
    for arr in (g.centers, g.scales, g.rotations, g.opacities, g.colors,
                g.pos_grad_norm):
        assert np.all(arr == 0.0)


def test_single_gaussian_color_gradient_is_weight_sum():
    cloud = GaussianCloud(
        centers=np.array([[0.0, 0.0, 0.0]]),
        scales=np.full((1, 3), 0.25),
        rotations=np.array([[1.0, 0, 0, 0]]),
        opacities=np.array([0.7]),
        colors=np.array([[0.9, 0.1, 0.2]]),
    )
    cam = Camera(azimuth=0, elevation=0, radius=2.0, width=48, height=48)
    g_rgb = np.zeros((48, 48, 3))
    g_rgb[:, :, 0] = 1.0  # dL/d(red channel) = 1 everywhere
    g = render_backward(cloud, cam, (0, 0, 0), g_rgb)
    # single gaussian: sum over pixels of alpha' * T = rendered alpha plane
    img = render(cloud, cam, (0, 0, 0))
    assert g.colors[0, 0] == pytest.approx(float(np.sum(img.alpha)), rel=1e-10)
    fd = fd_gradient(cloud, cam, (0, 0, 0), g_rgb, np.zeros((48, 48)),
                     "colors", (0, 0))
    assert g.colors[0, 0] == pytest.approx(fd, rel=1e-2)


def test_all_groups_match_finite_differences():
    # The acceptance-grade h=1e-3 check over every parameter of a
    # 20-Gaussian cloud.
    rng = np.random.default_rng(123)
    cloud = fd_safe_cloud(rng, 20, CAM)
    bg = (0.3, 0.6, 0.9)
    g_rgb, g_alpha = upstream(rng, CAM)
    bundle = render_backward(cloud, CAM, bg, g_rgb, g_alpha)
    compare_all_entries(cloud, CAM, bg, g_rgb, g_alpha, bundle)


def test_gradients_with_active_support_skip_small_step():
    # Moderate-size cloud whose 1/255 isolines cross the frame; a smaller FD
    # step keeps the sweep off pixel centers so FD stays a valid oracle.
    rng = np.random.default_rng(123)
    cloud = random_cloud(rng, 20, center_range=0.35,
                         scale_range=(0.06, 0.22), opacity_range=(0.25, 0.9))
    cloud = spread_depths(cloud, CAM, 0.001)
    bg = (0.3, 0.6, 0.9)
    g_rgb, g_alpha = upstream(rng, CAM)
    bundle = render_backward(cloud, CAM, bg, g_rgb, g_alpha)
    sample = {
        "centers": [(i, k) for i in (3, 9, 15) for k in range(3)],
        "scales": [(i, k) for i in (4, 12) for k in range(3)],
        "rotations": [(i, k) for i in (7, 19) for k in range(4)],
        "opacities": [(i,) for i in (0, 5, 11)],
        "colors": [(i, k) for i in (2, 18) for k in range(3)],
    }
    compare_all_entries(cloud, CAM, bg, g_rgb, g_alpha, bundle,
                        h=1e-5, tol=1e-3, entries=sample)


def test_pos_grad_norm_matches_screen_gradient():
    rng = np.random.default_rng(7)
    cloud = random_cloud(rng, 15)
    g_rgb, g_alpha = upstream(rng, CAM)
    bundle = render_backward(cloud, CAM, (1, 1, 1), g_rgb, g_alpha)
    assert np.all(bundle.pos_grad_norm >= 0.0)
    assert bundle.seen.sum() == len(cloud)  # all in front of this camera
    assert np.any(bundle.pos_grad_norm > 0.0)


def test_non_finite_upstream_rejected():
    rng = np.random.default_rng(1)
    cloud = random_cloud(rng, 5)
    bad = np.zeros((48, 48, 3))
    bad[0, 0, 0] = np.nan
    with pytest.raises(InvalidParameterError):
        render_backward(cloud, CAM, (1, 1, 1), bad)


@pytest.mark.skipif(not HAVE_NUMBA, reason="needs both backends")
def test_backends_agree_on_gradients():
    rng = np.random.default_rng(31)
    cloud = random_cloud(rng, 40)
    g_rgb, g_alpha = upstream(rng, CAM)
    with use_backend("numba"):
        a = render_backward(cloud, CAM, (0.5, 0.5, 0.5), g_rgb, g_alpha)
    with use_backend("numpy"):
        b = render_backward(cloud, CAM, (0.5, 0.5, 0.5), g_rgb, g_alpha)
    for x, y in ((a.centers, b.centers), (a.scales, b.scales),
                 (a.rotations, b.rotations), (a.opacities, b.opacities),
                 (a.colors, b.colors)):
        np.testing.assert_allclose(x, y, rtol=1e-8, atol=1e-10)
