"""Synthetic ground-truth scenes for oracle-guided runs and tests."""

from __future__ import annotations

import numpy as np

from .core.types import Camera, GaussianCloud, ImageBuffer

__all__ = [
    "three_blob_scene",
    "single_blob_scene",
    "dense_color_ball",
    "color_washed",
    "matted_reference",
]


def three_blob_scene() -> GaussianCloud:
    """Three overlapping colored Gaussians near the origin.

    Opacities and spacing are chosen so the summed density crosses 1.0 in a
    single connected blob, giving a closed genus-0 isosurface at the default
    marching-cubes threshold.
    """
    centers = np.array(
        [
            [0.11, 0.0, -0.02],
            [-0.07, 0.10, 0.06],
            [-0.05, -0.11, -0.06],
        ]
    )
    scales = np.array(
        [
            [0.16, 0.13, 0.14],
            [0.13, 0.15, 0.13],
            [0.14, 0.13, 0.15],
        ]
    )
    rotations = np.array(
        [
            [0.95, 0.2, 0.0, 0.24],
            [0.9, -0.3, 0.3, 0.0],
            [0.98, 0.0, -0.2, 0.0],
        ]
    )
    rotations = rotations / np.linalg.norm(rotations, axis=1, keepdims=True)
    opacities = np.array([0.95, 0.95, 0.95])
    colors = np.array(
        [
            [0.85, 0.25, 0.2],
            [0.2, 0.75, 0.3],
            [0.25, 0.35, 0.85],
        ]
    )
    return GaussianCloud(centers, scales, rotations, opacities, colors)


def matted_reference(scene: GaussianCloud, camera: Camera):
    """Pre-matted RGBA reference input rendered from a ground-truth scene.

    Renders over black (so rgb holds the premultiplied foreground), then
    unpremultiplies by alpha. Compositing the result over any background
    reproduces the scene render over that background.
    """
    from .renderer import render
    from .trainer.losses import ReferenceInput

    img = render(scene, camera, (0.0, 0.0, 0.0))
    alpha = img.alpha
    fg = np.where(
        alpha[:, :, None] > 1e-6,
        img.rgb / np.maximum(alpha, 1e-6)[:, :, None],
        0.0,
    )
    buffer = ImageBuffer(rgb=np.clip(fg, 0.0, 1.0), alpha=alpha)
    return ReferenceInput(image=buffer, camera=camera)


def dense_color_ball(
    count: int = 200,
    radius: float = 0.24,
    scale_range=(0.03, 0.05),
    opacity: float = 0.95,
    seed: int = 5,
) -> GaussianCloud:
    """Densely packed ball with a smooth position-dependent color field.

    The summed density well exceeds 1 inside, so the extracted mesh tracks
    the visual surface closely; used by the texture-refinement acceptance
    run.
    """
    rng = np.random.default_rng(seed)
    direction = rng.normal(size=(count, 3))
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    r = radius * rng.random(count) ** (1.0 / 3.0)
    centers = direction * r[:, None]
    scales = rng.uniform(scale_range[0], scale_range[1], (count, 3))
    rotations = rng.normal(size=(count, 4))
    rotations /= np.linalg.norm(rotations, axis=1, keepdims=True)
    colors = np.clip(
        0.5
        + 0.48
        * np.stack(
            [
                np.sin(7.0 * centers[:, 0]),
                np.cos(9.0 * centers[:, 1]),
                np.sin(8.0 * centers[:, 2]),
            ],
            axis=1,
        ),
        0.0,
        1.0,
    )
    return GaussianCloud(
        centers, scales, rotations, np.full(count, float(opacity)), colors
    )


def color_washed(scene: GaussianCloud, amount: float = 0.9) -> GaussianCloud:
    """Copy of a scene with colors pulled toward mid-grey (a stand-in for the
    washed-out appearance of a stage-1 result)."""
    out = scene.copy()
    out.colors = (1.0 - amount) * out.colors + amount * 0.5
    return out


def single_blob_scene(sigma: float = 0.25, opacity: float = 3.0) -> GaussianCloud:
    """One isotropic Gaussian; with opacity alpha > 1 the density-1 isosurface
    is the sphere of radius sigma * sqrt(2 ln alpha)."""
    return GaussianCloud(
        centers=np.zeros((1, 3)),
        scales=np.full((1, 3), float(sigma)),
        rotations=np.array([[1.0, 0.0, 0.0, 0.0]]),
        opacities=np.array([float(opacity)]),
        colors=np.array([[0.8, 0.8, 0.8]]),
    )
