"""Deterministic guidance oracles backed by a ground-truth Gaussian scene.

These stand in for a 2D diffusion prior at desk scale: the residual oracle
returns the difference between the request image and a render of the
ground-truth scene (driving the same trainer code path a real prior
would), and the refine oracle blends the coarse image toward the
ground-truth render.
"""

from __future__ import annotations

import numpy as np

from ..core.types import GaussianCloud, ImageBuffer
from ..errors import InvalidParameterError
from ..renderer import render
from .types import REFINE, RESIDUAL, GuidanceRequest, GuidanceResponse

__all__ = [
    "oracle_residual",
    "oracle_refine",
    "OracleGuidance",
    "ZeroGuidance",
    "IdentityRefiner",
]

DEFAULT_BACKGROUND = (1.0, 1.0, 1.0)


def _scene_render(request: GuidanceRequest, scene: GaussianCloud) -> ImageBuffer:
    bg = request.background if request.background is not None else DEFAULT_BACKGROUND
    return render(scene, request.camera, bg)


def oracle_residual(request: GuidanceRequest, scene: GaussianCloud) -> GuidanceResponse:
    """residual = request image minus the ground-truth render at that view."""
    if request.kind != RESIDUAL:
        raise InvalidParameterError(f"expected a residual request, got {request.kind!r}")
    gt = _scene_render(request, scene)
    return GuidanceResponse(residual=request.image.rgb - gt.rgb)


def oracle_refine(
    request: GuidanceRequest, scene: GaussianCloud, blend: float | None = None
) -> GuidanceResponse:
    """Convex blend of the coarse image toward the ground-truth render.

    blend defaults to the request timestep: stronger noise means a stronger
    correction, mirroring how a denoiser at higher t rewrites more of the
    image.
    """
    if request.kind != REFINE:
        raise InvalidParameterError(f"expected a refine request, got {request.kind!r}")
    if blend is None:
        blend = request.timestep
    if not (0.0 <= blend <= 1.0):
        raise InvalidParameterError(f"blend must lie in [0, 1], got {blend}")
    gt = _scene_render(request, scene)
    rgb = blend * gt.rgb + (1.0 - blend) * request.image.rgb
    alpha = blend * gt.alpha + (1.0 - blend) * request.image.alpha
    return GuidanceResponse(refined=ImageBuffer(rgb=rgb, alpha=alpha))


class OracleGuidance:
    """Callable handling both request kinds against one ground-truth scene."""

    def __init__(self, scene: GaussianCloud, blend: float | None = None):
        self.scene = scene
        self.blend = blend

    def __call__(self, request: GuidanceRequest) -> GuidanceResponse:
        if request.kind == RESIDUAL:
            return oracle_residual(request, self.scene)
        return oracle_refine(request, self.scene, self.blend)


class ZeroGuidance:
    """Zero residual / identity refinement; a training no-op."""

    def __call__(self, request: GuidanceRequest) -> GuidanceResponse:
        if request.kind == RESIDUAL:
            return GuidanceResponse(
                residual=np.zeros((request.image.height, request.image.width, 3))
            )
        return GuidanceResponse(refined=request.image)


IdentityRefiner = ZeroGuidance
