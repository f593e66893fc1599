"""Guidance request/response contract shared by oracles, the remote client
and any server implementing the wire protocol."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from ..core.types import Camera, ImageBuffer
from ..errors import InvalidParameterError

__all__ = [
    "ImageConditioning",
    "TextConditioning",
    "GuidanceRequest",
    "GuidanceResponse",
    "RESIDUAL",
    "REFINE",
]

RESIDUAL = "residual"
REFINE = "refine"


@dataclass(frozen=True)
class ImageConditioning:
    """Reference image plus relative camera pose (image-to-3D mode)."""

    ref_rgb: np.ndarray  # (H, W, 3) float in [0, 1]
    delta: tuple         # (d_azimuth, d_elevation, d_radius)

    def __post_init__(self):
        object.__setattr__(
            self, "ref_rgb", np.ascontiguousarray(self.ref_rgb, dtype=np.float64)
        )
        object.__setattr__(self, "delta", tuple(float(x) for x in self.delta))
        if self.ref_rgb.ndim != 3 or self.ref_rgb.shape[2] != 3:
            raise InvalidParameterError("ref_rgb must be (H, W, 3)")
        if len(self.delta) != 3:
            raise InvalidParameterError("delta must be (d_az, d_el, d_radius)")


@dataclass(frozen=True)
class TextConditioning:
    """Prompt conditioning (text-to-3D mode); the embedding lives server-side."""

    prompt: str


Conditioning = Union[ImageConditioning, TextConditioning]


@dataclass
class GuidanceRequest:
    kind: str                 # RESIDUAL or REFINE
    image: ImageBuffer
    camera: Camera
    timestep: float           # noise level, fraction in (0, 1]
    conditioning: Conditioning
    # Local-only hint: background the request image was composited over.
    # Not part of the wire protocol; oracles use it to render ground truth
    # consistently, remote servers never see it.
    background: tuple | None = None

    def __post_init__(self):
        if self.kind not in (RESIDUAL, REFINE):
            raise InvalidParameterError(f"kind must be residual or refine, got {self.kind!r}")
        if not (0.0 < self.timestep <= 1.0):
            raise InvalidParameterError(f"timestep must lie in (0, 1], got {self.timestep}")
        if not isinstance(self.conditioning, (ImageConditioning, TextConditioning)):
            raise InvalidParameterError("exactly one conditioning variant must be present")


@dataclass
class GuidanceResponse:
    residual: np.ndarray | None = None   # (H, W, 3) signed, kind=residual
    refined: ImageBuffer | None = None   # kind=refine

    def __post_init__(self):
        if (self.residual is None) == (self.refined is None):
            raise InvalidParameterError(
                "response must carry exactly one of residual / refined"
            )
        if self.residual is not None:
            self.residual = np.ascontiguousarray(self.residual, dtype=np.float64)
            if not np.all(np.isfinite(self.residual)):
                raise InvalidParameterError("residual contains non-finite values")
