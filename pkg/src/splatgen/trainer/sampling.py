"""Random orbit camera sampling for training views."""

from __future__ import annotations

import numpy as np

from ..core.types import Camera
from .config import TrainConfig

__all__ = ["sample_camera", "elevation_bounds"]

WHITE = (1.0, 1.0, 1.0)
BLACK = (0.0, 0.0, 0.0)


def elevation_bounds(config: TrainConfig, reference_elevation: float | None):
    """Sampling range: the configured range united with the reference
    elevation, so a tilted input view is always covered."""
    lo, hi = config.elevation_range
    if reference_elevation is not None:
        lo = min(lo, reference_elevation)
        hi = max(hi, reference_elevation)
    return lo, hi


def sample_camera(
    config: TrainConfig,
    rng: np.random.Generator,
    reference_elevation: float | None = None,
    resolution: int = 512,
):
    """Draw (camera, background); azimuth/elevation uniform, background a
    fair coin between white and black."""
    az = rng.uniform(config.azimuth_range[0], config.azimuth_range[1])
    lo, hi = elevation_bounds(config, reference_elevation)
    el = rng.uniform(lo, hi)
    background = WHITE if rng.random() < 0.5 else BLACK
    camera = Camera(
        azimuth=az,
        elevation=el,
        radius=config.radius,
        fov_y=config.fov_y,
        width=resolution,
        height=resolution,
    )
    return camera, background
