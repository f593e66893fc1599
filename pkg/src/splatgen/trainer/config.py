"""Stage-1 training configuration and annealing schedules.

Defaults follow the published recipe: 500 steps, orbit cameras at radius
2.0 (image mode) or 2.5 (text mode) with a 49 degree vertical FOV,
azimuth in [-180, 180] and elevation in [-30, 30], rendering resolution
ramped 64 to 512, loss weights ramped 0 to 1e4 (RGB) and 1e3 (alpha),
densification every 100 steps (image) or 50 (text) with gradient
thresholds 0.5 / 0.01, pruning below opacity 0.01 or above max scale
0.05, and per-group learning rates (center 1e-3 decayed to 2e-5, color
0.01, opacity 0.05, scale and rotation 5e-3). The timestep anneals
linearly from 0.98 to 0.02.

Schedules are indexed by 0-based step i with fraction f = i/(steps-1),
so the ramped quantities hit their endpoint values exactly at the final
step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import InvalidParameterError

__all__ = ["TrainConfig", "IMAGE_MODE", "TEXT_MODE"]

IMAGE_MODE = "image"
TEXT_MODE = "text"


def _snap8(x: float) -> int:
    return max(8, int(round(x / 8.0)) * 8)


@dataclass
class TrainConfig:
    steps: int = 500
    mode: str = IMAGE_MODE
    radius: float = None            # type: ignore[assignment]  # 2.0 image / 2.5 text
    fov_y: float = 49.0
    azimuth_range: tuple = (-180.0, 180.0)
    elevation_range: tuple = (-30.0, 30.0)
    resolution_start: int = 64
    resolution_end: int = 512
    lambda_rgb_max: float = 1.0e4
    lambda_alpha_max: float = 1.0e3
    densify_interval: int = None    # type: ignore[assignment]  # 100 image / 50 text
    densify_grad_threshold: float = None  # type: ignore[assignment]  # 0.5 / 0.01
    densify_max_scale: float = 0.05
    prune_opacity: float = 0.01
    prune_max_scale: float = 0.05
    lr_center_start: float = 1.0e-3
    lr_center_end: float = 2.0e-5
    lr_color: float = 0.01
    lr_opacity: float = 0.05
    lr_scale: float = 5.0e-3
    lr_rotation: float = 5.0e-3
    timestep_start: float = 0.98
    timestep_end: float = 0.02
    sds_weight: float = 1.0         # constant w(t)
    init_count: int = None          # type: ignore[assignment]  # 5000 image / 1000 text
    init_radius: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.mode not in (IMAGE_MODE, TEXT_MODE):
            raise InvalidParameterError(f"mode must be image or text, got {self.mode!r}")
        if self.radius is None:
            self.radius = 2.0 if self.mode == IMAGE_MODE else 2.5
        if self.densify_interval is None:
            self.densify_interval = 100 if self.mode == IMAGE_MODE else 50
        if self.densify_grad_threshold is None:
            self.densify_grad_threshold = 0.5 if self.mode == IMAGE_MODE else 0.01
        if self.init_count is None:
            self.init_count = 5000 if self.mode == IMAGE_MODE else 1000
        if self.steps < 1:
            raise InvalidParameterError("steps must be >= 1")
        if self.azimuth_range[0] >= self.azimuth_range[1]:
            raise InvalidParameterError("azimuth range must be well ordered")
        if self.elevation_range[0] >= self.elevation_range[1]:
            raise InvalidParameterError("elevation range must be well ordered")
        if self.timestep_start <= self.timestep_end:
            raise InvalidParameterError("timestep schedule must decrease")
        if self.resolution_end < self.resolution_start:
            raise InvalidParameterError("resolution schedule must not decrease")
        for name in ("densify_interval", "densify_grad_threshold", "densify_max_scale",
                     "prune_opacity", "prune_max_scale", "lr_color", "lr_opacity",
                     "lr_scale", "lr_rotation", "lr_center_start", "lr_center_end"):
            if getattr(self, name) <= 0:
                raise InvalidParameterError(f"{name} must be positive")

    def fraction(self, step: int) -> float:
        if self.steps == 1:
            return 1.0
        return step / (self.steps - 1)

    def timestep(self, step: int) -> float:
        f = self.fraction(step)
        return self.timestep_start + f * (self.timestep_end - self.timestep_start)

    def lambda_rgb(self, step: int) -> float:
        return self.fraction(step) * self.lambda_rgb_max

    def lambda_alpha(self, step: int) -> float:
        return self.fraction(step) * self.lambda_alpha_max

    def resolution(self, step: int) -> int:
        f = self.fraction(step)
        return _snap8(self.resolution_start + f * (self.resolution_end - self.resolution_start))

    def lr_center(self, step: int) -> float:
        f = self.fraction(step)
        return self.lr_center_start * math.exp(
            f * math.log(self.lr_center_end / self.lr_center_start)
        )
