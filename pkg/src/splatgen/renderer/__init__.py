from .projection import Projected, ProjectedGaussian, project, project_backward
from .rasterize import GradientBundle, render, render_backward

__all__ = [
    "Projected",
    "ProjectedGaussian",
    "project",
    "project_backward",
    "GradientBundle",
    "render",
    "render_backward",
]
