"""splatgen: generative 3D Gaussian splatting toolkit.

Two-stage pipeline: differentiable splat optimization under a pluggable
guidance signal, then mesh extraction via block-wise density query and
UV-space texture refinement. Runs entirely on CPU; hot kernels use numba
with a pure-numpy fallback (see splatgen.backend).
"""

__version__ = "0.1.0"

from .backend import active_backend, set_backend, use_backend
from .core import (
    Camera,
    Gaussian,
    GaussianCloud,
    ImageBuffer,
    TextureImage,
    TriangleMesh,
    covariance_from,
    init_cloud,
    ply_load,
    ply_save,
)

__all__ = [
    "__version__",
    "active_backend",
    "set_backend",
    "use_backend",
    "Camera",
    "Gaussian",
    "GaussianCloud",
    "ImageBuffer",
    "TextureImage",
    "TriangleMesh",
    "covariance_from",
    "init_cloud",
    "ply_load",
    "ply_save",
]
