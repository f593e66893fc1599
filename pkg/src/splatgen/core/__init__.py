from .types import (
    Camera,
    Gaussian,
    GaussianCloud,
    ImageBuffer,
    TextureImage,
    TriangleMesh,
)
from .gaussians import (
    covariance_from,
    init_cloud,
    normalize_quaternion,
    quat_to_rotmat,
)
from .ply import ply_dumps, ply_load, ply_loads, ply_read, ply_save, ply_write

__all__ = [
    "Camera",
    "Gaussian",
    "GaussianCloud",
    "ImageBuffer",
    "TextureImage",
    "TriangleMesh",
    "covariance_from",
    "init_cloud",
    "normalize_quaternion",
    "quat_to_rotmat",
    "ply_dumps",
    "ply_load",
    "ply_loads",
    "ply_read",
    "ply_save",
    "ply_write",
]
