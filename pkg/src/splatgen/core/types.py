"""Domain value types: Gaussians, cameras, images, meshes, textures.

All types are plain dataclasses over numpy arrays. They are treated as
immutable after construction; optimization code builds new instances
instead of mutating shared ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import InvalidParameterError

__all__ = [
    "Gaussian",
    "GaussianCloud",
    "Camera",
    "ImageBuffer",
    "TriangleMesh",
    "TextureImage",
]


@dataclass(frozen=True)
class Gaussian:
    """A single anisotropic 3D Gaussian primitive.

    scale holds per-axis standard deviations in world units, rotation is a
    scalar-first unit quaternion (w, x, y, z).
    """

    center: np.ndarray
    scale: np.ndarray
    rotation: np.ndarray
    opacity: float
    color: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))
        object.__setattr__(self, "scale", np.asarray(self.scale, dtype=np.float64))
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64))
        object.__setattr__(self, "color", np.asarray(self.color, dtype=np.float64))


@dataclass
class GaussianCloud:
    """Struct-of-arrays collection of Gaussians plus densification statistics.

    grad_accum holds the summed view-space positional gradient norms since
    the last densify/prune event; grad_count the number of backward passes
    in which each Gaussian was visible. Both reset to zero on every event.
    """

    centers: np.ndarray    # (N, 3) float64
    scales: np.ndarray     # (N, 3) float64, positive stddevs
    rotations: np.ndarray  # (N, 4) float64, scalar-first unit quaternions
    opacities: np.ndarray  # (N,)  float64 in [0, 1]
    colors: np.ndarray     # (N, 3) float64 in [0, 1]
    grad_accum: np.ndarray = field(default=None)  # type: ignore[assignment]
    grad_count: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.centers = np.ascontiguousarray(self.centers, dtype=np.float64)
        self.scales = np.ascontiguousarray(self.scales, dtype=np.float64)
        self.rotations = np.ascontiguousarray(self.rotations, dtype=np.float64)
        self.opacities = np.ascontiguousarray(self.opacities, dtype=np.float64)
        self.colors = np.ascontiguousarray(self.colors, dtype=np.float64)
        n = self.centers.shape[0]
        for name, arr, shape in (
            ("centers", self.centers, (n, 3)),
            ("scales", self.scales, (n, 3)),
            ("rotations", self.rotations, (n, 4)),
            ("opacities", self.opacities, (n,)),
            ("colors", self.colors, (n, 3)),
        ):
            if arr.shape != shape:
                raise InvalidParameterError(
                    f"GaussianCloud.{name}: expected shape {shape}, got {arr.shape}"
                )
        if self.grad_accum is None:
            self.grad_accum = np.zeros(n, dtype=np.float64)
        if self.grad_count is None:
            self.grad_count = np.zeros(n, dtype=np.int64)

    def __len__(self) -> int:
        return self.centers.shape[0]

    def __getitem__(self, i: int) -> Gaussian:
        return Gaussian(
            center=self.centers[i],
            scale=self.scales[i],
            rotation=self.rotations[i],
            opacity=float(self.opacities[i]),
            color=self.colors[i],
        )

    def copy(self) -> "GaussianCloud":
        return GaussianCloud(
            self.centers.copy(),
            self.scales.copy(),
            self.rotations.copy(),
            self.opacities.copy(),
            self.colors.copy(),
            self.grad_accum.copy(),
            self.grad_count.copy(),
        )

    def reset_stats(self) -> None:
        self.grad_accum = np.zeros(len(self), dtype=np.float64)
        self.grad_count = np.zeros(len(self), dtype=np.int64)


_WORLD_UP = np.array([0.0, 0.0, 1.0])
_FALLBACK_UP = np.array([0.0, 1.0, 0.0])


@dataclass(frozen=True)
class Camera:
    """Orbit pinhole camera looking at ``target``.

    The camera sits at spherical coordinates (azimuth, elevation, radius)
    around the target with +z as world up. Camera space follows the OpenCV
    convention: x right, y down, z forward; pixel (row, col) samples at
    (col + 0.5, row + 0.5).
    """

    azimuth: float
    elevation: float
    radius: float
    fov_y: float = 49.0
    width: int = 512
    height: int = 512
    target: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "target", np.asarray(self.target, dtype=np.float64))
        if not (0.0 < self.fov_y < 180.0):
            raise InvalidParameterError(f"fov_y must lie in (0, 180), got {self.fov_y}")
        if self.radius <= 0.0:
            raise InvalidParameterError(f"radius must be positive, got {self.radius}")
        if self.width < 8 or self.height < 8:
            raise InvalidParameterError(
                f"image size must be at least 8x8, got {self.width}x{self.height}"
            )

    @property
    def position(self) -> np.ndarray:
        az = math.radians(self.azimuth)
        el = math.radians(self.elevation)
        offset = np.array(
            [
                math.cos(el) * math.sin(az),
                -math.cos(el) * math.cos(az),
                math.sin(el),
            ]
        )
        return self.target + self.radius * offset

    @property
    def rotation(self) -> np.ndarray:
        """World-to-camera rotation, rows = (right, down, forward)."""
        pos = self.position
        forward = self.target - pos
        forward = forward / np.linalg.norm(forward)
        up = _WORLD_UP if abs(forward @ _WORLD_UP) < 0.999 else _FALLBACK_UP
        right = np.cross(forward, up)
        right = right / np.linalg.norm(right)
        down = np.cross(forward, right)
        return np.stack([right, down, forward])

    @property
    def focal(self) -> float:
        """Focal length in pixels (identical for x and y, square pixels)."""
        return 0.5 * self.height / math.tan(0.5 * math.radians(self.fov_y))

    @property
    def principal_point(self) -> tuple[float, float]:
        return 0.5 * self.width, 0.5 * self.height

    def world_to_camera(self, points: np.ndarray) -> np.ndarray:
        return (np.atleast_2d(points) - self.position) @ self.rotation.T

    def at_resolution(self, width: int, height: int) -> "Camera":
        return replace(self, width=int(width), height=int(height))

    def delta_to(self, other: "Camera") -> tuple[float, float, float]:
        """Relative pose (azimuth, elevation, radius) from self to other."""
        return (
            other.azimuth - self.azimuth,
            other.elevation - self.elevation,
            other.radius - self.radius,
        )


@dataclass
class ImageBuffer:
    """H x W float image with RGB and alpha planes, values in [0, 1]."""

    rgb: np.ndarray    # (H, W, 3) float64
    alpha: np.ndarray  # (H, W) float64

    def __post_init__(self):
        self.rgb = np.ascontiguousarray(self.rgb, dtype=np.float64)
        self.alpha = np.ascontiguousarray(self.alpha, dtype=np.float64)
        if self.rgb.ndim != 3 or self.rgb.shape[2] != 3:
            raise InvalidParameterError(f"rgb must be (H, W, 3), got {self.rgb.shape}")
        if self.alpha.shape != self.rgb.shape[:2]:
            raise InvalidParameterError(
                f"alpha shape {self.alpha.shape} does not match rgb {self.rgb.shape[:2]}"
            )

    @property
    def height(self) -> int:
        return self.rgb.shape[0]

    @property
    def width(self) -> int:
        return self.rgb.shape[1]

    @classmethod
    def blank(cls, width: int, height: int, color=(0.0, 0.0, 0.0)) -> "ImageBuffer":
        rgb = np.broadcast_to(np.asarray(color, dtype=np.float64), (height, width, 3)).copy()
        return cls(rgb=rgb, alpha=np.zeros((height, width)))

    def clamped(self) -> "ImageBuffer":
        return ImageBuffer(np.clip(self.rgb, 0.0, 1.0), np.clip(self.alpha, 0.0, 1.0))

    def to_rgba8(self) -> np.ndarray:
        rgba = np.concatenate([self.rgb, self.alpha[..., None]], axis=2)
        return (np.clip(rgba, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)

    def save_png(self, path) -> None:
        """Write an 8-bit RGBA PNG (alpha plane becomes the A channel)."""
        from PIL import Image

        Image.fromarray(self.to_rgba8(), mode="RGBA").save(path)

    @classmethod
    def load_png(cls, path) -> "ImageBuffer":
        from PIL import Image

        arr = np.asarray(Image.open(path).convert("RGBA"), dtype=np.float64) / 255.0
        return cls(rgb=arr[..., :3], alpha=arr[..., 3])


@dataclass
class TriangleMesh:
    """Indexed triangle mesh with optional per-vertex normals and per-corner UVs."""

    vertices: np.ndarray        # (N, 3) float64
    faces: np.ndarray           # (M, 3) int64
    normals: np.ndarray = None  # (N, 3) float64, unit  # type: ignore[assignment]
    uvs: np.ndarray = None      # (M, 3, 2) float64 in [0, 1]  # type: ignore[assignment]

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.ascontiguousarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if self.normals is not None:
            self.normals = np.ascontiguousarray(self.normals, dtype=np.float64)
        if self.uvs is not None:
            self.uvs = np.ascontiguousarray(self.uvs, dtype=np.float64)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_faces(self) -> int:
        return self.faces.shape[0]

    def is_empty(self) -> bool:
        return self.n_faces == 0

    def face_normals(self) -> np.ndarray:
        v = self.vertices
        f = self.faces
        n = np.cross(v[f[:, 1]] - v[f[:, 0]], v[f[:, 2]] - v[f[:, 0]])
        return n  # length = 2 * face area, direction by winding

    def face_areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self.face_normals(), axis=1)

    def compute_vertex_normals(self) -> np.ndarray:
        """Area-weighted vertex normals from face windings."""
        fn = self.face_normals()  # already area-weighted
        acc = np.zeros_like(self.vertices)
        for k in range(3):
            np.add.at(acc, self.faces[:, k], fn)
        norms = np.linalg.norm(acc, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        return acc / norms

    def with_vertex_normals(self) -> "TriangleMesh":
        return TriangleMesh(self.vertices, self.faces, self.compute_vertex_normals(), self.uvs)

    def edge_counts(self) -> dict:
        """Undirected edge -> number of incident faces."""
        counts: dict = {}
        for a, b, c in self.faces:
            for e in ((a, b), (b, c), (c, a)):
                key = (int(min(e)), int(max(e)))
                counts[key] = counts.get(key, 0) + 1
        return counts

    def euler_characteristic(self) -> int:
        used = np.unique(self.faces)
        return int(used.size - len(self.edge_counts()) + self.n_faces)


@dataclass
class TextureImage:
    """Square RGB texture with a validity mask for baked texels."""

    rgb: np.ndarray    # (R, R, 3) float64 in [0, 1]
    valid: np.ndarray  # (R, R) bool

    def __post_init__(self):
        self.rgb = np.ascontiguousarray(self.rgb, dtype=np.float64)
        self.valid = np.ascontiguousarray(self.valid, dtype=bool)
        if self.rgb.shape[0] != self.rgb.shape[1]:
            raise InvalidParameterError(f"texture must be square, got {self.rgb.shape}")
        if self.valid.shape != self.rgb.shape[:2]:
            raise InvalidParameterError("valid mask shape does not match rgb")

    @property
    def resolution(self) -> int:
        return self.rgb.shape[0]

    @classmethod
    def filled(cls, resolution: int, color=(0.5, 0.5, 0.5)) -> "TextureImage":
        rgb = np.broadcast_to(
            np.asarray(color, dtype=np.float64), (resolution, resolution, 3)
        ).copy()
        return cls(rgb=rgb, valid=np.zeros((resolution, resolution), dtype=bool))

    def copy(self) -> "TextureImage":
        return TextureImage(self.rgb.copy(), self.valid.copy())
