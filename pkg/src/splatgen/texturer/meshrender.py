"""Textured mesh rendering: nearest-triangle rasterization, barycentric UV
interpolation, bilinear texture sampling, and the texture-gradient
scatter for the refinement stage. Unlit (ambient) shading."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import import_module

import numpy as np

from ..backend import active_backend
from ..core.types import Camera, ImageBuffer, TextureImage, TriangleMesh
from ..errors import InvalidParameterError
from .atlas import UVAtlas

__all__ = ["RasterResult", "rasterize_mesh", "render_mesh", "texture_gradient"]

_IMPLS = {}


def _kernels():
    name = active_backend()
    mod = _IMPLS.get(name)
    if mod is None:
        mod = import_module(f"splatgen.texturer._raster_{name}")
        _IMPLS[name] = mod
    return mod


@dataclass
class RasterResult:
    face_id: np.ndarray  # (H, W) int64, -1 where empty
    bary: np.ndarray     # (H, W, 3) perspective-correct barycentrics
    depth: np.ndarray    # (H, W) camera-space z (inf where empty)

    @property
    def covered(self) -> np.ndarray:
        return self.face_id >= 0


def rasterize_mesh(mesh: TriangleMesh, camera: Camera) -> RasterResult:
    cam_pts = mesh.vertices @ camera.rotation.T - (
        camera.rotation @ camera.position
    )
    f = camera.focal
    cx, cy = camera.principal_point
    z = cam_pts[:, 2]
    safe_z = np.where(z > 0, z, 1.0)
    px = np.stack(
        [f * cam_pts[:, 0] / safe_z + cx, f * cam_pts[:, 1] / safe_z + cy], axis=1
    )
    face_id, bary, zbuf = _kernels().raster_kernel(
        np.ascontiguousarray(px), np.ascontiguousarray(z),
        np.ascontiguousarray(mesh.faces), camera.width, camera.height,
    )
    return RasterResult(face_id=face_id, bary=bary, depth=zbuf)


def _pixel_uvs(raster: RasterResult, atlas: UVAtlas):
    mask = raster.covered
    fid = raster.face_id[mask]
    b = raster.bary[mask]
    uv = np.einsum("pk,pkc->pc", b, atlas.uvs[fid])
    return mask, uv


def _bilinear_taps(uv: np.ndarray, resolution: int):
    """Texel taps and weights for bilinear sampling at uv in [0,1]^2."""
    tx = np.clip(uv[:, 0] * resolution - 0.5, 0.0, resolution - 1.0)
    ty = np.clip(uv[:, 1] * resolution - 0.5, 0.0, resolution - 1.0)
    x0 = np.floor(tx).astype(np.int64)
    y0 = np.floor(ty).astype(np.int64)
    x1 = np.minimum(x0 + 1, resolution - 1)
    y1 = np.minimum(y0 + 1, resolution - 1)
    fx = tx - x0
    fy = ty - y0
    taps = (
        (y0, x0, (1 - fx) * (1 - fy)),
        (y0, x1, fx * (1 - fy)),
        (y1, x0, (1 - fx) * fy),
        (y1, x1, fx * fy),
    )
    return taps


def render_mesh(
    mesh: TriangleMesh,
    atlas: UVAtlas,
    texture: TextureImage,
    camera: Camera,
    background=(1.0, 1.0, 1.0),
    raster: RasterResult | None = None,
) -> ImageBuffer:
    """Render the textured mesh over a solid background; alpha is the
    coverage mask (0 or 1 per pixel)."""
    bg = np.asarray(background, dtype=np.float64).reshape(3)
    if atlas.uvs.shape[0] != mesh.n_faces:
        raise InvalidParameterError("atlas does not match the mesh face count")
    if raster is None:
        raster = rasterize_mesh(mesh, camera)
    h, w = raster.face_id.shape
    rgb = np.broadcast_to(bg, (h, w, 3)).copy()
    mask, uv = _pixel_uvs(raster, atlas)
    if uv.shape[0]:
        color = np.zeros((uv.shape[0], 3))
        for (ty, tx, wt) in _bilinear_taps(uv, texture.resolution):
            color += wt[:, None] * texture.rgb[ty, tx]
        rgb[mask] = color
    alpha = raster.covered.astype(np.float64)
    return ImageBuffer(rgb=np.clip(rgb, 0.0, 1.0), alpha=alpha)


def texture_gradient(
    mesh: TriangleMesh,
    atlas: UVAtlas,
    texture: TextureImage,
    camera: Camera,
    g_rgb: np.ndarray,
    raster: RasterResult | None = None,
):
    """Scatter dL/dpixel into the four bilinear texel taps.

    Returns (grad (R, R, 3), touched (R, R) bool).
    """
    if raster is None:
        raster = rasterize_mesh(mesh, camera)
    if g_rgb.shape != raster.face_id.shape + (3,):
        raise InvalidParameterError("texture_gradient: upstream shape mismatch")
    grad = np.zeros_like(texture.rgb)
    touched = np.zeros(texture.rgb.shape[:2], dtype=bool)
    mask, uv = _pixel_uvs(raster, atlas)
    if uv.shape[0] == 0:
        return grad, touched
    g = g_rgb[mask]
    for (ty, tx, wt) in _bilinear_taps(uv, texture.resolution):
        np.add.at(grad, (ty, tx), wt[:, None] * g)
        touched[ty, tx] = True
    return grad, touched
