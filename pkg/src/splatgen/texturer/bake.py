"""Color back-projection: bake orbit-view renders of the Gaussian cloud
into the mesh texture.

Views: 8 azimuths at 45 degree spacing times elevations (-45, 0, +45),
plus top and bottom (26 total). Pixels whose camera-facing normal
component falls below 0.1 are excluded (unstable grazing projections);
the rest splat into their texel with the facing component as weight.
Untouched texels are filled by nearest-valid dilation, then mid-grey.
"""

from __future__ import annotations

import numpy as np

from ..core.types import Camera, GaussianCloud, TextureImage, TriangleMesh
from ..renderer import render
from .atlas import UVAtlas
from .meshrender import _pixel_uvs, rasterize_mesh

__all__ = ["bake_views", "backproject", "NORMAL_CUTOFF"]

NORMAL_CUTOFF = 0.1
DILATE_ROUNDS = 8
FILL_COLOR = (0.5, 0.5, 0.5)
BAKE_ELEVATIONS = (-45.0, 0.0, 45.0)
BAKE_AZIMUTHS = tuple(float(a) for a in range(0, 360, 45))


def bake_views(radius: float = 2.0, fov_y: float = 49.0, resolution: int = 512):
    """The 26 bake cameras: the 8x3 orbit grid plus the two poles."""
    cams = [
        Camera(azimuth=az, elevation=el, radius=radius, fov_y=fov_y,
               width=resolution, height=resolution)
        for el in BAKE_ELEVATIONS
        for az in BAKE_AZIMUTHS
    ]
    cams.append(Camera(azimuth=0.0, elevation=90.0, radius=radius, fov_y=fov_y,
                       width=resolution, height=resolution))
    cams.append(Camera(azimuth=0.0, elevation=-90.0, radius=radius, fov_y=fov_y,
                       width=resolution, height=resolution))
    return cams


def _facing(mesh: TriangleMesh, camera: Camera, face_id: np.ndarray) -> np.ndarray:
    """Per-pixel camera-facing cosine: minus the camera-space z component of
    the face normal (camera looks along +z)."""
    fn = mesh.face_normals()
    norms = np.linalg.norm(fn, axis=1, keepdims=True)
    fn = np.divide(fn, norms, out=np.zeros_like(fn), where=norms > 0)
    n_cam_z = fn @ camera.rotation[2]
    out = np.zeros(face_id.shape)
    covered = face_id >= 0
    out[covered] = -n_cam_z[face_id[covered]]
    return out


def backproject(
    mesh: TriangleMesh,
    atlas: UVAtlas,
    cloud: GaussianCloud,
    radius: float = 2.0,
    fov_y: float = 49.0,
    view_resolution: int = 512,
    background=(1.0, 1.0, 1.0),
) -> TextureImage:
    """Bake cloud renders from the 26 views into a texture image."""
    res = atlas.resolution
    bg = np.asarray(background, dtype=np.float64).reshape(3)
    acc = np.zeros((res, res, 3))
    weight = np.zeros((res, res))
    for camera in bake_views(radius, fov_y, view_resolution):
        img = render(cloud, camera, background)
        raster = rasterize_mesh(mesh, camera)
        facing = _facing(mesh, camera, raster.face_id)
        ok = raster.covered & (facing >= NORMAL_CUTOFF)
        if not ok.any():
            continue
        mask, uv = _pixel_uvs(raster, atlas)
        keep = facing[mask] >= NORMAL_CUTOFF
        uv = uv[keep]
        # bake the un-composited foreground color: weighting by
        # facing * alpha and accumulating facing * (rgb - bg*(1-alpha))
        # averages the true surface color without background bleed
        # and without dividing by small alphas
        premult = img.rgb[mask][keep] - bg * (1.0 - img.alpha[mask][keep, None])
        alpha = img.alpha[mask][keep]
        f = facing[mask][keep]
        tx = np.clip((uv[:, 0] * res).astype(np.int64), 0, res - 1)
        ty = np.clip((uv[:, 1] * res).astype(np.int64), 0, res - 1)
        np.add.at(acc, (ty, tx), f[:, None] * premult)
        np.add.at(weight, (ty, tx), f * alpha)

    valid = weight > 1e-6
    rgb = np.broadcast_to(np.asarray(FILL_COLOR), (res, res, 3)).copy()
    rgb[valid] = acc[valid] / weight[valid, None]
    rgb = _dilate(rgb, valid, DILATE_ROUNDS)
    return TextureImage(rgb=np.clip(rgb, 0.0, 1.0), valid=valid)


def _dilate(rgb: np.ndarray, valid: np.ndarray, rounds: int) -> np.ndarray:
    """Spread valid colors into neighboring invalid texels (4-neighborhood
    average), a bounded nearest-valid fill for gutters and small holes."""
    rgb = rgb.copy()
    known = valid.copy()
    for _ in range(rounds):
        if known.all():
            break
        acc = np.zeros_like(rgb)
        cnt = np.zeros(known.shape)
        for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            shifted = np.roll(known, (dy, dx), axis=(0, 1))
            src = np.roll(rgb, (dy, dx), axis=(0, 1))
            if dy == 1:
                shifted[0, :] = False
            elif dy == -1:
                shifted[-1, :] = False
            if dx == 1:
                shifted[:, 0] = False
            elif dx == -1:
                shifted[:, -1] = False
            acc += np.where(shifted[:, :, None], src, 0.0)
            cnt += shifted
        grow = (~known) & (cnt > 0)
        rgb[grow] = acc[grow] / cnt[grow, None]
        known |= grow
    return rgb
