"""Box-projection UV unwrapping with shelf packing.

Faces are clustered into six charts by dominant normal axis, each chart
is planar-projected along its axis at a single world-to-texel scale
(preserving relative areas), and chart rectangles are shelf-packed into
the texture square with two-texel gutters. Face UVs are inset one and a
half texels from their rectangle so bilinear taps never leave it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core.types import TriangleMesh
from ..errors import InvalidParameterError

__all__ = ["UVAtlas", "unwrap", "DEFAULT_TEXTURE_RES", "GUTTER_TEXELS"]

DEFAULT_TEXTURE_RES = 1024
GUTTER_TEXELS = 2.0
INSET_TEXELS = 1.5

# chart axis table: (axis, sign); charts 0..5 = +x -x +y -y +z -z
CHART_AXES = [(0, 1.0), (0, -1.0), (1, 1.0), (1, -1.0), (2, 1.0), (2, -1.0)]


@dataclass
class UVAtlas:
    uvs: np.ndarray          # (M, 3, 2) float64 in [0, 1]
    face_chart: np.ndarray   # (M,) int64, chart id per face
    chart_rects: list        # (x0, y0, w, h) texel rects, one per used chart
    chart_ids: list          # chart id per rect entry
    resolution: int

    def chart_mask(self) -> np.ndarray:
        """Boolean texel mask covered by any chart rectangle."""
        mask = np.zeros((self.resolution, self.resolution), dtype=bool)
        for (x0, y0, w, h) in self.chart_rects:
            xa, ya = int(np.floor(x0)), int(np.floor(y0))
            xb = int(np.ceil(x0 + w))
            yb = int(np.ceil(y0 + h))
            mask[ya:yb, xa:xb] = True
        return mask


def _dominant_chart(mesh: TriangleMesh) -> np.ndarray:
    n = mesh.face_normals()
    axis = np.argmax(np.abs(n), axis=1)
    sign = np.take_along_axis(n, axis[:, None], axis=1)[:, 0] >= 0.0
    return axis * 2 + (~sign).astype(np.int64)  # +axis -> even, -axis -> odd


def _project(points: np.ndarray, chart: int) -> np.ndarray:
    axis, sign = CHART_AXES[chart]
    u_axis = (axis + 1) % 3
    v_axis = (axis + 2) % 3
    u = points[..., u_axis] * sign  # flip u for negative charts: keeps area sign
    v = points[..., v_axis]
    return np.stack([u, v], axis=-1)


def _shelf_pack(sizes, resolution, gutter):
    """Pack (w, h) content rects; returns origins or None if they do not fit.

    Shelves run left to right, tallest charts first (caller pre-sorts).
    """
    x = gutter
    y = gutter
    shelf_h = 0.0
    origins = []
    for w, h in sizes:
        if x + w + gutter > resolution:
            y += shelf_h + gutter
            x = gutter
            shelf_h = 0.0
        if y + h + gutter > resolution or x + w + gutter > resolution:
            return None
        origins.append((x, y))
        x += w + gutter
        shelf_h = max(shelf_h, h)
    return origins


def unwrap(mesh: TriangleMesh, resolution: int = DEFAULT_TEXTURE_RES) -> UVAtlas:
    """Build the UV atlas for a post-processed mesh."""
    if mesh.is_empty():
        raise InvalidParameterError("unwrap: mesh is empty")
    face_chart = _dominant_chart(mesh)
    corners = mesh.vertices[mesh.faces]  # (M, 3, 3)

    charts = []
    for chart in range(6):
        sel = np.nonzero(face_chart == chart)[0]
        if sel.size == 0:
            continue
        proj = _project(corners[sel], chart)  # (m, 3, 2)
        lo = proj.reshape(-1, 2).min(axis=0)
        hi = proj.reshape(-1, 2).max(axis=0)
        extent = np.maximum(hi - lo, 1e-9)
        charts.append({"id": chart, "faces": sel, "proj": proj - lo, "extent": extent})

    # tallest-first ordering stabilizes shelf packing
    order = sorted(range(len(charts)), key=lambda i: -charts[i]["extent"][1])

    def fits(scale):
        sizes = [charts[i]["extent"] * scale for i in order]
        return _shelf_pack(sizes, resolution, GUTTER_TEXELS) is not None

    lo_s, hi_s = 1e-6, None
    scale = 1.0
    while fits(scale):
        lo_s = scale
        scale *= 2.0
        if scale > 1e9:
            break
    hi_s = scale
    for _ in range(48):
        mid = 0.5 * (lo_s + hi_s)
        if fits(mid):
            lo_s = mid
        else:
            hi_s = mid
    scale = lo_s

    sizes = [charts[i]["extent"] * scale for i in order]
    origins = _shelf_pack(sizes, resolution, GUTTER_TEXELS)
    uvs = np.zeros((mesh.n_faces, 3, 2))
    rects = []
    ids = []
    for (i, origin, size) in zip(order, origins, sizes):
        ch = charts[i]
        w, h = size
        x0, y0 = origin
        rects.append((x0, y0, w, h))
        ids.append(ch["id"])
        # map content into the rect inset by INSET_TEXELS
        inner_w = max(w - 2 * INSET_TEXELS, 1e-6)
        inner_h = max(h - 2 * INSET_TEXELS, 1e-6)
        frac = ch["proj"] / ch["extent"]  # [0,1] within the chart
        tex_x = x0 + INSET_TEXELS + frac[..., 0] * inner_w
        tex_y = y0 + INSET_TEXELS + frac[..., 1] * inner_h
        uvs[ch["faces"], :, 0] = tex_x / resolution
        uvs[ch["faces"], :, 1] = tex_y / resolution
    return UVAtlas(
        uvs=uvs, face_chart=face_chart, chart_rects=rects, chart_ids=ids,
        resolution=resolution,
    )
