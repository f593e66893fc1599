"""Numba triangle rasterizer: z-buffered, perspective-correct barycentrics."""

import numpy as np
from numba import njit

NEAR = 0.01


@njit(cache=True)
def raster_kernel(px, pz, faces, width, height):
    face_id = np.full((height, width), -1, dtype=np.int64)
    zbuf = np.full((height, width), np.inf)
    bary = np.zeros((height, width, 3))
    for f in range(faces.shape[0]):
        i0 = faces[f, 0]
        i1 = faces[f, 1]
        i2 = faces[f, 2]
        z0 = pz[i0]
        z1 = pz[i1]
        z2 = pz[i2]
        if z0 <= NEAR or z1 <= NEAR or z2 <= NEAR:
            continue
        x0 = px[i0, 0]; y0 = px[i0, 1]
        x1 = px[i1, 0]; y1 = px[i1, 1]
        x2 = px[i2, 0]; y2 = px[i2, 1]
        area2 = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if abs(area2) < 1e-14:
            continue
        xa = max(int(np.floor(min(x0, min(x1, x2)))), 0)
        xb = min(int(np.ceil(max(x0, max(x1, x2)))), width - 1)
        ya = max(int(np.floor(min(y0, min(y1, y2)))), 0)
        yb = min(int(np.ceil(max(y0, max(y1, y2)))), height - 1)
        if xb < xa or yb < ya:
            continue
        iz0 = 1.0 / z0
        iz1 = 1.0 / z1
        iz2 = 1.0 / z2
        for py in range(ya, yb + 1):
            cy = py + 0.5
            for pxx in range(xa, xb + 1):
                cx = pxx + 0.5
                w0 = ((x2 - x1) * (cy - y1) - (y2 - y1) * (cx - x1)) / area2
                w1 = ((x0 - x2) * (cy - y2) - (y0 - y2) * (cx - x2)) / area2
                w2 = 1.0 - w0 - w1
                if w0 < 0.0 or w1 < 0.0 or w2 < 0.0:
                    continue
                denom = w0 * iz0 + w1 * iz1 + w2 * iz2
                z = 1.0 / denom
                if z < zbuf[py, pxx]:
                    zbuf[py, pxx] = z
                    face_id[py, pxx] = f
                    bary[py, pxx, 0] = w0 * iz0 / denom
                    bary[py, pxx, 1] = w1 * iz1 / denom
                    bary[py, pxx, 2] = w2 * iz2 / denom
    return face_id, bary, zbuf
