"""Pure-numpy triangle rasterizer (fallback backend), same contract as the
numba kernel: triangles processed in index order, strict z test."""

import numpy as np

NEAR = 0.01


def raster_kernel(px, pz, faces, width, height):
    face_id = np.full((height, width), -1, dtype=np.int64)
    zbuf = np.full((height, width), np.inf)
    bary = np.zeros((height, width, 3))
    for f in range(faces.shape[0]):
        i0, i1, i2 = faces[f]
        z0, z1, z2 = pz[i0], pz[i1], pz[i2]
        if z0 <= NEAR or z1 <= NEAR or z2 <= NEAR:
            continue
        (x0, y0), (x1, y1), (x2, y2) = px[i0], px[i1], px[i2]
        area2 = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if abs(area2) < 1e-14:
            continue
        xa = max(int(np.floor(min(x0, x1, x2))), 0)
        xb = min(int(np.ceil(max(x0, x1, x2))), width - 1)
        ya = max(int(np.floor(min(y0, y1, y2))), 0)
        yb = min(int(np.ceil(max(y0, y1, y2))), height - 1)
        if xb < xa or yb < ya:
            continue
        cx = (np.arange(xa, xb + 1) + 0.5)[None, :]
        cy = (np.arange(ya, yb + 1) + 0.5)[:, None]
        w0 = ((x2 - x1) * (cy - y1) - (y2 - y1) * (cx - x1)) / area2
        w1 = ((x0 - x2) * (cy - y2) - (y0 - y2) * (cx - x2)) / area2
        w2 = 1.0 - w0 - w1
        inside = (w0 >= 0.0) & (w1 >= 0.0) & (w2 >= 0.0)
        if not inside.any():
            continue
        denom = w0 / z0 + w1 / z1 + w2 / z2
        with np.errstate(divide="ignore"):
            z = np.where(denom > 0, 1.0 / denom, np.inf)
        sl = np.s_[ya : yb + 1, xa : xb + 1]
        win = inside & (z < zbuf[sl])
        zbuf[sl] = np.where(win, z, zbuf[sl])
        face_id[sl] = np.where(win, f, face_id[sl])
        patch = bary[sl]  # basic slicing: a writable view
        patch[..., 0] = np.where(win, w0 / z0 / denom, patch[..., 0])
        patch[..., 1] = np.where(win, w1 / z1 / denom, patch[..., 1])
        patch[..., 2] = np.where(win, w2 / z2 / denom, patch[..., 2])
    return face_id, bary, zbuf
