"""Pure-numpy splatting kernels (fallback backend).

Same contract as the numba kernels: front-to-back compositing in depth
order, contributions under 1/255 skipped, per-pixel termination once
transmittance drops below 1e-4. Gaussians are processed one at a time
with vectorized pixel math over their support boxes.
"""

import numpy as np

ALPHA_SKIP = 1.0 / 255.0
ALPHA_CLAMP = 0.999
T_TERMINATE = 1e-4
Q_CAP = 12.0


def _bbox(mx, my, r, width, height):
    x0 = max(int(np.floor(mx - r)), 0)
    x1 = min(int(np.ceil(mx + r)), width - 1)
    y0 = max(int(np.floor(my - r)), 0)
    y1 = min(int(np.ceil(my + r)), height - 1)
    return x0, x1, y0, y1


def _alpha_patch(means2d, conics, opacities, i, box):
    x0, x1, y0, y1 = box
    dx = (np.arange(x0, x1 + 1) + 0.5 - means2d[i, 0])[None, :]
    dy = (np.arange(y0, y1 + 1) + 0.5 - means2d[i, 1])[:, None]
    q = conics[i, 0] * dx * dx + 2.0 * conics[i, 1] * dx * dy + conics[i, 2] * dy * dy
    q = np.maximum(q, 0.0)
    a = np.where(q <= Q_CAP, opacities[i] * np.exp(-0.5 * q), 0.0)
    a = np.where(a < ALPHA_SKIP, 0.0, np.minimum(a, ALPHA_CLAMP))
    return a, dx, dy


def _replay(means2d, conics, opacities, radii, width, height):
    """Forward compositing; yields per-gaussian applied alpha patches."""
    trans = np.ones((height, width), dtype=np.float64)
    patches = []
    for i in range(means2d.shape[0]):
        if radii[i] <= 0.0:
            patches.append(None)
            continue
        box = _bbox(means2d[i, 0], means2d[i, 1], radii[i], width, height)
        if box[1] < box[0] or box[3] < box[2]:
            patches.append(None)
            continue
        a, _, _ = _alpha_patch(means2d, conics, opacities, i, box)
        sl = np.s_[box[2] : box[3] + 1, box[0] : box[1] + 1]
        applied = (a > 0.0) & (trans[sl] >= T_TERMINATE)
        a = np.where(applied, a, 0.0)
        trans[sl] = trans[sl] * (1.0 - a)
        patches.append((box, a))
    return trans, patches


def forward_splat(means2d, conics, colors, opacities, radii, width, height, bg):
    accum = np.zeros((height, width, 3), dtype=np.float64)
    trans = np.ones((height, width), dtype=np.float64)
    n_contrib = np.zeros((height, width), dtype=np.int64)
    for i in range(means2d.shape[0]):
        if radii[i] <= 0.0:
            continue
        box = _bbox(means2d[i, 0], means2d[i, 1], radii[i], width, height)
        if box[1] < box[0] or box[3] < box[2]:
            continue
        a, _, _ = _alpha_patch(means2d, conics, opacities, i, box)
        sl = np.s_[box[2] : box[3] + 1, box[0] : box[1] + 1]
        t_patch = trans[sl]
        applied = (a > 0.0) & (t_patch >= T_TERMINATE)
        if not applied.any():
            continue
        a = np.where(applied, a, 0.0)
        w = a * t_patch
        accum[sl] += w[:, :, None] * colors[i]
        trans[sl] = t_patch * (1.0 - a)
        n_contrib[sl] = np.where(applied, i + 1, n_contrib[sl])
    rgb = accum + trans[:, :, None] * np.asarray(bg)
    alpha = 1.0 - trans
    return rgb, alpha, n_contrib


def backward_splat(
    means2d, conics, colors, opacities, radii, width, height, bg, g_rgb, g_alpha
):
    n = means2d.shape[0]
    bg = np.asarray(bg)
    t_fin, patches = _replay(means2d, conics, opacities, radii, width, height)

    grads = np.zeros((n, 9), dtype=np.float64)
    suffix = np.zeros((height, width, 3), dtype=np.float64)
    t_after = t_fin.copy()
    g_dot_bg_tfin = (g_rgb * bg).sum(axis=2) * t_fin
    ga_tfin = g_alpha * t_fin
    for i in range(n - 1, -1, -1):
        if patches[i] is None:
            continue
        box, a = patches[i]
        applied = a > 0.0
        if not applied.any():
            continue
        sl = np.s_[box[2] : box[3] + 1, box[0] : box[1] + 1]
        one_m = np.where(applied, 1.0 - a, 1.0)
        t_before = t_after[sl] / one_m
        w = a * t_before
        g_rgb_p = g_rgb[sl]
        grads[i, 6:9] = np.sum(w[:, :, None] * g_rgb_p, axis=(0, 1))
        d_alpha = (
            np.sum(
                g_rgb_p
                * (t_before[:, :, None] * colors[i] - suffix[sl] / one_m[:, :, None]),
                axis=2,
            )
            - (g_dot_bg_tfin[sl] - ga_tfin[sl]) / one_m
        )
        d_alpha = np.where(applied, d_alpha, 0.0)
        suffix[sl] += w[:, :, None] * colors[i]
        t_after[sl] = np.where(applied, t_before, t_after[sl])

        unclamped = applied & (a < ALPHA_CLAMP)
        gauss = np.where(unclamped, a / opacities[i], 0.0)
        grads[i, 5] = np.sum(d_alpha * gauss)
        d_q = np.where(unclamped, -0.5 * a * d_alpha, 0.0)
        dx = (np.arange(box[0], box[1] + 1) + 0.5 - means2d[i, 0])[None, :]
        dy = (np.arange(box[2], box[3] + 1) + 0.5 - means2d[i, 1])[:, None]
        grads[i, 2] = np.sum(d_q * dx * dx)
        grads[i, 3] = np.sum(d_q * 2.0 * dx * dy)
        grads[i, 4] = np.sum(d_q * dy * dy)
        grads[i, 0] = np.sum(-d_q * 2.0 * (conics[i, 0] * dx + conics[i, 1] * dy))
        grads[i, 1] = np.sum(-d_q * 2.0 * (conics[i, 1] * dx + conics[i, 2] * dy))
    return grads
