"""Numba splatting kernels: tiled forward, slab-parallel backward.

Arrays arrive depth-sorted. The forward pass bins Gaussians into 16x16
pixel tiles and composites front to back per pixel; the backward pass
replays each pixel's contribution list and walks it in reverse.
Gradient accumulation goes into per-slab buffers merged in slab order,
so results do not depend on thread count or schedule.
"""

import numpy as np
from numba import njit, prange

TILE = 16
ALPHA_SKIP = 1.0 / 255.0
ALPHA_CLAMP = 0.999
T_TERMINATE = 1e-4
Q_CAP = 12.0  # exp(-6) * 1.0 < 1/255: cheap skip before calling exp


@njit(cache=True, inline="always")
def _tile_range(mx, my, r, width, height, tiles_x, tiles_y):
    x0 = int(np.floor(mx - r))
    x1 = int(np.ceil(mx + r))
    y0 = int(np.floor(my - r))
    y1 = int(np.ceil(my + r))
    if x1 < 0 or y1 < 0 or x0 >= width or y0 >= height or r <= 0.0:
        return 0, -1, 0, -1
    tx0 = max(x0, 0) // TILE
    ty0 = max(y0, 0) // TILE
    tx1 = min(x1, width - 1) // TILE
    ty1 = min(y1, height - 1) // TILE
    if tx1 >= tiles_x:
        tx1 = tiles_x - 1
    if ty1 >= tiles_y:
        ty1 = tiles_y - 1
    return tx0, tx1, ty0, ty1


@njit(cache=True)
def _bin_tiles(means2d, radii, width, height):
    """Per-tile gaussian index lists (depth order preserved within tiles)."""
    n = means2d.shape[0]
    tiles_x = (width + TILE - 1) // TILE
    tiles_y = (height + TILE - 1) // TILE
    n_tiles = tiles_x * tiles_y
    counts = np.zeros(n_tiles + 1, dtype=np.int64)
    for i in range(n):
        tx0, tx1, ty0, ty1 = _tile_range(
            means2d[i, 0], means2d[i, 1], radii[i], width, height, tiles_x, tiles_y
        )
        for ty in range(ty0, ty1 + 1):
            for tx in range(tx0, tx1 + 1):
                counts[ty * tiles_x + tx + 1] += 1
    offsets = np.cumsum(counts)
    lists = np.empty(offsets[-1], dtype=np.int64)
    cursor = offsets[:-1].copy()
    for i in range(n):
        tx0, tx1, ty0, ty1 = _tile_range(
            means2d[i, 0], means2d[i, 1], radii[i], width, height, tiles_x, tiles_y
        )
        for ty in range(ty0, ty1 + 1):
            for tx in range(tx0, tx1 + 1):
                t = ty * tiles_x + tx
                lists[cursor[t]] = i
                cursor[t] += 1
    return lists, offsets, tiles_x, tiles_y


@njit(cache=True, parallel=True)
def _forward_tiles(
    means2d, conics, colors, opacities, lists, offsets, tiles_x, tiles_y,
    width, height, bg,
):
    rgb = np.empty((height, width, 3), dtype=np.float64)
    alpha = np.empty((height, width), dtype=np.float64)
    n_contrib = np.zeros((height, width), dtype=np.int64)
    for tile in prange(tiles_x * tiles_y):
        ty = tile // tiles_x
        tx = tile % tiles_x
        y_end = min((ty + 1) * TILE, height)
        x_end = min((tx + 1) * TILE, width)
        start = offsets[tile]
        stop = offsets[tile + 1]
        for py in range(ty * TILE, y_end):
            fy = py + 0.5
            for px in range(tx * TILE, x_end):
                fx = px + 0.5
                t_acc = 1.0
                r_acc = 0.0
                g_acc = 0.0
                b_acc = 0.0
                last = 0
                for k in range(start, stop):
                    if t_acc < T_TERMINATE:
                        break
                    i = lists[k]
                    dx = fx - means2d[i, 0]
                    dy = fy - means2d[i, 1]
                    q = (
                        conics[i, 0] * dx * dx
                        + 2.0 * conics[i, 1] * dx * dy
                        + conics[i, 2] * dy * dy
                    )
                    if q > Q_CAP:
                        continue
                    if q < 0.0:
                        q = 0.0
                    a = opacities[i] * np.exp(-0.5 * q)
                    if a < ALPHA_SKIP:
                        continue
                    if a > ALPHA_CLAMP:
                        a = ALPHA_CLAMP
                    w = a * t_acc
                    r_acc += colors[i, 0] * w
                    g_acc += colors[i, 1] * w
                    b_acc += colors[i, 2] * w
                    t_acc *= 1.0 - a
                    last = i + 1
                rgb[py, px, 0] = r_acc + t_acc * bg[0]
                rgb[py, px, 1] = g_acc + t_acc * bg[1]
                rgb[py, px, 2] = b_acc + t_acc * bg[2]
                alpha[py, px] = 1.0 - t_acc
                n_contrib[py, px] = last
    return rgb, alpha, n_contrib


def forward_splat(means2d, conics, colors, opacities, radii, width, height, bg):
    lists, offsets, tiles_x, tiles_y = _bin_tiles(means2d, radii, width, height)
    return _forward_tiles(
        means2d, conics, colors, opacities, lists, offsets, tiles_x, tiles_y,
        width, height, bg,
    )


@njit(cache=True, parallel=True)
def _backward_slabs(
    means2d, conics, colors, opacities, lists, offsets, tiles_x, tiles_y,
    width, height, bg, g_rgb, g_alpha,
):
    n = means2d.shape[0]
    n_slabs = tiles_y
    grads = np.zeros((n_slabs, n, 9), dtype=np.float64)
    # per-slab replay buffers, preallocated outside the parallel loop
    # (worst case: every gaussian contributes at one pixel)
    hit_idx_all = np.empty((n_slabs, n), dtype=np.int64)
    hit_alpha_all = np.empty((n_slabs, n), dtype=np.float64)
    for slab in prange(n_slabs):
        ty = slab
        y_end = min((ty + 1) * TILE, height)
        hit_idx = hit_idx_all[slab]
        hit_alpha = hit_alpha_all[slab]
        for tx in range(tiles_x):
            tile = ty * tiles_x + tx
            start = offsets[tile]
            stop = offsets[tile + 1]
            if stop == start:
                continue
            x_end = min((tx + 1) * TILE, width)
            for py in range(ty * TILE, y_end):
                fy = py + 0.5
                for px in range(tx * TILE, x_end):
                    fx = px + 0.5
                    # forward replay
                    t_acc = 1.0
                    count = 0
                    for k in range(start, stop):
                        if t_acc < T_TERMINATE:
                            break
                        i = lists[k]
                        dx = fx - means2d[i, 0]
                        dy = fy - means2d[i, 1]
                        q = (
                            conics[i, 0] * dx * dx
                            + 2.0 * conics[i, 1] * dx * dy
                            + conics[i, 2] * dy * dy
                        )
                        if q > Q_CAP:
                            continue
                        if q < 0.0:
                            q = 0.0
                        a = opacities[i] * np.exp(-0.5 * q)
                        if a < ALPHA_SKIP:
                            continue
                        if a > ALPHA_CLAMP:
                            a = ALPHA_CLAMP
                        hit_idx[count] = i
                        hit_alpha[count] = a
                        count += 1
                        t_acc *= 1.0 - a
                    if count == 0:
                        continue
                    t_fin = t_acc
                    gr = g_rgb[py, px, 0]
                    gg = g_rgb[py, px, 1]
                    gb = g_rgb[py, px, 2]
                    ga = g_alpha[py, px]
                    s_r = 0.0
                    s_g = 0.0
                    s_b = 0.0
                    t_after = t_fin
                    for k in range(count - 1, -1, -1):
                        i = hit_idx[k]
                        a = hit_alpha[k]
                        one_m = 1.0 - a
                        t_before = t_after / one_m
                        # color gradient
                        w = a * t_before
                        grads[slab, i, 6] += gr * w
                        grads[slab, i, 7] += gg * w
                        grads[slab, i, 8] += gb * w
                        # alpha gradient
                        d_alpha = (
                            gr * (t_before * colors[i, 0] - (s_r + bg[0] * t_fin) / one_m)
                            + gg * (t_before * colors[i, 1] - (s_g + bg[1] * t_fin) / one_m)
                            + gb * (t_before * colors[i, 2] - (s_b + bg[2] * t_fin) / one_m)
                            + ga * t_fin / one_m
                        )
                        s_r += colors[i, 0] * w
                        s_g += colors[i, 1] * w
                        s_b += colors[i, 2] * w
                        t_after = t_before
                        if a >= ALPHA_CLAMP:
                            continue  # clamped: no gradient into opacity/shape
                        gauss = a / opacities[i]  # exp(-q/2)
                        grads[slab, i, 5] += d_alpha * gauss
                        d_q = -0.5 * a * d_alpha
                        dx = fx - means2d[i, 0]
                        dy = fy - means2d[i, 1]
                        grads[slab, i, 2] += d_q * dx * dx
                        grads[slab, i, 3] += d_q * 2.0 * dx * dy
                        grads[slab, i, 4] += d_q * dy * dy
                        grads[slab, i, 0] += -d_q * 2.0 * (conics[i, 0] * dx + conics[i, 1] * dy)
                        grads[slab, i, 1] += -d_q * 2.0 * (conics[i, 1] * dx + conics[i, 2] * dy)
    return grads


def backward_splat(
    means2d, conics, colors, opacities, radii, width, height, bg, g_rgb, g_alpha
):
    lists, offsets, tiles_x, tiles_y = _bin_tiles(means2d, radii, width, height)
    grads = _backward_slabs(
        means2d, conics, colors, opacities, lists, offsets, tiles_x, tiles_y,
        width, height, bg, g_rgb, g_alpha,
    )
    return grads.sum(axis=0)
