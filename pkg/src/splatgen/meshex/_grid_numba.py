"""Numba block-wise density grid kernel (parallel over blocks)."""

import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True)
def grid_kernel(centers, packed, opacities, lists, offsets,
                n_blocks, sub, origin, spacing, q_max):
    res = n_blocks * sub
    values = np.zeros((res, res, res), dtype=np.float64)
    total = n_blocks * n_blocks * n_blocks
    for b in prange(total):
        bx = b // (n_blocks * n_blocks)
        by = (b // n_blocks) % n_blocks
        bz = b % n_blocks
        start = offsets[b]
        stop = offsets[b + 1]
        if stop == start:
            continue
        for li in range(sub):
            ix = bx * sub + li
            x = origin + (ix + 0.5) * spacing
            for lj in range(sub):
                iy = by * sub + lj
                y = origin + (iy + 0.5) * spacing
                for lk in range(sub):
                    iz = bz * sub + lk
                    z = origin + (iz + 0.5) * spacing
                    acc = 0.0
                    for kk in range(start, stop):
                        g = lists[kk]
                        dx = x - centers[g, 0]
                        dy = y - centers[g, 1]
                        dz = z - centers[g, 2]
                        q = (
                            packed[g, 0] * dx * dx
                            + 2.0 * packed[g, 1] * dx * dy
                            + 2.0 * packed[g, 2] * dx * dz
                            + packed[g, 3] * dy * dy
                            + 2.0 * packed[g, 4] * dy * dz
                            + packed[g, 5] * dz * dz
                        )
                        if q > q_max:
                            continue
                        acc += opacities[g] * np.exp(-0.5 * q)
                    values[ix, iy, iz] = acc
    return values


@njit(cache=True, parallel=True)
def naive_grid_kernel(centers, packed, opacities, res, origin, spacing):
    """All-pairs grid evaluation, no culling, no truncation (oracle/benchmark)."""
    values = np.zeros((res, res, res), dtype=np.float64)
    n = centers.shape[0]
    for ix in prange(res):
        x = origin + (ix + 0.5) * spacing
        for iy in range(res):
            y = origin + (iy + 0.5) * spacing
            for iz in range(res):
                z = origin + (iz + 0.5) * spacing
                acc = 0.0
                for g in range(n):
                    dx = x - centers[g, 0]
                    dy = y - centers[g, 1]
                    dz = z - centers[g, 2]
                    q = (
                        packed[g, 0] * dx * dx
                        + 2.0 * packed[g, 1] * dx * dy
                        + 2.0 * packed[g, 2] * dx * dz
                        + packed[g, 3] * dy * dy
                        + 2.0 * packed[g, 4] * dy * dz
                        + packed[g, 5] * dz * dz
                    )
                    acc += opacities[g] * np.exp(-0.5 * q)
                values[ix, iy, iz] = acc
    return values
