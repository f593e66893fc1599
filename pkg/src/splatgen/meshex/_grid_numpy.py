"""Pure-numpy density grid kernel: per-gaussian vectorized bbox accumulation.

Equivalent to the block kernel: a grid point inside a retained block but
outside the gaussian's truncation ellipsoid is skipped by the q_max rule
in both paths, and contributions accumulate in gaussian-index order.
"""

import numpy as np


def grid_kernel(centers, packed, opacities, lists, offsets,
                n_blocks, sub, origin, spacing, q_max):
    res = n_blocks * sub
    values = np.zeros((res, res, res), dtype=np.float64)
    coords = origin + (np.arange(res) + 0.5) * spacing
    block_size = spacing * sub

    # recover per-gaussian block spans from the partition lists
    n = centers.shape[0]
    span_lo = np.full((n, 3), n_blocks, dtype=np.int64)
    span_hi = np.full((n, 3), -1, dtype=np.int64)
    for b in range(n_blocks**3):
        seg = lists[offsets[b] : offsets[b + 1]]
        if seg.size == 0:
            continue
        bx = b // (n_blocks * n_blocks)
        by = (b // n_blocks) % n_blocks
        bz = b % n_blocks
        idx = np.array([bx, by, bz])
        span_lo[seg] = np.minimum(span_lo[seg], idx)
        span_hi[seg] = np.maximum(span_hi[seg], idx)

    for g in range(n):
        if span_hi[g, 0] < span_lo[g, 0]:
            continue
        sl = [
            slice(span_lo[g, k] * sub, (span_hi[g, k] + 1) * sub) for k in range(3)
        ]
        dx = (coords[sl[0]] - centers[g, 0])[:, None, None]
        dy = (coords[sl[1]] - centers[g, 1])[None, :, None]
        dz = (coords[sl[2]] - centers[g, 2])[None, None, :]
        q = (
            packed[g, 0] * dx * dx
            + 2.0 * packed[g, 1] * dx * dy
            + 2.0 * packed[g, 2] * dx * dz
            + packed[g, 3] * dy * dy
            + 2.0 * packed[g, 4] * dy * dz
            + packed[g, 5] * dz * dz
        )
        contrib = np.where(q <= q_max, opacities[g] * np.exp(-0.5 * q), 0.0)
        values[tuple(sl)] += contrib
    return values


def naive_grid_kernel(centers, packed, opacities, res, origin, spacing):
    """All-pairs grid evaluation in chunks (oracle/benchmark)."""
    coords = origin + (np.arange(res) + 0.5) * spacing
    values = np.zeros((res, res, res), dtype=np.float64)
    for g in range(centers.shape[0]):
        dx = (coords - centers[g, 0])[:, None, None]
        dy = (coords - centers[g, 1])[None, :, None]
        dz = (coords - centers[g, 2])[None, None, :]
        q = (
            packed[g, 0] * dx * dx
            + 2.0 * packed[g, 1] * dx * dy
            + 2.0 * packed[g, 2] * dx * dz
            + packed[g, 3] * dy * dy
            + 2.0 * packed[g, 4] * dy * dz
            + packed[g, 5] * dz * dz
        )
        values += opacities[g] * np.exp(-0.5 * q)
    return values
