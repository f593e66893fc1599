"""Marching cubes over the density grid.

Standard 256-case tables with linear edge interpolation. Vertices are
welded by grid-edge key so shared edges produce shared vertices, giving
closed 2-manifolds on closed isosurfaces regardless of traversal order.
Faces are oriented so normals point along decreasing density (outward),
and vertex normals are area-weighted face normals.
"""

from __future__ import annotations

import numpy as np

from ..backend import active_backend
from ..core.types import TriangleMesh
from ..errors import InvalidParameterError
from ._mc_tables import CORNER_OFFSETS, EDGE_CORNERS, TRI_TABLE
from .density import DOMAIN_MIN, DensityGrid

__all__ = ["marching_cubes"]

try:
    from numba import njit
except ImportError:  # pragma: no cover
    njit = None


def _cell_triangles_python(values, threshold):
    """Vectorized cube-index classification, python loop over surface cells."""
    r = values.shape[0]
    below = values < threshold
    cube = np.zeros((r - 1, r - 1, r - 1), dtype=np.int64)
    for bit, (di, dj, dk) in enumerate(CORNER_OFFSETS):
        cube |= (
            below[di : r - 1 + di, dj : r - 1 + dj, dk : r - 1 + dk].astype(np.int64)
            << bit
        )
    active = np.argwhere((cube != 0) & (cube != 255))
    keys = []
    for i, j, k in active:
        row = TRI_TABLE[cube[i, j, k]]
        for t in range(0, 16, 3):
            if row[t] < 0:
                break
            for corner in (row[t], row[t + 1], row[t + 2]):
                ca, cb = EDGE_CORNERS[corner]
                ai, aj, ak = i + CORNER_OFFSETS[ca, 0], j + CORNER_OFFSETS[ca, 1], k + CORNER_OFFSETS[ca, 2]
                bi, bj, bk = i + CORNER_OFFSETS[cb, 0], j + CORNER_OFFSETS[cb, 1], k + CORNER_OFFSETS[cb, 2]
                # canonical edge id: lower endpoint along the varying axis
                if (ai, aj, ak) > (bi, bj, bk):
                    ai, aj, ak, bi, bj, bk = bi, bj, bk, ai, aj, ak
                axis = 0 if bi > ai else (1 if bj > aj else 2)
                keys.append(((ai * r + aj) * r + ak) * 3 + axis)
    return np.asarray(keys, dtype=np.int64)


if njit is not None:

    @njit(cache=True)
    def _cell_triangles_numba(values, threshold, tri_table, edge_corners, corner_offsets):
        r = values.shape[0]
        # first pass: count emitted corner keys
        count = 0
        for i in range(r - 1):
            for j in range(r - 1):
                for k in range(r - 1):
                    cube = 0
                    for bit in range(8):
                        di = corner_offsets[bit, 0]
                        dj = corner_offsets[bit, 1]
                        dk = corner_offsets[bit, 2]
                        if values[i + di, j + dj, k + dk] < threshold:
                            cube |= 1 << bit
                    if cube == 0 or cube == 255:
                        continue
                    for t in range(0, 16, 3):
                        if tri_table[cube, t] < 0:
                            break
                        count += 3
        keys = np.empty(count, dtype=np.int64)
        pos = 0
        for i in range(r - 1):
            for j in range(r - 1):
                for k in range(r - 1):
                    cube = 0
                    for bit in range(8):
                        di = corner_offsets[bit, 0]
                        dj = corner_offsets[bit, 1]
                        dk = corner_offsets[bit, 2]
                        if values[i + di, j + dj, k + dk] < threshold:
                            cube |= 1 << bit
                    if cube == 0 or cube == 255:
                        continue
                    for t in range(0, 16, 3):
                        if tri_table[cube, t] < 0:
                            break
                        for c in range(3):
                            corner = tri_table[cube, t + c]
                            ca = edge_corners[corner, 0]
                            cb = edge_corners[corner, 1]
                            ai = i + corner_offsets[ca, 0]
                            aj = j + corner_offsets[ca, 1]
                            ak = k + corner_offsets[ca, 2]
                            bi = i + corner_offsets[cb, 0]
                            bj = j + corner_offsets[cb, 1]
                            bk = k + corner_offsets[cb, 2]
                            if (ai > bi) or (ai == bi and (aj > bj or (aj == bj and ak > bk))):
                                ai, aj, ak, bi, bj, bk = bi, bj, bk, ai, aj, ak
                            if bi > ai:
                                axis = 0
                            elif bj > aj:
                                axis = 1
                            else:
                                axis = 2
                            keys[pos] = ((ai * r + aj) * r + ak) * 3 + axis
                            pos += 1
        return keys


def marching_cubes(grid: DensityGrid, threshold: float = 1.0) -> TriangleMesh:
    """Extract the iso-surface mesh at the given density threshold.

    Returns an empty mesh (flagged via is_empty()) when the field never
    crosses the threshold.
    """
    if threshold <= 0.0:
        raise InvalidParameterError(f"threshold must be > 0, got {threshold}")
    values = grid.values
    if active_backend() == "numba" and njit is not None:
        corner_keys = _cell_triangles_numba(
            values, float(threshold), TRI_TABLE, EDGE_CORNERS, CORNER_OFFSETS
        )
    else:
        corner_keys = _cell_triangles_python(values, float(threshold))
    if corner_keys.size == 0:
        return TriangleMesh(
            vertices=np.zeros((0, 3)), faces=np.zeros((0, 3), dtype=np.int64),
            normals=np.zeros((0, 3)),
        )

    unique_keys, inverse = np.unique(corner_keys, return_inverse=True)
    r = values.shape[0]
    axis = unique_keys % 3
    flat = unique_keys // 3
    ak = flat % r
    aj = (flat // r) % r
    ai = flat // (r * r)
    b = np.stack([ai, aj, ak], axis=1)
    b[np.arange(b.shape[0]), axis] += 1

    va = values[ai, aj, ak]
    vb = values[b[:, 0], b[:, 1], b[:, 2]]
    t = (threshold - va) / (vb - va)
    coords = grid.coordinates()
    pa = np.stack([coords[ai], coords[aj], coords[ak]], axis=1)
    pb = np.stack([coords[b[:, 0]], coords[b[:, 1]], coords[b[:, 2]]], axis=1)
    vertices = pa + t[:, None] * (pb - pa)

    faces = inverse.reshape(-1, 3)
    # drop degenerate faces produced by threshold hits exactly on grid points
    good = (
        (faces[:, 0] != faces[:, 1])
        & (faces[:, 1] != faces[:, 2])
        & (faces[:, 2] != faces[:, 0])
    )
    faces = faces[good]

    mesh = TriangleMesh(vertices=vertices, faces=faces)
    mesh = _orient_outward(mesh, grid, threshold)
    return mesh.with_vertex_normals()


def _orient_outward(mesh: TriangleMesh, grid: DensityGrid, threshold: float) -> TriangleMesh:
    """Flip winding if normals point into the dense region.

    Samples the density gradient (central differences on the grid) at up to
    100 face centroids; outward means density decreases along the normal.
    """
    if mesh.is_empty():
        return mesh
    n_sample = min(100, mesh.n_faces)
    idx = np.linspace(0, mesh.n_faces - 1, n_sample).astype(int)
    centroids = mesh.vertices[mesh.faces[idx]].mean(axis=1)
    normals = mesh.face_normals()[idx]

    r = grid.resolution
    h = grid.spacing
    cell = np.clip(((centroids - DOMAIN_MIN) / h - 0.5).astype(int), 1, r - 2)
    gx = (grid.values[cell[:, 0] + 1, cell[:, 1], cell[:, 2]]
          - grid.values[cell[:, 0] - 1, cell[:, 1], cell[:, 2]])
    gy = (grid.values[cell[:, 0], cell[:, 1] + 1, cell[:, 2]]
          - grid.values[cell[:, 0], cell[:, 1] - 1, cell[:, 2]])
    gz = (grid.values[cell[:, 0], cell[:, 1], cell[:, 2] + 1]
          - grid.values[cell[:, 0], cell[:, 1], cell[:, 2] - 1])
    gradient = np.stack([gx, gy, gz], axis=1)
    votes = np.sum(np.einsum("ij,ij->i", normals, gradient) < 0.0)
    if votes < n_sample / 2:
        flipped = mesh.faces[:, [0, 2, 1]].copy()
        return TriangleMesh(vertices=mesh.vertices, faces=flipped, uvs=mesh.uvs)
    return mesh

