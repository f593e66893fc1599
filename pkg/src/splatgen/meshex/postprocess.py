"""Mesh post-processing: quadric-error decimation and Laplacian smoothing.

Decimation collapses minimum-cost edges (Garland-Heckbert vertex
quadrics, optimal placement with midpoint fallback) until the face
budget is met, skipping collapses that would flip triangle normals or
pinch the surface. Smoothing is uniform Laplacian with lambda = 0.5 as
the remeshing stand-in.
"""

from __future__ import annotations

import heapq

import numpy as np

from ..core.types import TriangleMesh
from ..errors import InvalidParameterError

__all__ = ["postprocess", "decimate", "smooth"]

DEFAULT_TARGET_FACES = 50_000
DEFAULT_SMOOTH_ITERS = 3
SMOOTH_LAMBDA = 0.5


def _face_quadrics(vertices, faces):
    v0 = vertices[faces[:, 0]]
    n = np.cross(vertices[faces[:, 1]] - v0, vertices[faces[:, 2]] - v0)
    norm = np.linalg.norm(n, axis=1, keepdims=True)
    area = 0.5 * norm[:, 0]
    n = np.divide(n, norm, out=np.zeros_like(n), where=norm > 0)
    d = -np.einsum("ij,ij->i", n, v0)
    plane = np.concatenate([n, d[:, None]], axis=1)  # (M, 4)
    quad = plane[:, :, None] * plane[:, None, :]     # (M, 4, 4)
    return quad * area[:, None, None]


def _vertex_quadrics(vertices, faces):
    fq = _face_quadrics(vertices, faces)
    vq = np.zeros((vertices.shape[0], 4, 4))
    for k in range(3):
        np.add.at(vq, faces[:, k], fq)
    return vq


def _collapse_target(q, va, vb):
    """Optimal placement minimizing the quadric, midpoint fallback."""
    a = q[:3, :3]
    b = -q[:3, 3]
    try:
        if abs(np.linalg.det(a)) > 1e-12:
            x = np.linalg.solve(a, b)
            if np.linalg.norm(x - 0.5 * (va + vb)) < 4.0 * np.linalg.norm(va - vb) + 1e-9:
                return x
    except np.linalg.LinAlgError:
        pass
    return 0.5 * (va + vb)


def _quadric_cost(q, p):
    ph = np.array([p[0], p[1], p[2], 1.0])
    return float(ph @ q @ ph)


def decimate(mesh: TriangleMesh, target_faces: int) -> TriangleMesh:
    """Edge-collapse decimation to at most target_faces triangles."""
    if target_faces < 4:
        raise InvalidParameterError("target_faces must be at least 4")
    if mesh.n_faces <= target_faces:
        return TriangleMesh(mesh.vertices.copy(), mesh.faces.copy(), uvs=None)

    vertices = mesh.vertices.copy()
    faces = mesh.faces.copy()
    n_v = vertices.shape[0]
    quadrics = _vertex_quadrics(vertices, faces)

    # adjacency
    vert_faces = [set() for _ in range(n_v)]
    for fi, (a, b, c) in enumerate(faces):
        vert_faces[a].add(fi)
        vert_faces[b].add(fi)
        vert_faces[c].add(fi)
    face_alive = np.ones(faces.shape[0], dtype=bool)
    vertex_alive = np.ones(n_v, dtype=bool)
    # union-find style redirection of collapsed vertices
    remap = np.arange(n_v)

    def resolve(v):
        while remap[v] != v:
            remap[v] = remap[remap[v]]
            v = remap[v]
        return v

    def edges_of(v):
        out = set()
        for fi in vert_faces[v]:
            if not face_alive[fi]:
                continue
            a, b, c = faces[fi]
            for u in (a, b, c):
                u = resolve(u)
                if u != v:
                    out.add(u)
        return out

    heap = []
    edge_seen = set()
    for fi in range(faces.shape[0]):
        a, b, c = faces[fi]
        for u, v in ((a, b), (b, c), (c, a)):
            key = (min(u, v), max(u, v))
            if key in edge_seen:
                continue
            edge_seen.add(key)
            q = quadrics[u] + quadrics[v]
            p = _collapse_target(q, vertices[u], vertices[v])
            heapq.heappush(heap, (_quadric_cost(q, p), key[0], key[1], p.tobytes()))

    alive_faces = int(face_alive.sum())

    def would_flip(v_keep, v_gone, new_pos):
        """Any surviving incident face flips its normal or degenerates?"""
        for fi in vert_faces[v_keep] | vert_faces[v_gone]:
            if not face_alive[fi]:
                continue
            tri = [resolve(x) for x in faces[fi]]
            if v_gone in tri and v_keep in tri:
                continue  # face disappears with the collapse
            old = [vertices[x] for x in tri]
            new = [new_pos if x in (v_keep, v_gone) else vertices[x] for x in tri]
            n_old = np.cross(old[1] - old[0], old[2] - old[0])
            n_new = np.cross(new[1] - new[0], new[2] - new[0])
            nn = np.linalg.norm(n_new)
            if nn < 1e-14 or np.dot(n_old, n_new) <= 0.0:
                return True
        return False

    while alive_faces > target_faces and heap:
        cost, ua, ub, pos_bytes = heapq.heappop(heap)
        a = resolve(ua)
        b = resolve(ub)
        if a == b or not (vertex_alive[a] and vertex_alive[b]):
            continue
        # stale entry check: the edge must still exist
        if b not in edges_of(a):
            continue
        # link condition: shared neighbors must equal the collapsed faces'
        # third corners, else the collapse pinches the surface
        shared = edges_of(a) & edges_of(b)
        third = set()
        for fi in vert_faces[a] & vert_faces[b]:
            if not face_alive[fi]:
                continue
            for x in faces[fi]:
                x = resolve(x)
                if x not in (a, b):
                    third.add(x)
        if shared != third or len(third) > 2:
            continue
        new_pos = np.frombuffer(pos_bytes, dtype=np.float64).copy()
        if would_flip(a, b, new_pos):
            continue

        # collapse b into a
        vertices[a] = new_pos
        quadrics[a] = quadrics[a] + quadrics[b]
        vertex_alive[b] = False
        remap[b] = a
        for fi in list(vert_faces[b]):
            if not face_alive[fi]:
                continue
            tri = [resolve(x) for x in faces[fi]]
            if tri.count(a) > 1:
                face_alive[fi] = False
                alive_faces -= 1
            else:
                vert_faces[a].add(fi)
        vert_faces[a] |= vert_faces[b]
        vert_faces[b] = set()

        for u in edges_of(a):
            q = quadrics[a] + quadrics[u]
            p = _collapse_target(q, vertices[a], vertices[u])
            heapq.heappush(
                heap, (_quadric_cost(q, p), min(a, u), max(a, u), p.tobytes())
            )

    # compact the arrays
    out_faces = []
    for fi in range(faces.shape[0]):
        if not face_alive[fi]:
            continue
        tri = tuple(resolve(x) for x in faces[fi])
        if len(set(tri)) == 3:
            out_faces.append(tri)
    out_faces = np.asarray(out_faces, dtype=np.int64).reshape(-1, 3)
    used = np.unique(out_faces)
    index_map = np.full(n_v, -1, dtype=np.int64)
    index_map[used] = np.arange(used.size)
    return TriangleMesh(vertices=vertices[used], faces=index_map[out_faces])


def smooth(mesh: TriangleMesh, iterations: int, lam: float = SMOOTH_LAMBDA) -> TriangleMesh:
    """Uniform Laplacian smoothing: v += lam * (mean(neighbors) - v)."""
    if iterations <= 0 or mesh.is_empty():
        return TriangleMesh(mesh.vertices.copy(), mesh.faces.copy(), uvs=mesh.uvs)
    vertices = mesh.vertices.copy()
    faces = mesh.faces
    n_v = vertices.shape[0]
    pairs = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    pairs = np.concatenate([pairs, pairs[:, ::-1]])
    pairs = np.unique(pairs, axis=0)
    degree = np.zeros(n_v)
    np.add.at(degree, pairs[:, 0], 1.0)
    degree[degree == 0.0] = 1.0
    for _ in range(iterations):
        acc = np.zeros_like(vertices)
        np.add.at(acc, pairs[:, 0], vertices[pairs[:, 1]])
        vertices += lam * (acc / degree[:, None] - vertices)
    return TriangleMesh(vertices=vertices, faces=faces.copy(), uvs=mesh.uvs)


def postprocess(
    mesh: TriangleMesh,
    target_faces: int = DEFAULT_TARGET_FACES,
    smooth_iters: int = DEFAULT_SMOOTH_ITERS,
) -> TriangleMesh:
    """Decimate to the face budget, then smooth; recomputes vertex normals."""
    if mesh.is_empty():
        raise InvalidParameterError("postprocess: mesh is empty")
    out = decimate(mesh, target_faces)
    out = smooth(out, smooth_iters)
    return out.with_vertex_normals()
