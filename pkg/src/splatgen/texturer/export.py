"""Textured mesh export: OBJ + MTL + PNG, and the matching importer.

OBJ carries v/vn/vt and f v/vt/vn triples; vt rows are written with the
OBJ convention (v=0 at the bottom), flipped from the internal row-0-top
texture layout. The MTL references the PNG by relative path (map_Kd).
"""

from __future__ import annotations

import os

import numpy as np

from ..core.types import TextureImage, TriangleMesh
from ..errors import InvalidParameterError, SplatgenError
from .atlas import UVAtlas

__all__ = ["export_bundle", "import_bundle", "write_obj_geometry"]


def _texture_to_png(texture: TextureImage, path) -> None:
    from PIL import Image

    arr = (np.clip(texture.rgb, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(path)


def _texture_from_png(path) -> TextureImage:
    from PIL import Image

    arr = np.asarray(Image.open(path).convert("RGB"), dtype=np.float64) / 255.0
    return TextureImage(rgb=arr, valid=np.ones(arr.shape[:2], dtype=bool))


def write_obj_geometry(mesh: TriangleMesh, path) -> None:
    """Raw geometry OBJ (v/vn/f), no texture; used for mesh inspection."""
    normals = mesh.normals if mesh.normals is not None else mesh.compute_vertex_normals()
    try:
        with open(path, "w") as fh:
            fh.write("# splatgen raw geometry\n")
            for v in mesh.vertices:
                fh.write(f"v {v[0]:.8f} {v[1]:.8f} {v[2]:.8f}\n")
            for n in normals:
                fh.write(f"vn {n[0]:.8f} {n[1]:.8f} {n[2]:.8f}\n")
            for f in mesh.faces:
                a, b, c = f + 1
                fh.write(f"f {a}//{a} {b}//{b} {c}//{c}\n")
    except OSError as exc:
        raise SplatgenError(f"cannot write OBJ {path}: {exc}") from exc


def export_bundle(mesh: TriangleMesh, atlas: UVAtlas, texture: TextureImage,
                  obj_path) -> dict:
    """Write OBJ/MTL/PNG next to each other; returns the written paths."""
    if atlas.uvs.shape[0] != mesh.n_faces:
        raise InvalidParameterError("atlas does not match the mesh")
    obj_path = os.fspath(obj_path)
    base, _ = os.path.splitext(obj_path)
    mtl_path = base + ".mtl"
    png_path = base + ".png"
    mtl_name = os.path.basename(mtl_path)
    png_name = os.path.basename(png_path)
    normals = mesh.normals if mesh.normals is not None else mesh.compute_vertex_normals()

    try:
        with open(obj_path, "w") as fh:
            fh.write(f"mtllib {mtl_name}\n")
            for v in mesh.vertices:
                fh.write(f"v {v[0]:.8f} {v[1]:.8f} {v[2]:.8f}\n")
            for n in normals:
                fh.write(f"vn {n[0]:.8f} {n[1]:.8f} {n[2]:.8f}\n")
            for corner_uv in atlas.uvs.reshape(-1, 2):
                fh.write(f"vt {corner_uv[0]:.8f} {1.0 - corner_uv[1]:.8f}\n")
            fh.write("usemtl baked\n")
            for fi, f in enumerate(mesh.faces):
                a, b, c = f + 1
                ta, tb, tc = 3 * fi + 1, 3 * fi + 2, 3 * fi + 3
                fh.write(f"f {a}/{ta}/{a} {b}/{tb}/{b} {c}/{tc}/{c}\n")
        with open(mtl_path, "w") as fh:
            fh.write("newmtl baked\nKa 1.0 1.0 1.0\nKd 1.0 1.0 1.0\n")
            fh.write(f"map_Kd {png_name}\n")
        _texture_to_png(texture, png_path)
    except OSError as exc:
        raise SplatgenError(f"export failed for {obj_path}: {exc}") from exc
    return {"obj": obj_path, "mtl": mtl_path, "png": png_path}


def import_bundle(obj_path):
    """Read back an exported bundle; returns (mesh, uvs (M,3,2), texture).

    The texture is the PNG quantized to 8 bits; UVs are flipped back to the
    internal convention.
    """
    obj_path = os.fspath(obj_path)
    vertices = []
    normals = []
    uvs = []
    faces = []
    face_uv = []
    mtl_name = None
    try:
        with open(obj_path) as fh:
            for line in fh:
                parts = line.split()
                if not parts:
                    continue
                if parts[0] == "v":
                    vertices.append([float(x) for x in parts[1:4]])
                elif parts[0] == "vn":
                    normals.append([float(x) for x in parts[1:4]])
                elif parts[0] == "vt":
                    uvs.append([float(parts[1]), 1.0 - float(parts[2])])
                elif parts[0] == "mtllib":
                    mtl_name = parts[1]
                elif parts[0] == "f":
                    tri_v = []
                    tri_t = []
                    for token in parts[1:4]:
                        fields = token.split("/")
                        tri_v.append(int(fields[0]) - 1)
                        tri_t.append(int(fields[1]) - 1 if len(fields) > 1 and fields[1] else -1)
                    faces.append(tri_v)
                    face_uv.append(tri_t)
    except OSError as exc:
        raise SplatgenError(f"cannot read OBJ {obj_path}: {exc}") from exc

    mesh = TriangleMesh(
        vertices=np.asarray(vertices, dtype=np.float64),
        faces=np.asarray(faces, dtype=np.int64),
        normals=np.asarray(normals, dtype=np.float64) if normals else None,
    )
    uv_arr = np.asarray(uvs, dtype=np.float64)
    face_uv = np.asarray(face_uv, dtype=np.int64)
    corner_uvs = (
        uv_arr[face_uv] if face_uv.size and face_uv.min() >= 0 else None
    )
    if corner_uvs is not None:
        mesh.uvs = corner_uvs

    texture = None
    base_dir = os.path.dirname(obj_path)
    if mtl_name is not None:
        png_name = None
        try:
            with open(os.path.join(base_dir, mtl_name)) as fh:
                for line in fh:
                    parts = line.split()
                    if parts and parts[0] == "map_Kd":
                        png_name = parts[1]
        except OSError as exc:
            raise SplatgenError(f"cannot read MTL for {obj_path}: {exc}") from exc
        if png_name is not None:
            texture = _texture_from_png(os.path.join(base_dir, png_name))
    return mesh, corner_uvs, texture
