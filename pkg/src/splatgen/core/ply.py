"""Binary PLY persistence for Gaussian clouds.

Layout: one ``vertex`` element with 14 little-endian float32 properties

    x y z scale_0 scale_1 scale_2 rot_0 rot_1 rot_2 rot_3 opacity
    red_f green_f blue_f

All values are stored activated (true stddevs, opacity in [0, 1], RGB in
[0, 1]), which differs from reference splatting codebases that persist
log-scales and opacity logits. Densification statistics are not persisted.
"""

from __future__ import annotations

import io
from typing import BinaryIO

import numpy as np

from ..errors import PlyHeaderError, PlyPropertyError, PlyTruncatedError
from .types import GaussianCloud

__all__ = ["PLY_PROPERTIES", "ply_write", "ply_read", "ply_dumps", "ply_loads"]

PLY_PROPERTIES = (
    "x", "y", "z",
    "scale_0", "scale_1", "scale_2",
    "rot_0", "rot_1", "rot_2", "rot_3",
    "opacity",
    "red_f", "green_f", "blue_f",
)


def _header(count: int) -> bytes:
    lines = ["ply", "format binary_little_endian 1.0", f"element vertex {count}"]
    lines += [f"property float {name}" for name in PLY_PROPERTIES]
    lines.append("end_header")
    return ("\n".join(lines) + "\n").encode("ascii")


def ply_write(cloud: GaussianCloud, stream: BinaryIO) -> None:
    n = len(cloud)
    data = np.empty((n, len(PLY_PROPERTIES)), dtype="<f4")
    data[:, 0:3] = cloud.centers
    data[:, 3:6] = cloud.scales
    data[:, 6:10] = cloud.rotations
    data[:, 10] = cloud.opacities
    data[:, 11:14] = cloud.colors
    stream.write(_header(n))
    stream.write(data.tobytes())


def ply_dumps(cloud: GaussianCloud) -> bytes:
    buf = io.BytesIO()
    ply_write(cloud, buf)
    return buf.getvalue()


def _read_header_line(stream: BinaryIO) -> str:
    raw = bytearray()
    while True:
        ch = stream.read(1)
        if not ch:
            raise PlyHeaderError("unexpected end of file inside header")
        if ch == b"\n":
            break
        raw += ch
    return raw.decode("ascii", errors="replace").strip()


def ply_read(stream: BinaryIO) -> GaussianCloud:
    """Parse a cloud written by :func:`ply_write`.

    Raises PlyHeaderError / PlyPropertyError / PlyTruncatedError with the
    offending line or property named in the message.
    """
    magic = _read_header_line(stream)
    if magic != "ply":
        raise PlyHeaderError(f"not a PLY file (first line {magic!r})")
    fmt = _read_header_line(stream)
    if fmt != "format binary_little_endian 1.0":
        raise PlyHeaderError(f"unsupported format line {fmt!r}")

    count = None
    properties: list[str] = []
    while True:
        line = _read_header_line(stream)
        if line == "end_header":
            break
        if line.startswith("comment"):
            continue
        if line.startswith("element"):
            parts = line.split()
            if len(parts) != 3 or parts[1] != "vertex":
                raise PlyHeaderError(f"unsupported element line {line!r}")
            try:
                count = int(parts[2])
            except ValueError:
                raise PlyHeaderError(f"bad vertex count in {line!r}") from None
            continue
        if line.startswith("property"):
            parts = line.split()
            if len(parts) != 3 or parts[1] != "float":
                raise PlyPropertyError(f"unsupported property line {line!r}")
            properties.append(parts[2])
            continue
        raise PlyHeaderError(f"unrecognized header line {line!r}")

    if count is None:
        raise PlyHeaderError("header is missing the vertex element")
    for expected in PLY_PROPERTIES:
        if expected not in properties:
            raise PlyPropertyError(f"missing property {expected!r}")
    for got, expected in zip(properties, PLY_PROPERTIES):
        if got != expected:
            raise PlyPropertyError(
                f"property order mismatch: expected {expected!r}, found {got!r}"
            )
    if len(properties) != len(PLY_PROPERTIES):
        extra = properties[len(PLY_PROPERTIES):]
        raise PlyPropertyError(f"unexpected extra properties {extra!r}")

    payload = stream.read(count * len(PLY_PROPERTIES) * 4)
    if len(payload) < count * len(PLY_PROPERTIES) * 4:
        raise PlyTruncatedError(
            f"payload holds {len(payload)} bytes, "
            f"expected {count * len(PLY_PROPERTIES) * 4} for {count} vertices"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(count, len(PLY_PROPERTIES))
    data = data.astype(np.float64)
    return GaussianCloud(
        centers=data[:, 0:3],
        scales=data[:, 3:6],
        rotations=data[:, 6:10],
        opacities=data[:, 10],
        colors=data[:, 11:14],
    )


def ply_loads(blob: bytes) -> GaussianCloud:
    return ply_read(io.BytesIO(blob))


def ply_save(cloud: GaussianCloud, path) -> None:
    with open(path, "wb") as fh:
        ply_write(cloud, fh)


def ply_load(path) -> GaussianCloud:
    with open(path, "rb") as fh:
        return ply_read(fh)
