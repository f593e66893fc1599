"""Server-side codec for the guidance wire protocol.

Implemented standalone (no splatgen import): the protocol is the contract
between the packages. Planes are row-major little-endian float32, base64
encoded.
"""

from __future__ import annotations

import base64
import binascii
from dataclasses import dataclass

import numpy as np

__all__ = ["ProtocolError", "DecodedRequest", "decode_request", "encode_plane"]

RESIDUAL = "residual"
REFINE = "refine"


class ProtocolError(ValueError):
    """Malformed request; maps to HTTP 400 with {"error": ...}."""


@dataclass
class DecodedRequest:
    kind: str
    width: int
    height: int
    rgb: np.ndarray            # (H, W, 3) float64
    camera: dict               # azimuth / elevation / radius / fov_y
    timestep: float
    conditioning_type: str     # "image" | "text"
    ref_rgb: np.ndarray | None
    delta: tuple | None
    prompt: str | None


def encode_plane(arr: np.ndarray) -> str:
    data = np.ascontiguousarray(arr, dtype="<f4").tobytes()
    return base64.b64encode(data).decode("ascii")


def _decode_plane(b64, shape, field):
    if not isinstance(b64, str):
        raise ProtocolError(f"field {field!r} must be a base64 string")
    try:
        raw = base64.b64decode(b64, validate=True)
    except (binascii.Error, ValueError):
        raise ProtocolError(f"field {field!r} is not valid base64") from None
    expected = int(np.prod(shape)) * 4
    if len(raw) != expected:
        raise ProtocolError(
            f"field {field!r} holds {len(raw)} bytes, expected {expected}"
        )
    return np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float64)


def _need(body, field):
    if field not in body:
        raise ProtocolError(f"missing field {field!r}")
    return body[field]


def _number(body, field):
    value = _need(body, field)
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ProtocolError(f"field {field!r} is not a number") from None


def decode_request(body) -> DecodedRequest:
    if not isinstance(body, dict):
        raise ProtocolError("request body must be a JSON object")
    kind = _need(body, "kind")
    if kind not in (RESIDUAL, REFINE):
        raise ProtocolError(f"unknown kind {kind!r}")
    try:
        width = int(_need(body, "width"))
        height = int(_need(body, "height"))
    except (TypeError, ValueError):
        raise ProtocolError("width/height must be integers") from None
    if not (8 <= width <= 4096 and 8 <= height <= 4096):
        raise ProtocolError(f"unsupported image size {width}x{height}")
    rgb = _decode_plane(_need(body, "rgb_b64"), (height, width, 3), "rgb_b64")

    cam = _need(body, "camera")
    if not isinstance(cam, dict):
        raise ProtocolError("camera must be an object")
    camera = {k: _number(cam, k) for k in ("azimuth", "elevation", "radius", "fov_y")}

    timestep = _number(body, "timestep")
    if not (0.0 < timestep <= 1.0):
        raise ProtocolError(f"timestep out of range: {timestep}")

    cond = _need(body, "conditioning")
    if not isinstance(cond, dict):
        raise ProtocolError("conditioning must be an object")
    cond_type = _need(cond, "type")
    ref_rgb = None
    delta = None
    prompt = None
    if cond_type == "image":
        ref_rgb = _decode_plane(
            _need(cond, "ref_rgb_b64"), (height, width, 3), "ref_rgb_b64"
        )
        d = _need(cond, "delta")
        if not isinstance(d, dict):
            raise ProtocolError("delta must be an object")
        delta = tuple(_number(d, k) for k in ("azimuth", "elevation", "radius"))
    elif cond_type == "text":
        prompt = _need(cond, "prompt")
        if not isinstance(prompt, str):
            raise ProtocolError("prompt must be a string")
    else:
        raise ProtocolError(f"unknown conditioning type {cond_type!r}")
    return DecodedRequest(
        kind=kind, width=width, height=height, rgb=rgb, camera=camera,
        timestep=timestep, conditioning_type=cond_type, ref_rgb=ref_rgb,
        delta=delta, prompt=prompt,
    )
