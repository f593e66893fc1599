"""JSON + base64 wire codec for the guidance protocol.

Request body:

    {"kind": "residual" | "refine",
     "width": int, "height": int,
     "rgb_b64": <row-major little-endian float32 H*W*3>,
     "camera": {"azimuth": f, "elevation": f, "radius": f, "fov_y": f},
     "timestep": f,
     "conditioning": {"type": "image", "ref_rgb_b64": ..., "delta": {...}}
                   | {"type": "text", "prompt": str}}

Response body: {"residual_b64": ...} or {"refined_b64": ...} or {"error": str}.

The reference plane is encoded at the same width/height as the request
image (callers resample beforehand). All planes decode to float64 arrays.
"""

from __future__ import annotations

import base64
import binascii

import numpy as np

from ..core.types import Camera, ImageBuffer
from ..errors import GuidanceProtocolError
from .types import (
    REFINE,
    RESIDUAL,
    GuidanceRequest,
    GuidanceResponse,
    ImageConditioning,
    TextConditioning,
)

__all__ = [
    "encode_plane",
    "decode_plane",
    "encode_request",
    "decode_request",
    "encode_response",
    "decode_response",
]


def encode_plane(arr: np.ndarray) -> str:
    data = np.ascontiguousarray(arr, dtype="<f4").tobytes()
    return base64.b64encode(data).decode("ascii")


def decode_plane(b64: str, shape: tuple, field: str) -> np.ndarray:
    try:
        raw = base64.b64decode(b64, validate=True)
    except (binascii.Error, TypeError, ValueError):
        raise GuidanceProtocolError(f"field {field!r} is not valid base64") from None
    expected = int(np.prod(shape)) * 4
    if len(raw) != expected:
        raise GuidanceProtocolError(
            f"field {field!r} holds {len(raw)} bytes, expected {expected} "
            f"for shape {shape}"
        )
    return np.frombuffer(raw, dtype="<f4").reshape(shape).astype(np.float64)


def encode_request(request: GuidanceRequest) -> dict:
    cam = request.camera
    body = {
        "kind": request.kind,
        "width": int(request.image.width),
        "height": int(request.image.height),
        "rgb_b64": encode_plane(request.image.rgb),
        "camera": {
            "azimuth": float(cam.azimuth),
            "elevation": float(cam.elevation),
            "radius": float(cam.radius),
            "fov_y": float(cam.fov_y),
        },
        "timestep": float(request.timestep),
    }
    cond = request.conditioning
    if isinstance(cond, ImageConditioning):
        body["conditioning"] = {
            "type": "image",
            "ref_rgb_b64": encode_plane(cond.ref_rgb),
            "delta": {
                "azimuth": cond.delta[0],
                "elevation": cond.delta[1],
                "radius": cond.delta[2],
            },
        }
    else:
        body["conditioning"] = {"type": "text", "prompt": cond.prompt}
    return body


def _require(mapping: dict, field: str):
    if field not in mapping:
        raise GuidanceProtocolError(f"missing field {field!r}")
    return mapping[field]


def decode_request(body: dict) -> GuidanceRequest:
    kind = _require(body, "kind")
    if kind not in (RESIDUAL, REFINE):
        raise GuidanceProtocolError(f"unknown kind {kind!r}")
    width = int(_require(body, "width"))
    height = int(_require(body, "height"))
    if width < 8 or height < 8:
        raise GuidanceProtocolError(f"bad image size {width}x{height}")
    rgb = decode_plane(_require(body, "rgb_b64"), (height, width, 3), "rgb_b64")
    cam_body = _require(body, "camera")
    camera = Camera(
        azimuth=float(_require(cam_body, "azimuth")),
        elevation=float(_require(cam_body, "elevation")),
        radius=float(_require(cam_body, "radius")),
        fov_y=float(_require(cam_body, "fov_y")),
        width=width,
        height=height,
    )
    timestep = float(_require(body, "timestep"))
    if not (0.0 < timestep <= 1.0):
        raise GuidanceProtocolError(f"timestep out of range: {timestep}")
    cond_body = _require(body, "conditioning")
    cond_type = _require(cond_body, "type")
    if cond_type == "image":
        ref = decode_plane(
            _require(cond_body, "ref_rgb_b64"), (height, width, 3), "ref_rgb_b64"
        )
        delta_body = _require(cond_body, "delta")
        cond = ImageConditioning(
            ref_rgb=ref,
            delta=(
                float(_require(delta_body, "azimuth")),
                float(_require(delta_body, "elevation")),
                float(_require(delta_body, "radius")),
            ),
        )
    elif cond_type == "text":
        cond = TextConditioning(prompt=str(_require(cond_body, "prompt")))
    else:
        raise GuidanceProtocolError(f"unknown conditioning type {cond_type!r}")
    image = ImageBuffer(rgb=np.clip(rgb, 0.0, 1.0), alpha=np.zeros((height, width)))
    return GuidanceRequest(
        kind=kind, image=image, camera=camera, timestep=timestep, conditioning=cond
    )


def encode_response(response: GuidanceResponse) -> dict:
    if response.residual is not None:
        return {"residual_b64": encode_plane(response.residual)}
    return {"refined_b64": encode_plane(response.refined.rgb)}


def decode_response(body: dict, kind: str, width: int, height: int) -> GuidanceResponse:
    if "error" in body:
        from ..errors import GuidanceServerError

        raise GuidanceServerError(str(body["error"]))
    if kind == RESIDUAL:
        plane = decode_plane(
            _require(body, "residual_b64"), (height, width, 3), "residual_b64"
        )
        return GuidanceResponse(residual=plane)
    plane = decode_plane(
        _require(body, "refined_b64"), (height, width, 3), "refined_b64"
    )
    refined = ImageBuffer(
        rgb=np.clip(plane, 0.0, 1.0), alpha=np.ones((height, width))
    )
    return GuidanceResponse(refined=refined)
