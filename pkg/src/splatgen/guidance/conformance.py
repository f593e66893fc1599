"""Protocol-conformance checks runnable against any guidance endpoint.

Used by the test suite against the in-repo echo server and by external
server implementations (e.g. the diffusion bridge in mock mode) to prove
wire compatibility.
"""

from __future__ import annotations

import json
import urllib.error
import urllib.request

import numpy as np

from ..core.types import Camera, ImageBuffer
from .remote import remote_guidance
from .wire import encode_request
from .types import (
    REFINE,
    RESIDUAL,
    GuidanceRequest,
    ImageConditioning,
    TextConditioning,
)

__all__ = ["run_protocol_suite"]


def _request(kind, size, conditioning_type="image", timestep=0.5, seed=0):
    rng = np.random.default_rng(seed)
    image = ImageBuffer(rgb=rng.random((size, size, 3)), alpha=np.ones((size, size)))
    camera = Camera(azimuth=30.0, elevation=10.0, radius=2.0, fov_y=49.0,
                    width=size, height=size)
    if conditioning_type == "image":
        cond = ImageConditioning(ref_rgb=rng.random((size, size, 3)),
                                 delta=(30.0, 10.0, 0.0))
    else:
        cond = TextConditioning(prompt="a ceramic mug")
    return GuidanceRequest(kind=kind, image=image, camera=camera,
                           timestep=timestep, conditioning=cond)


def _post_raw(endpoint, body: dict, timeout: float):
    req = urllib.request.Request(
        endpoint,
        data=json.dumps(body).encode("utf-8"),
        headers={"Content-Type": "application/json"},
    )
    try:
        with urllib.request.urlopen(req, timeout=timeout) as reply:
            return reply.status, json.loads(reply.read().decode("utf-8"))
    except urllib.error.HTTPError as exc:
        try:
            return exc.code, json.loads(exc.read().decode("utf-8"))
        except Exception:
            return exc.code, {}


def run_protocol_suite(endpoint: str, expect_mock: bool = False,
                       sizes=(64, 256), timeout: float = 60.0) -> list:
    """Run the conformance checks; returns [(name, detail), ...] of failures.

    With expect_mock the endpoint must behave as the echo server: zero
    residuals and identity refinement.
    """
    failures: list = []

    def check(name, ok, detail=""):
        if not ok:
            failures.append((name, detail))

    for size in sizes:
        for cond_type in ("image", "text"):
            req = _request(RESIDUAL, size, cond_type)
            resp = remote_guidance(req, endpoint, timeout)
            ok = resp.residual is not None and resp.residual.shape == (size, size, 3)
            check(f"residual dims {size} {cond_type}", ok, f"got {resp.residual if resp.residual is None else resp.residual.shape}")
            if ok and expect_mock:
                check(
                    f"mock zero residual {size} {cond_type}",
                    bool(np.all(resp.residual == 0.0)),
                    f"max |r| = {np.max(np.abs(resp.residual))}",
                )

            req = _request(REFINE, size, cond_type)
            resp = remote_guidance(req, endpoint, timeout)
            ok = resp.refined is not None and resp.refined.rgb.shape == (size, size, 3)
            check(f"refine dims {size} {cond_type}", ok)
            if ok and expect_mock:
                expected = req.image.rgb.astype(np.float32).astype(np.float64)
                check(
                    f"mock identity refine {size} {cond_type}",
                    bool(np.allclose(resp.refined.rgb, expected, atol=1e-7)),
                    f"max diff {np.max(np.abs(resp.refined.rgb - expected))}",
                )

    # malformed base64 must be rejected with an error naming the field
    body = encode_request(_request(RESIDUAL, 64))
    body["rgb_b64"] = "@@not-base64@@"
    status, reply = _post_raw(endpoint, body, timeout)
    check("malformed base64 rejected", status == 400 and "error" in reply,
          f"status {status} reply {reply}")
    check("malformed base64 names field", "rgb_b64" in str(reply.get("error", "")),
          f"reply {reply}")

    # missing field
    body = encode_request(_request(RESIDUAL, 64))
    del body["timestep"]
    status, reply = _post_raw(endpoint, body, timeout)
    check("missing field rejected", status == 400 and "error" in reply,
          f"status {status} reply {reply}")

    # unknown kind
    body = encode_request(_request(RESIDUAL, 64))
    body["kind"] = "hallucinate"
    status, reply = _post_raw(endpoint, body, timeout)
    check("unknown kind rejected", status == 400 and "error" in reply,
          f"status {status} reply {reply}")

    # non-JSON body
    req = urllib.request.Request(endpoint, data=b"not json",
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=timeout) as reply:
            status = reply.status
    except urllib.error.HTTPError as exc:
        status = exc.code
    check("non-JSON rejected", status == 400, f"status {status}")

    return failures
