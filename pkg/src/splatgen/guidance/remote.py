"""Blocking HTTP client for remote guidance servers."""

from __future__ import annotations

import json
import socket
import urllib.error
import urllib.request

from ..errors import (
    GuidanceProtocolError,
    GuidanceServerError,
    GuidanceTimeoutError,
    GuidanceTransportError,
)
from .types import GuidanceRequest, GuidanceResponse
from .wire import decode_response, encode_request

__all__ = ["RemoteGuidance", "remote_guidance"]

DEFAULT_TIMEOUT = 60.0


def remote_guidance(
    request: GuidanceRequest, endpoint: str, timeout: float = DEFAULT_TIMEOUT
) -> GuidanceResponse:
    """POST the request to ``endpoint`` and parse the reply.

    Raises GuidanceTransportError / GuidanceTimeoutError on connection
    problems, GuidanceServerError when the server reports {"error": ...}
    and GuidanceProtocolError on malformed or dimension-mismatched replies.
    """
    payload = json.dumps(encode_request(request)).encode("utf-8")
    req = urllib.request.Request(
        endpoint, data=payload, headers={"Content-Type": "application/json"}
    )
    try:
        with urllib.request.urlopen(req, timeout=timeout) as reply:
            raw = reply.read()
    except socket.timeout as exc:
        raise GuidanceTimeoutError(f"guidance call to {endpoint} timed out") from exc
    except urllib.error.HTTPError as exc:
        # Server-side rejection; body may carry an {"error": ...} payload.
        try:
            body = json.loads(exc.read().decode("utf-8"))
            message = body.get("error", str(exc))
        except Exception:
            message = str(exc)
        raise GuidanceServerError(f"{endpoint} returned {exc.code}: {message}") from exc
    except urllib.error.URLError as exc:
        if isinstance(exc.reason, socket.timeout):
            raise GuidanceTimeoutError(f"guidance call to {endpoint} timed out") from exc
        raise GuidanceTransportError(f"cannot reach {endpoint}: {exc.reason}") from exc

    try:
        body = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise GuidanceProtocolError(f"non-JSON reply from {endpoint}") from exc
    if not isinstance(body, dict):
        raise GuidanceProtocolError(f"expected a JSON object from {endpoint}")
    return decode_response(
        body, request.kind, request.image.width, request.image.height
    )


class RemoteGuidance:
    """Callable wrapper binding an endpoint and timeout."""

    def __init__(self, endpoint: str, timeout: float = DEFAULT_TIMEOUT):
        self.endpoint = endpoint
        self.timeout = timeout

    def __call__(self, request: GuidanceRequest) -> GuidanceResponse:
        return remote_guidance(request, self.endpoint, self.timeout)
