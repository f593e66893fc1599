"""HTTP guidance server.

POST /guidance with the wire-protocol JSON body; replies
{"residual_b64"} / {"refined_b64"}, 400 {"error"} on protocol
violations, 500 {"error"} on backend failures. One request at a time is
fine; clients serialize their calls.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from .models import ModelError, create_model
from .wire import RESIDUAL, ProtocolError, decode_request, encode_plane

__all__ = ["BridgeConfig", "BridgeServer", "serve"]

MAX_SIDE = 1024  # dimension guarantee from the protocol contract


@dataclass
class BridgeConfig:
    model: str = "mock"
    device: str = "cpu"
    host: str = "127.0.0.1"
    port: int = 8040
    train_timesteps: int = 1000  # fractional t maps onto this many steps
    guidance_scale: float = 7.5
    model_kwargs: dict = field(default_factory=dict)


def _make_handler(backend):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, *args):
            pass

        def _reply(self, status, body):
            payload = json.dumps(body).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def do_POST(self):
            if self.path != "/guidance":
                self._reply(404, {"error": f"unknown path {self.path}"})
                return
            try:
                length = int(self.headers.get("Content-Length", "0"))
                body = json.loads(self.rfile.read(length).decode("utf-8"))
            except (ValueError, UnicodeDecodeError) as exc:
                self._reply(400, {"error": f"request is not valid JSON: {exc}"})
                return
            try:
                request = decode_request(body)
                if max(request.width, request.height) > MAX_SIDE:
                    raise ProtocolError(
                        f"image larger than {MAX_SIDE} per side not supported"
                    )
            except ProtocolError as exc:
                self._reply(400, {"error": str(exc)})
                return
            try:
                if request.kind == RESIDUAL:
                    plane = backend.residual(request)
                    key = "residual_b64"
                else:
                    plane = backend.refine(request)
                    key = "refined_b64"
                plane = np.asarray(plane, dtype=np.float64)
                if plane.shape != (request.height, request.width, 3):
                    raise ModelError(
                        f"backend produced shape {plane.shape}, expected "
                        f"{(request.height, request.width, 3)}"
                    )
            except ModelError as exc:
                self._reply(500, {"error": str(exc)})
                return
            except Exception as exc:  # backend blew up: surface, don't die
                self._reply(500, {"error": f"backend failure: {exc}"})
                return
            self._reply(200, {key: encode_plane(plane)})

    return Handler


class BridgeServer:
    """Embeddable server; use serve() for the blocking CLI entry point."""

    def __init__(self, config: BridgeConfig):
        self.config = config
        self.backend = create_model(
            config.model,
            **(
                {}
                if config.model == "mock"
                else dict(
                    device=config.device,
                    train_timesteps=config.train_timesteps,
                    guidance_scale=config.guidance_scale,
                    **config.model_kwargs,
                )
            ),
        )
        self._httpd = ThreadingHTTPServer(
            (config.host, config.port), _make_handler(self.backend)
        )
        self._thread = None

    @property
    def endpoint(self) -> str:
        host, port = self._httpd.server_address
        return f"http://{host}:{port}/guidance"

    def start(self):
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, daemon=True
        )
        self._thread.start()
        return self

    def stop(self):
        self._httpd.shutdown()
        self._httpd.server_close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()
        return False

    def serve_forever(self):
        self._httpd.serve_forever()


def serve(config: BridgeConfig):
    """Blocking entry point; loads the backend eagerly so missing weights
    fail at startup, not on the first request."""
    server = BridgeServer(config)
    if config.model != "mock":
        server.backend._load()  # fail fast without weights
    print(f"gsbridge: {config.model} backend listening on {server.endpoint}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.stop()
