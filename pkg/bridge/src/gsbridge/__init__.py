"""Guidance bridge: HTTP server exposing 2D diffusion priors (or a mock)
behind the splat-trainer guidance wire protocol."""

__version__ = "0.1.0"

from .models import MockModel, ModelError, create_model
from .server import BridgeConfig, BridgeServer, serve

__all__ = [
    "__version__",
    "MockModel",
    "ModelError",
    "create_model",
    "BridgeConfig",
    "BridgeServer",
    "serve",
]
