from .types import (
    REFINE,
    RESIDUAL,
    GuidanceRequest,
    GuidanceResponse,
    ImageConditioning,
    TextConditioning,
)
from .oracle import (
    IdentityRefiner,
    OracleGuidance,
    ZeroGuidance,
    oracle_refine,
    oracle_residual,
)
from .remote import RemoteGuidance, remote_guidance
from . import wire

__all__ = [
    "REFINE",
    "RESIDUAL",
    "GuidanceRequest",
    "GuidanceResponse",
    "ImageConditioning",
    "TextConditioning",
    "IdentityRefiner",
    "OracleGuidance",
    "ZeroGuidance",
    "oracle_refine",
    "oracle_residual",
    "RemoteGuidance",
    "remote_guidance",
    "wire",
]
