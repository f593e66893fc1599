"""Gaussian covariance construction and cloud initialization."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidParameterError
from .types import GaussianCloud

__all__ = [
    "normalize_quaternion",
    "quat_to_rotmat",
    "covariance_from",
    "init_cloud",
    "INIT_OPACITY",
    "INIT_COLOR",
    "INIT_SCALE_MIN",
    "INIT_SCALE_MAX",
]

INIT_OPACITY = 0.1
INIT_COLOR = (0.5, 0.5, 0.5)
# Initial isotropic stddev radius / cbrt(count), clamped so the starting
# support roughly tiles the init ball without exceeding the prune ceiling.
INIT_SCALE_MIN = 1e-3
INIT_SCALE_MAX = 0.05


def normalize_quaternion(q: np.ndarray) -> np.ndarray:
    """Return q scaled to unit norm (scalar-first layout).

    Idempotent bit-exactly: inputs already within 1e-12 of unit norm are
    returned unchanged, so normalizing twice equals normalizing once.
    """
    q = np.asarray(q, dtype=np.float64)
    n2 = np.sum(q * q, axis=-1, keepdims=True)
    if np.any(n2 == 0.0) or not np.all(np.isfinite(n2)):
        raise InvalidParameterError("cannot normalize zero or non-finite quaternion")
    out = np.where(np.abs(n2 - 1.0) < 1e-12, q, q / np.sqrt(n2))
    return out


def quat_to_rotmat(q: np.ndarray) -> np.ndarray:
    """Rotation matrices for scalar-first unit quaternions, shape (..., 3, 3)."""
    q = np.asarray(q, dtype=np.float64)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    rot = np.empty(q.shape[:-1] + (3, 3), dtype=np.float64)
    rot[..., 0, 0] = 1.0 - 2.0 * (y * y + z * z)
    rot[..., 0, 1] = 2.0 * (x * y - w * z)
    rot[..., 0, 2] = 2.0 * (x * z + w * y)
    rot[..., 1, 0] = 2.0 * (x * y + w * z)
    rot[..., 1, 1] = 1.0 - 2.0 * (x * x + z * z)
    rot[..., 1, 2] = 2.0 * (y * z - w * x)
    rot[..., 2, 0] = 2.0 * (x * z - w * y)
    rot[..., 2, 1] = 2.0 * (y * z + w * x)
    rot[..., 2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return rot


def covariance_from(scale: np.ndarray, rotation: np.ndarray) -> np.ndarray:
    """World covariance R diag(s^2) R^T from per-axis stddevs and a quaternion.

    Broadcasts over leading axes: scale (..., 3), rotation (..., 4) give
    (..., 3, 3). Eigenvalues equal the squared scales.
    """
    scale = np.asarray(scale, dtype=np.float64)
    rotation = np.asarray(rotation, dtype=np.float64)
    if not np.all(np.isfinite(scale)) or not np.all(np.isfinite(rotation)):
        raise InvalidParameterError("covariance_from: non-finite scale or rotation")
    if np.any(scale <= 0.0):
        raise InvalidParameterError("covariance_from: scale components must be > 0")
    rot = quat_to_rotmat(normalize_quaternion(rotation))
    rs = rot * (scale[..., None, :] ** 2)  # R @ diag(s^2)
    return rs @ np.swapaxes(rot, -1, -2)


def init_cloud(count: int, radius: float, seed: int = 0) -> GaussianCloud:
    """Random cloud: centers uniform in the ball, identity rotations,
    opacity 0.1, grey color, one isotropic scale for all Gaussians.

    Deterministic for a fixed seed.
    """
    if count < 1:
        raise InvalidParameterError(f"init_cloud: count must be >= 1, got {count}")
    if radius < 0.0:
        raise InvalidParameterError(f"init_cloud: radius must be >= 0, got {radius}")
    rng = np.random.default_rng(seed)
    # Uniform in the ball: isotropic direction times cbrt-distributed radius.
    direction = rng.normal(size=(count, 3))
    norms = np.linalg.norm(direction, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    direction /= norms
    r = radius * rng.random(count) ** (1.0 / 3.0)
    centers = direction * r[:, None]

    sigma = float(np.clip(radius / count ** (1.0 / 3.0), INIT_SCALE_MIN, INIT_SCALE_MAX))
    scales = np.full((count, 3), sigma)
    rotations = np.zeros((count, 4))
    rotations[:, 0] = 1.0
    opacities = np.full(count, INIT_OPACITY)
    colors = np.full((count, 3), np.asarray(INIT_COLOR))
    return GaussianCloud(centers, scales, rotations, opacities, colors)
