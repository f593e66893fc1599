"""Reference-view RGBA loss and image resampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core.types import Camera, ImageBuffer
from ..errors import InvalidParameterError

__all__ = ["ReferenceInput", "reference_loss", "resize_bilinear"]


@dataclass
class ReferenceInput:
    """Pre-matted RGBA input plus the camera it was captured from.

    The alpha plane is the foreground mask; the image must be square.
    """

    image: ImageBuffer
    camera: Camera

    def __post_init__(self):
        if self.image.width != self.image.height:
            raise InvalidParameterError(
                f"reference image must be square, got {self.image.width}x{self.image.height}"
            )

    @property
    def elevation(self) -> float:
        return self.camera.elevation


def resize_bilinear(arr: np.ndarray, height: int, width: int) -> np.ndarray:
    """Bilinear resample with half-pixel centers; works on (H,W) and (H,W,C)."""
    src_h, src_w = arr.shape[:2]
    if (src_h, src_w) == (height, width):
        return arr.copy()
    ys = (np.arange(height) + 0.5) * (src_h / height) - 0.5
    xs = (np.arange(width) + 0.5) * (src_w / width) - 0.5
    y0 = np.clip(np.floor(ys).astype(int), 0, src_h - 1)
    x0 = np.clip(np.floor(xs).astype(int), 0, src_w - 1)
    y1 = np.clip(y0 + 1, 0, src_h - 1)
    x1 = np.clip(x0 + 1, 0, src_w - 1)
    wy = np.clip(ys - y0, 0.0, 1.0)
    wx = np.clip(xs - x0, 0.0, 1.0)
    if arr.ndim == 3:
        wy_ = wy[:, None, None]
        wx_ = wx[None, :, None]
    else:
        wy_ = wy[:, None]
        wx_ = wx[None, :]
    top = arr[y0][:, x0] * (1 - wx_) + arr[y0][:, x1] * wx_
    bot = arr[y1][:, x0] * (1 - wx_) + arr[y1][:, x1] * wx_
    return top * (1 - wy_) + bot * wy_


def reference_loss(
    rendered: ImageBuffer,
    reference: ReferenceInput,
    lambda_rgb: float,
    lambda_alpha: float,
    background=(1.0, 1.0, 1.0),
):
    """Weighted RGBA MSE against the reference view.

    The reference RGB is composited over the render's background using the
    foreground mask before comparison (the input is pre-matted). Both terms
    are mean squared error over pixels. Returns
    (loss, g_rgb, g_alpha, rgb_term, alpha_term) where the gradient images
    feed the renderer backward pass and the *_term values are the
    unweighted MSEs.
    """
    h, w = rendered.height, rendered.width
    ref_rgb = resize_bilinear(reference.image.rgb, h, w)
    ref_alpha = resize_bilinear(reference.image.alpha, h, w)
    if ref_rgb.shape != (h, w, 3) or ref_alpha.shape != (h, w):
        raise InvalidParameterError("reference resampling produced a size mismatch")
    bg = np.asarray(background, dtype=np.float64).reshape(3)
    target_rgb = ref_rgb * ref_alpha[:, :, None] + bg * (1.0 - ref_alpha[:, :, None])

    n_px = h * w
    diff_rgb = rendered.rgb - target_rgb
    diff_alpha = rendered.alpha - ref_alpha
    rgb_term = float(np.sum(diff_rgb**2) / n_px)
    alpha_term = float(np.sum(diff_alpha**2) / n_px)
    loss = lambda_rgb * rgb_term + lambda_alpha * alpha_term
    g_rgb = (2.0 * lambda_rgb / n_px) * diff_rgb
    g_alpha = (2.0 * lambda_alpha / n_px) * diff_alpha
    return loss, g_rgb, g_alpha, rgb_term, alpha_term
