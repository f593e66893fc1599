"""Stage-2 UV texture refinement.

Each step renders the textured mesh from a random orbit view at a random
resolution in [128, 1024], asks the guidance to refine it (multi-step
denoise from the fixed start noise level), and optimizes the texels with
Adam under the pixel-wise MSE between the refined and coarse images. In
image mode the reference-view RGBA loss is kept. Gradients only ever
land on texels inside chart rectangles, so gutters and unused texture
area keep their fill values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core.types import TextureImage, TriangleMesh
from ..errors import GuidanceError
from ..guidance.types import REFINE, GuidanceRequest, ImageConditioning, TextConditioning
from ..trainer.config import TrainConfig
from ..trainer.losses import ReferenceInput, reference_loss, resize_bilinear
from ..trainer.sampling import sample_camera
from .atlas import UVAtlas
from .bake import NORMAL_CUTOFF, _facing
from .meshrender import rasterize_mesh, render_mesh, texture_gradient

__all__ = ["RefineResult", "refine_texture"]

MESH_RES_RANGE = (128, 1024)
DEFAULT_STEPS = 50
DEFAULT_T_START = 0.5
DEFAULT_LR = 0.2


@dataclass
class RefineResult:
    texture: TextureImage
    trace: np.ndarray  # per-step MSE loss


def refine_texture(
    mesh: TriangleMesh,
    atlas: UVAtlas,
    texture: TextureImage,
    guidance,
    steps: int = DEFAULT_STEPS,
    t_start: float = DEFAULT_T_START,
    lr: float = DEFAULT_LR,
    config: TrainConfig | None = None,
    reference: ReferenceInput | None = None,
    prompt: str | None = None,
    seed: int = 0,
    background=(1.0, 1.0, 1.0),
) -> RefineResult:
    """Refine the baked texture in place of the diffusion fine-tuning stage.

    The background is fixed (white by default): the published recipe randomizes
    backgrounds only for the splat-training stage, and alternating backgrounds
    here would make silhouette-adjacent texels chase contradictory targets.
    Pass background=None to fall back to the stage-1 white/black coin.
    """
    cfg = config if config is not None else TrainConfig(
        mode="image" if reference is not None else "text", steps=max(steps, 1)
    )
    rng = np.random.default_rng(seed)
    tex = texture.copy()
    # Sparse Adam with per-texel step counts: each view only touches part of
    # the texture, and bias-correcting a freshly touched texel against the
    # global step count would multiply its first update by ~1/sqrt(1-beta2)
    # (a 3x overshoot). Moments and counts advance only on touched texels.
    adam_m = np.zeros_like(tex.rgb)
    adam_v = np.zeros_like(tex.rgb)
    adam_t = np.zeros(tex.rgb.shape[:2] + (1,))
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    update_mask = atlas.chart_mask()
    trace = []
    ref_elev = reference.elevation if reference is not None else None

    for step in range(steps):
        res = int(rng.integers(MESH_RES_RANGE[0], MESH_RES_RANGE[1] + 1))
        camera, coin_background = sample_camera(cfg, rng, ref_elev, resolution=res)
        step_background = coin_background if background is None else background
        raster = rasterize_mesh(mesh, camera)
        coarse = render_mesh(mesh, atlas, tex, camera, step_background, raster=raster)

        if reference is not None:
            conditioning = ImageConditioning(
                ref_rgb=resize_bilinear(reference.image.rgb, res, res),
                delta=reference.camera.delta_to(camera),
            )
        else:
            conditioning = TextConditioning(prompt=prompt or "")
        request = GuidanceRequest(
            kind=REFINE, image=coarse, camera=camera, timestep=t_start,
            conditioning=conditioning, background=step_background,
        )
        try:
            response = guidance(request)
        except GuidanceError as exc:
            raise type(exc)(f"guidance failed at refine step {step}: {exc}") from exc
        except Exception as exc:
            raise GuidanceError(f"guidance failed at refine step {step}: {exc}") from exc
        refined = response.refined
        if refined is None or refined.rgb.shape != coarse.rgb.shape:
            raise GuidanceError(f"guidance returned no/ill-shaped refinement at step {step}")

        n_px = res * res
        diff = coarse.rgb - refined.rgb
        loss = float(np.sum(diff**2) / n_px)
        g_rgb = (2.0 / n_px) * diff
        # Exclude grazing pixels, mirroring the back-projection rule: a texel
        # on the silhouette limb of some view would otherwise be dragged
        # toward background-mixed colors by that view and fight its interior
        # views. Weight = facing cosine, zero under the cutoff.
        facing = _facing(mesh, camera, raster.face_id)
        weight = np.where(facing >= NORMAL_CUTOFF, facing, 0.0)
        g_rgb = g_rgb * weight[:, :, None]
        grad, touched = texture_gradient(mesh, atlas, tex, camera, g_rgb, raster=raster)

        if reference is not None:
            ref_cam = reference.camera.at_resolution(res, res)
            ref_raster = rasterize_mesh(mesh, ref_cam)
            ref_img = render_mesh(mesh, atlas, tex, ref_cam, step_background,
                                  raster=ref_raster)
            ref_loss, gr, _, *_ = reference_loss(
                ref_img, reference, cfg.lambda_rgb(min(step, cfg.steps - 1)),
                cfg.lambda_alpha(min(step, cfg.steps - 1)), step_background,
            )
            g2, t2 = texture_gradient(mesh, atlas, tex, ref_cam, gr, raster=ref_raster)
            grad += g2
            touched |= t2
            loss += ref_loss

        touched &= update_mask
        upd = touched[:, :, None]
        grad = np.where(upd, grad, 0.0)
        if not np.all(np.isfinite(grad)):
            raise GuidanceError(f"non-finite texture gradient at step {step}")
        adam_m = np.where(upd, beta1 * adam_m + (1 - beta1) * grad, adam_m)
        adam_v = np.where(upd, beta2 * adam_v + (1 - beta2) * grad * grad, adam_v)
        adam_t = adam_t + touched[:, :, None]
        t_safe = np.maximum(adam_t, 1.0)
        m_hat = adam_m / (1.0 - beta1**t_safe)
        v_hat = adam_v / (1.0 - beta2**t_safe)
        delta = lr * m_hat / (np.sqrt(v_hat) + eps)
        tex.rgb = np.clip(np.where(upd, tex.rgb - delta, tex.rgb), 0.0, 1.0)
        tex.valid = tex.valid | touched
        trace.append(loss)

    return RefineResult(texture=tex, trace=np.asarray(trace))
