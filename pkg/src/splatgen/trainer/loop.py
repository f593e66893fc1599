"""Stage-1 optimization: guided splat fitting with periodic densification.

Each step samples an orbit camera, renders at the scheduled resolution,
asks the guidance for a residual at the annealed timestep, injects it as
the upstream image gradient (the score-distillation pathway), adds the
reference-view RGBA gradients in image mode, and applies per-group Adam
updates in unconstrained space (log scale, logit opacity, raw
quaternion, clamped color). Densify/prune events run on a fixed
interval; everything is deterministic for a fixed seed and deterministic
guidance.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass

import numpy as np

from ..core.gaussians import init_cloud, normalize_quaternion
from ..core.types import GaussianCloud
from ..errors import GuidanceError, SplatgenError
from ..guidance.types import (
    RESIDUAL,
    GuidanceRequest,
    ImageConditioning,
    TextConditioning,
)
from ..renderer import render, render_backward
from .adam import AdamState, adam_step
from .config import IMAGE_MODE, TrainConfig
from .densify import DensifyReport, DensifyThresholds, densify_and_prune
from .losses import ReferenceInput, reference_loss, resize_bilinear
from .sampling import sample_camera

__all__ = ["TrainResult", "train_stage1"]

_OPACITY_EPS = 1e-4   # keep logits finite
_SCALE_LOG_MIN = math.log(1e-8)
_SCALE_LOG_MAX = math.log(1e2)

TRACE_COLUMNS = ("step", "sds_norm", "ref_rgb", "ref_alpha", "count")


@dataclass
class TrainResult:
    cloud: GaussianCloud
    trace: dict                      # column name -> np.ndarray over steps
    events: list                     # (step, DensifyReport) per densify/prune
    elapsed: float = 0.0

    def write_trace_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_COLUMNS)
            for k in range(len(self.trace["step"])):
                writer.writerow(
                    [
                        int(self.trace["step"][k]),
                        f"{self.trace['sds_norm'][k]:.9g}",
                        f"{self.trace['ref_rgb'][k]:.9g}",
                        f"{self.trace['ref_alpha'][k]:.9g}",
                        int(self.trace["count"][k]),
                    ]
                )


class _RawParams:
    """Unconstrained optimization view of a cloud."""

    __slots__ = ("center", "log_scale", "quat", "logit_opacity", "color")

    def __init__(self, cloud: GaussianCloud):
        self.center = cloud.centers.copy()
        self.log_scale = np.log(np.clip(cloud.scales, 1e-8, None))
        self.quat = cloud.rotations.copy()
        op = np.clip(cloud.opacities, _OPACITY_EPS, 1.0 - _OPACITY_EPS)
        self.logit_opacity = np.log(op / (1.0 - op))
        self.color = np.clip(cloud.colors, 0.0, 1.0)

    def activate(self) -> GaussianCloud:
        return GaussianCloud(
            centers=self.center.copy(),
            scales=np.exp(self.log_scale),
            rotations=normalize_quaternion(self.quat),
            opacities=1.0 / (1.0 + np.exp(-self.logit_opacity)),
            colors=np.clip(self.color, 0.0, 1.0),
        )


def _conditioning(config: TrainConfig, reference, camera, prompt):
    if config.mode == IMAGE_MODE:
        delta = reference.camera.delta_to(camera)
        # the wire protocol carries the reference plane at the request size
        ref_rgb = resize_bilinear(reference.image.rgb, camera.height, camera.width)
        return ImageConditioning(ref_rgb=ref_rgb, delta=delta)
    return TextConditioning(prompt=prompt or "")


def train_stage1(
    config: TrainConfig,
    guidance,
    reference: ReferenceInput | None = None,
    prompt: str | None = None,
    initial_cloud: GaussianCloud | None = None,
    checkpoint_every: int | None = None,
    checkpoint_fn=None,
) -> TrainResult:
    """Run the stage-1 loop and return the optimized cloud plus traces.

    guidance is any callable GuidanceRequest -> GuidanceResponse. reference
    is required in image mode. checkpoint_fn(step, cloud) fires every
    checkpoint_every steps when both are given.
    """
    if guidance is None:
        raise SplatgenError("train_stage1 requires a guidance callable")
    if config.mode == IMAGE_MODE and reference is None:
        raise SplatgenError("image mode requires a reference input")

    rng = np.random.default_rng(config.seed)
    cloud0 = initial_cloud if initial_cloud is not None else init_cloud(
        config.init_count, config.init_radius, seed=config.seed
    )
    raw = _RawParams(cloud0)
    states = {
        "center": AdamState.zeros_like(raw.center),
        "scale": AdamState.zeros_like(raw.log_scale),
        "rotation": AdamState.zeros_like(raw.quat),
        "opacity": AdamState.zeros_like(raw.logit_opacity),
        "color": AdamState.zeros_like(raw.color),
    }
    grad_accum = np.zeros(len(cloud0))
    grad_count = np.zeros(len(cloud0), dtype=np.int64)

    ref_elevation = reference.elevation if reference is not None else None
    thresholds = DensifyThresholds(
        grad_threshold=config.densify_grad_threshold,
        densify_max_scale=config.densify_max_scale,
        prune_opacity=config.prune_opacity,
        prune_max_scale=config.prune_max_scale,
    )

    columns = {
        "step": [], "sds_norm": [], "ref_rgb": [], "ref_alpha": [], "count": [],
        "resolution": [], "timestep": [], "lambda_rgb": [], "lambda_alpha": [],
    }
    events: list[tuple[int, DensifyReport]] = []
    t0 = time.perf_counter()

    for step in range(config.steps):
        res = config.resolution(step)
        camera, background = sample_camera(config, rng, ref_elevation, resolution=res)
        cloud = raw.activate()

        image = render(cloud, camera, background)
        request = GuidanceRequest(
            kind=RESIDUAL,
            image=image,
            camera=camera,
            timestep=config.timestep(step),
            conditioning=_conditioning(config, reference, camera, prompt),
            background=background,
        )
        try:
            response = guidance(request)
        except GuidanceError as exc:
            # keep the transport/protocol subtype for caller exit codes
            raise type(exc)(f"guidance failed at step {step}: {exc}") from exc
        except Exception as exc:
            raise GuidanceError(f"guidance failed at step {step}: {exc}") from exc
        residual = response.residual
        if residual is None or residual.shape != (res, res, 3):
            raise GuidanceError(
                f"guidance returned no/ill-shaped residual at step {step}"
            )

        g_rgb = config.sds_weight * residual
        bundle = render_backward(cloud, camera, background, g_rgb)
        sds_norm = float(np.sqrt(np.mean(residual**2)))

        ref_rgb_term = 0.0
        ref_alpha_term = 0.0
        if config.mode == IMAGE_MODE:
            ref_camera = reference.camera.at_resolution(res, res)
            ref_render = render(cloud, ref_camera, background)
            _, gr, ga, ref_rgb_term, ref_alpha_term = reference_loss(
                ref_render, reference,
                config.lambda_rgb(step), config.lambda_alpha(step), background,
            )
            bundle = bundle + render_backward(cloud, ref_camera, background, gr, ga)

        grad_accum += bundle.pos_grad_norm
        grad_count += bundle.seen

        # chain activated-space gradients to the unconstrained parameters
        sig = np.exp(raw.log_scale)
        op = 1.0 / (1.0 + np.exp(-raw.logit_opacity))
        quat_norm = np.linalg.norm(raw.quat, axis=1, keepdims=True)
        grads = {
            "center": bundle.centers,
            "scale": bundle.scales * sig,
            "rotation": bundle.rotations / quat_norm,
            "opacity": bundle.opacities * op * (1.0 - op),
            "color": bundle.colors,
        }
        lrs = {
            "center": config.lr_center(step),
            "scale": config.lr_scale,
            "rotation": config.lr_rotation,
            "opacity": config.lr_opacity,
            "color": config.lr_color,
        }
        raw.center, states["center"] = adam_step(
            raw.center, grads["center"], states["center"], lrs["center"], name="center")
        raw.log_scale, states["scale"] = adam_step(
            raw.log_scale, grads["scale"], states["scale"], lrs["scale"], name="scale")
        raw.quat, states["rotation"] = adam_step(
            raw.quat, grads["rotation"], states["rotation"], lrs["rotation"], name="rotation")
        raw.logit_opacity, states["opacity"] = adam_step(
            raw.logit_opacity, grads["opacity"], states["opacity"], lrs["opacity"], name="opacity")
        raw.color, states["color"] = adam_step(
            raw.color, grads["color"], states["color"], lrs["color"], name="color")
        raw.log_scale = np.clip(raw.log_scale, _SCALE_LOG_MIN, _SCALE_LOG_MAX)
        raw.color = np.clip(raw.color, 0.0, 1.0)

        if not (
            math.isfinite(sds_norm)
            and np.all(np.isfinite(raw.center))
            and np.all(np.isfinite(raw.quat))
        ):
            raise SplatgenError(f"non-finite state at step {step}, aborting")

        columns["step"].append(step)
        columns["sds_norm"].append(sds_norm)
        columns["ref_rgb"].append(ref_rgb_term)
        columns["ref_alpha"].append(ref_alpha_term)
        columns["count"].append(len(raw.center))
        columns["resolution"].append(res)
        columns["timestep"].append(config.timestep(step))
        columns["lambda_rgb"].append(config.lambda_rgb(step))
        columns["lambda_alpha"].append(config.lambda_alpha(step))

        if (step + 1) % config.densify_interval == 0:
            cloud = raw.activate()
            cloud.grad_accum = grad_accum
            cloud.grad_count = grad_count
            cloud, report = densify_and_prune(cloud, thresholds, rng)
            events.append((step, report))
            raw = _RawParams(cloud)
            for key in states:
                states[key] = states[key].reindex(report.source, report.fresh)
            grad_accum = np.zeros(len(cloud))
            grad_count = np.zeros(len(cloud), dtype=np.int64)

        if checkpoint_every and checkpoint_fn and (step + 1) % checkpoint_every == 0:
            checkpoint_fn(step, raw.activate())

    final = raw.activate()
    final.grad_accum = grad_accum.copy()
    final.grad_count = grad_count.copy()
    trace = {k: np.asarray(v) for k, v in columns.items()}
    return TrainResult(
        cloud=final, trace=trace, events=events,
        elapsed=time.perf_counter() - t0,
    )
