"""Guidance model backends.

MockModel answers instantly (zero residual, identity refinement) and is
what CI runs against. The diffusion backends wrap 2D priors behind the
same interface: residual requests return (predicted noise - injected
noise) decoded to image space, refine requests perturb the coarse image
at the start timestep and run the scheduler's multi-step denoise. They
need the optional [diffusion] extra plus local model weights and are
loaded lazily.
"""

from __future__ import annotations

import numpy as np

from .wire import DecodedRequest

__all__ = ["ModelError", "MockModel", "NovelViewModel", "TextToImageModel",
           "create_model"]


class ModelError(RuntimeError):
    """Backend failure; maps to HTTP 500."""


class MockModel:
    """Echo backend: zero residual, refinement returns the input image."""

    name = "mock"

    def residual(self, request: DecodedRequest) -> np.ndarray:
        return np.zeros((request.height, request.width, 3))

    def refine(self, request: DecodedRequest) -> np.ndarray:
        return request.rgb


class _DiffusionBase:
    """Shared scaffolding for diffusers-backed priors."""

    def __init__(self, model_id: str, device: str = "cpu",
                 train_timesteps: int = 1000, guidance_scale: float = 7.5):
        self.model_id = model_id
        self.device = device
        self.train_timesteps = train_timesteps
        self.guidance_scale = guidance_scale
        self._pipeline = None

    def scheduler_step(self, timestep: float) -> int:
        """Map the protocol's fractional timestep onto scheduler steps."""
        return max(1, int(round(timestep * (self.train_timesteps - 1))))

    def _load(self):
        if self._pipeline is not None:
            return self._pipeline
        try:
            import torch  # noqa: F401
            from diffusers import DiffusionPipeline
        except ImportError as exc:
            raise ModelError(
                f"backend {self.name!r} needs the [diffusion] extra "
                f"(torch + diffusers): {exc}"
            ) from exc
        try:
            self._pipeline = DiffusionPipeline.from_pretrained(self.model_id)
            self._pipeline.to(self.device)
        except Exception as exc:
            raise ModelError(
                f"cannot load weights for {self.model_id!r}: {exc}"
            ) from exc
        return self._pipeline

    # image <-> model tensor helpers
    @staticmethod
    def _to_tensor(rgb: np.ndarray):
        import torch

        return torch.from_numpy(
            (rgb.astype(np.float32) * 2.0 - 1.0).transpose(2, 0, 1)
        )[None]

    @staticmethod
    def _to_image(tensor) -> np.ndarray:
        arr = tensor[0].detach().cpu().numpy().transpose(1, 2, 0)
        return np.clip((arr + 1.0) / 2.0, 0.0, 1.0).astype(np.float64)


class NovelViewModel(_DiffusionBase):
    """Image-conditioned novel-view prior (relative-pose conditioning)."""

    name = "novel-view"

    def __init__(self, model_id: str = "kxic/zero123-xl", **kw):
        super().__init__(model_id, **kw)

    def residual(self, request: DecodedRequest) -> np.ndarray:
        import torch

        pipe = self._load()
        step = self.scheduler_step(request.timestep)
        image = self._to_tensor(request.rgb).to(self.device)
        noise = torch.randn_like(image)
        t = torch.tensor([step], device=self.device)
        noisy = pipe.scheduler.add_noise(image, noise, t)
        cond = {
            "cond_image": self._to_tensor(request.ref_rgb).to(self.device),
            "delta": request.delta,
        }
        with torch.no_grad():
            predicted = pipe.unet(noisy, t, **cond).sample
        return self._to_image(predicted - noise) * 2.0 - 1.0

    def refine(self, request: DecodedRequest) -> np.ndarray:
        import torch

        pipe = self._load()
        start = self.scheduler_step(request.timestep)
        image = self._to_tensor(request.rgb).to(self.device)
        noise = torch.randn_like(image)
        t = torch.tensor([start], device=self.device)
        noisy = pipe.scheduler.add_noise(image, noise, t)
        with torch.no_grad():
            out = pipe(image=noisy, num_inference_steps=max(10, start // 20)).images
        return np.asarray(out[0], dtype=np.float64) / 255.0


class TextToImageModel(_DiffusionBase):
    """Prompt-conditioned prior (latent text-to-image model)."""

    name = "text-to-image"

    def __init__(self, model_id: str = "runwayml/stable-diffusion-v1-5", **kw):
        super().__init__(model_id, **kw)

    def residual(self, request: DecodedRequest) -> np.ndarray:
        import torch

        pipe = self._load()
        step = self.scheduler_step(request.timestep)
        image = self._to_tensor(request.rgb).to(self.device)
        with torch.no_grad():
            latents = pipe.vae.encode(image).latent_dist.sample()
            latents = latents * pipe.vae.config.scaling_factor
            noise = torch.randn_like(latents)
            t = torch.tensor([step], device=self.device)
            noisy = pipe.scheduler.add_noise(latents, noise, t)
            embeds = pipe._encode_prompt(
                request.prompt, self.device, 1, True, ""
            )
            pred = pipe.unet(
                torch.cat([noisy] * 2), t, encoder_hidden_states=embeds
            ).sample
            uncond, cond = pred.chunk(2)
            pred = uncond + self.guidance_scale * (cond - uncond)
            # decode the noise residual back to image space so the client
            # never sees latents
            delta = (pred - noise) / pipe.vae.config.scaling_factor
            decoded = pipe.vae.decode(delta).sample
        return self._to_image(decoded) * 2.0 - 1.0

    def refine(self, request: DecodedRequest) -> np.ndarray:
        pipe = self._load()
        start_fraction = request.timestep
        import torch

        with torch.no_grad():
            out = pipe(
                prompt=request.prompt,
                image=self._to_tensor(request.rgb),
                strength=start_fraction,
                guidance_scale=self.guidance_scale,
            ).images
        return np.asarray(out[0], dtype=np.float64) / 255.0


_MODELS = {
    "mock": MockModel,
    "novel-view": NovelViewModel,
    "text-to-image": TextToImageModel,
}


def create_model(name: str, **kwargs):
    if name not in _MODELS:
        raise ModelError(
            f"unknown model {name!r}; choose from {sorted(_MODELS)}"
        )
    if name == "mock":
        return MockModel()
    return _MODELS[name](**kwargs)
