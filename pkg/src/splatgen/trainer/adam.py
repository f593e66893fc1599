"""Bias-corrected Adam over plain numpy arrays."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidParameterError

__all__ = ["AdamState", "adam_step"]


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def zeros_like(cls, param: np.ndarray) -> "AdamState":
        return cls(m=np.zeros_like(param), v=np.zeros_like(param))

    def reindex(self, source: np.ndarray, fresh: np.ndarray) -> "AdamState":
        """Remap moment rows after densify/prune.

        source[k] is the old row feeding new row k; rows flagged fresh start
        from zero moments (newly created Gaussians).
        """
        m = self.m[source].copy()
        v = self.v[source].copy()
        m[fresh] = 0.0
        v[fresh] = 0.0
        return AdamState(m=m, v=v, step=self.step)


def adam_step(
    param: np.ndarray,
    grad: np.ndarray,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    name: str = "param",
):
    """One Adam update; returns (new_param, new_state)."""
    if param.shape != grad.shape:
        raise InvalidParameterError(
            f"adam_step({name}): param shape {param.shape} != grad shape {grad.shape}"
        )
    if not np.all(np.isfinite(grad)):
        raise InvalidParameterError(f"adam_step({name}): non-finite gradient")
    t = state.step + 1
    m = beta1 * state.m + (1.0 - beta1) * grad
    v = beta2 * state.v + (1.0 - beta2) * grad * grad
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    new_param = param - lr * m_hat / (np.sqrt(v_hat) + eps)
    return new_param, AdamState(m=m, v=v, step=t)
