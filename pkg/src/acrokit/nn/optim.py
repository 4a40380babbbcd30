"""Adam updates over Parameter tensors."""

from __future__ import annotations

import numpy as np

from .autodiff import Parameter


def adam_step(params: list[Parameter], lr: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> None:
    """Apply one bias-corrected Adam update in place.

    Parameters with no gradient are treated as having a zero gradient, so a
    loss that never touched them leaves their values unchanged.
    """
    for p in params:
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        p.step += 1
        p.m = beta1 * p.m + (1.0 - beta1) * g
        p.v = beta2 * p.v + (1.0 - beta2) * (g * g)
        m_hat = p.m / (1.0 - beta1 ** p.step)
        v_hat = p.v / (1.0 - beta2 ** p.step)
        p.data -= lr * m_hat / (np.sqrt(v_hat) + eps)
