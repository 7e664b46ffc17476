"""Adversary loss functions on a predicted belief ``P(Y=1 | x_hat)``.

Each loss returns per-example values; ``*_grad`` returns the derivative with
respect to the belief. Beliefs are clipped to ``[CLIP, 1 - CLIP]`` first and
the derivative is zero where clipping is active.
"""

from __future__ import annotations

import numpy as np

from ..probability import ValidationError

CLIP = 1e-7


def clip_belief(belief):
    return np.clip(belief, CLIP, 1.0 - CLIP)


def _active(belief):
    b = np.asarray(belief, dtype=float)
    return (b > CLIP) & (b < 1.0 - CLIP)


def cross_entropy_loss(belief, y):
    b = clip_belief(np.asarray(belief, dtype=float))
    y = np.asarray(y, dtype=float)
    return -(y * np.log(b) + (1.0 - y) * np.log1p(-b))


def cross_entropy_grad(belief, y):
    b = clip_belief(np.asarray(belief, dtype=float))
    y = np.asarray(y, dtype=float)
    return np.where(_active(belief), (b - y) / (b * (1.0 - b)), 0.0)


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not alpha > 1.0:
        raise ValidationError(f"alpha-loss needs alpha > 1, got {alpha!r}; use log-loss for alpha = 1")
    return alpha


def alpha_loss(belief, y, alpha: float):
    """Tunable loss: tends to log-loss as ``alpha -> 1`` and to 0-1 loss as ``alpha -> inf``."""
    alpha = _check_alpha(alpha)
    b = clip_belief(np.asarray(belief, dtype=float))
    y = np.asarray(y, dtype=float)
    k = 1.0 - 1.0 / alpha
    return (alpha / (alpha - 1.0)) * (y * (1.0 - b**k) + (1.0 - y) * (1.0 - (1.0 - b) ** k))


def alpha_loss_grad(belief, y, alpha: float):
    alpha = _check_alpha(alpha)
    b = clip_belief(np.asarray(belief, dtype=float))
    y = np.asarray(y, dtype=float)
    g = -y * b ** (-1.0 / alpha) + (1.0 - y) * (1.0 - b) ** (-1.0 / alpha)
    return np.where(_active(belief), g, 0.0)


def loss_and_grad(belief, y, loss: str = "xe", alpha: float | None = None):
    """Dispatch on ``loss`` in {"xe", "alpha"}; returns ``(values, d values / d belief)``."""
    if loss == "xe":
        return cross_entropy_loss(belief, y), cross_entropy_grad(belief, y)
    if loss == "alpha":
        if alpha is None:
            raise ValidationError("alpha-loss requires alpha")
        return alpha_loss(belief, y, alpha), alpha_loss_grad(belief, y, alpha)
    raise ValidationError(f"unknown loss {loss!r}")
