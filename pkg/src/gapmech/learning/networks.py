"""Privatizer and adversary models with hand-derived gradients.

Binary model: the privatizer is the stay-probability vector itself and the
adversary is ``(a0, a1) = (P(Y=0|X_hat=0), P(Y=1|X_hat=1))``.

Gaussian model: the privatizer is ``(beta0, beta1, gamma0_raw, gamma1_raw)``
with ``gamma = raw**2``; the adversary is a 1-16-8-1 leaky-ReLU MLP with a
sigmoid output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .losses import loss_and_grad

LEAKY_SLOPE = 0.2
HIDDEN = (16, 8)


# --- binary ------------------------------------------------------------------

def stay_for_rows(s: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-row stay probability; ``s`` has 4 entries (s00, s01, s10, s11) or 2 (s0, s1)."""
    x = np.asarray(x, dtype=int)
    if s.size == 4:
        return s[2 * x + np.asarray(y, dtype=int)]
    return s[x]


def cell_index(n_params: int, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=int)
    return 2 * x + np.asarray(y, dtype=int) if n_params == 4 else x


def release_one_prob(s: np.ndarray, x, y) -> np.ndarray:
    """``P(X_hat = 1 | x, y)``."""
    stay = stay_for_rows(s, x, y)
    return np.where(np.asarray(x) == 1, stay, 1.0 - stay)


def binary_belief(x, y, s: np.ndarray, a: np.ndarray) -> np.ndarray:
    """Adversary belief that ``Y=1``, averaged over the mechanism's randomness.

    ``a1 * P(X_hat=1) + (1 - a0) * P(X_hat=0)``.
    """
    pi1 = release_one_prob(np.asarray(s, dtype=float), x, y)
    return a[1] * pi1 + (1.0 - a[0]) * (1.0 - pi1)


def binary_belief_grads(x, y, s: np.ndarray, a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-row derivatives of :func:`binary_belief` w.r.t. the row's stay probability and ``a``.

    Returns ``(d_belief/d_stay, d_belief/d_a)`` with shapes ``(n,)`` and ``(n, 2)``.
    """
    x = np.asarray(x)
    pi1 = release_one_prob(np.asarray(s, dtype=float), x, y)
    dpi_dstay = np.where(x == 1, 1.0, -1.0)
    d_stay = (a[1] - (1.0 - a[0])) * dpi_dstay
    d_a = np.stack([-(1.0 - pi1), pi1], axis=1)
    return d_stay, d_a


def binary_expected_loss(x, y, s, a, loss="xe", alpha=None):
    """Adversary loss averaged over ``X_hat``, with per-row gradients.

    Returns ``(loss_rows, d/d_stay rows, d/d_a rows)``; the adversary that
    minimises this is the true posterior ``P(Y=1 | X_hat)``.
    """
    x = np.asarray(x)
    y = np.asarray(y, dtype=float)
    pi1 = release_one_prob(np.asarray(s, dtype=float), x, y)
    l1, g1 = loss_and_grad(np.full(y.shape, a[1]), y, loss, alpha)
    l0, g0 = loss_and_grad(np.full(y.shape, 1.0 - a[0]), y, loss, alpha)
    rows = pi1 * l1 + (1.0 - pi1) * l0
    d_stay = (l1 - l0) * np.where(x == 1, 1.0, -1.0)
    d_a = np.stack([-(1.0 - pi1) * g0, pi1 * g1], axis=1)
    return rows, d_stay, d_a


def binary_plugin_loss(x, y, s, a, loss="xe", alpha=None):
    """Adversary loss evaluated at the averaged belief, with per-row gradients."""
    b = binary_belief(x, y, s, a)
    rows, gb = loss_and_grad(b, y, loss, alpha)
    d_stay, d_a = binary_belief_grads(x, y, s, a)
    return rows, gb * d_stay, gb[:, None] * d_a


# --- gaussian privatizer --------------------------------------------------------

GAUSS_PRIV_KEYS = ("beta0", "beta1", "gamma0_raw", "gamma1_raw")


def gauss_gammas(priv: dict[str, np.ndarray]) -> tuple[float, float]:
    return float(priv["gamma0_raw"] ** 2), float(priv["gamma1_raw"] ** 2)


def gauss_privatize(priv, x, y, noise):
    """Reparameterised release ``x + (1-y) b0 - y b1 + ((1-y) g0 + y g1) n``."""
    y = np.asarray(y, dtype=float)
    g0, g1 = gauss_gammas(priv)
    shift = (1.0 - y) * priv["beta0"] - y * priv["beta1"]
    scale = (1.0 - y) * g0 + y * g1
    return x + shift + scale * noise


def gauss_privatize_backward(priv, y, noise, d_xhat) -> dict[str, np.ndarray]:
    """Chain ``d loss / d x_hat`` (per row) back to the privatizer parameters."""
    y = np.asarray(y, dtype=float)
    return {
        "beta0": np.array(np.sum(d_xhat * (1.0 - y))),
        "beta1": np.array(-np.sum(d_xhat * y)),
        "gamma0_raw": np.array(np.sum(d_xhat * (1.0 - y) * noise) * 2.0 * priv["gamma0_raw"]),
        "gamma1_raw": np.array(np.sum(d_xhat * y * noise) * 2.0 * priv["gamma1_raw"]),
    }


def gauss_expected_distortion(priv, y):
    """Per-row ``E_n[(x_hat - x)^2]`` given the label."""
    y = np.asarray(y, dtype=float)
    g0, g1 = gauss_gammas(priv)
    return (1.0 - y) * (priv["beta0"] ** 2 + g0**2) + y * (priv["beta1"] ** 2 + g1**2)


def gauss_distortion_grads(priv, y) -> dict[str, np.ndarray]:
    """Gradient of the *mean* expected distortion over rows ``y``."""
    y = np.asarray(y, dtype=float)
    w1 = float(np.mean(y))
    w0 = 1.0 - w1
    r0, r1 = priv["gamma0_raw"], priv["gamma1_raw"]
    return {
        "beta0": np.array(2.0 * w0 * priv["beta0"]),
        "beta1": np.array(2.0 * w1 * priv["beta1"]),
        "gamma0_raw": np.array(w0 * 4.0 * r0**3),
        "gamma1_raw": np.array(w1 * 4.0 * r1**3),
    }


# --- MLP adversary ------------------------------------------------------------------

MLP_KEYS = ("W1", "b1", "W2", "b2", "W3", "b3")


def init_mlp(rng: np.random.Generator, hidden: tuple[int, int] = HIDDEN) -> dict[str, np.ndarray]:
    """Glorot-uniform weights, zero biases."""
    sizes = (1, *hidden, 1)
    params = {}
    for k, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:]), start=1):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        params[f"W{k}"] = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        params[f"b{k}"] = np.zeros(fan_out)
    return params


def _leaky(z):
    return np.where(z > 0, z, LEAKY_SLOPE * z)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class MlpCache:
    x: np.ndarray
    z1: np.ndarray
    h1: np.ndarray
    z2: np.ndarray
    h2: np.ndarray
    z3: np.ndarray
    out: np.ndarray


def mlp_forward(params, xhat, return_cache: bool = False):
    """Belief ``P(Y=1 | x_hat)`` for a batch (or scalar) of releases."""
    x = np.atleast_1d(np.asarray(xhat, dtype=float)).reshape(-1, 1)
    z1 = x @ params["W1"] + params["b1"]
    h1 = _leaky(z1)
    z2 = h1 @ params["W2"] + params["b2"]
    h2 = _leaky(z2)
    z3 = (h2 @ params["W3"] + params["b3"]).ravel()
    out = _sigmoid(z3)
    if return_cache:
        return out, MlpCache(x, z1, h1, z2, h2, z3, out)
    return float(out[0]) if np.ndim(xhat) == 0 else out


def mlp_backward(params, cache: MlpCache, d_out: np.ndarray):
    """Backpropagate per-example ``d loss / d belief``.

    Returns ``(param_grads, d_xhat)`` where the parameter gradients are summed
    over the batch and ``d_xhat`` is per example.
    """
    dz3 = (d_out * cache.out * (1.0 - cache.out)).reshape(-1, 1)
    gW3 = cache.h2.T @ dz3
    gb3 = dz3.sum(axis=0)
    dh2 = dz3 @ params["W3"].T
    dz2 = dh2 * np.where(cache.z2 > 0, 1.0, LEAKY_SLOPE)
    gW2 = cache.h1.T @ dz2
    gb2 = dz2.sum(axis=0)
    dh1 = dz2 @ params["W2"].T
    dz1 = dh1 * np.where(cache.z1 > 0, 1.0, LEAKY_SLOPE)
    gW1 = cache.x.T @ dz1
    gb1 = dz1.sum(axis=0)
    d_x = (dz1 @ params["W1"].T).ravel()
    return {"W1": gW1, "b1": gb1, "W2": gW2, "b2": gb2, "W3": gW3, "b3": gb3}, d_x


def backprop_mlp(params, xhat, y, loss: str = "xe", alpha: float | None = None):
    """Mean loss over the batch and its exact gradients.

    Returns ``(mean_loss, param_grads, d_xhat)``; all gradients are of the
    batch-mean loss.
    """
    out, cache = mlp_forward(params, xhat, return_cache=True)
    y = np.atleast_1d(np.asarray(y, dtype=float))
    rows, g = loss_and_grad(out, y, loss, alpha)
    n = rows.size
    grads, d_x = mlp_backward(params, cache, g / n)
    return float(rows.mean()), grads, d_x
