"""Alternating minimax training of a privatizer against a learned adversary.

Each outer iteration draws one minibatch, takes ``k`` adversary descent
steps on its loss with the privatizer frozen, then one privatizer step on
the negated adversary loss plus a distortion-constraint term. The
constraint is handled either by an exact penalty ``rho * max(0, d - D)`` or
by an augmented Lagrangian with a slack variable.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..datagen import BINARY, GAUSSIAN, Dataset, make_rng
from ..probability import ValidationError
from . import networks as nets
from .adam import AdamState, adam_step

PENALTY = "penalty"
AUGMENTED_LAGRANGIAN = "al"

BINARY_PDD = "binary-pdd"
BINARY_PDI = "binary-pdi"
GAUSS = "gauss"
MODEL_KINDS = (BINARY_PDD, BINARY_PDI, GAUSS)


class TrainingDivergedError(RuntimeError):
    def __init__(self, iteration: int, last_state: dict):
        super().__init__(f"non-finite loss at iteration {iteration}")
        self.iteration = iteration
        self.last_state = last_state


# (growth, cap) per constraint mode. Under Adam a large penalty weight swamps
# the adversarial gradient, so both schedules stay moderate.
_RHO_DEFAULTS = {PENALTY: (0.01, 10.0), AUGMENTED_LAGRANGIAN: (0.001, 2.0)}


@dataclass
class TrainConfig:
    D: float
    learning_rate: float = 0.01
    minibatch: int = 200
    adversary_epochs_k: int = 5
    outer_iters: int = 10_000
    constraint_mode: str = PENALTY
    rho0: float = 1.0
    rho_growth: float | None = None
    rho_max: float | None = None
    lambda0: float = 0.0
    seed: int = 0
    loss: str = "xe"
    alpha: float | None = None
    # "expected": loss averaged over X_hat; "plugin": loss of the averaged belief
    binary_objective: str = "expected"
    average_tail: float = 0.5
    tol: float = 1e-6

    def __post_init__(self) -> None:
        if not (self.learning_rate > 0):
            raise ValidationError("learning_rate must be positive")
        if self.minibatch < 1 or self.adversary_epochs_k < 1 or self.outer_iters < 1:
            raise ValidationError("minibatch, adversary_epochs_k and outer_iters must be >= 1")
        if not (self.D >= 0 and math.isfinite(self.D)):
            raise ValidationError("D must be finite and nonnegative")
        if self.constraint_mode not in (PENALTY, AUGMENTED_LAGRANGIAN):
            raise ValidationError(f"unknown constraint_mode {self.constraint_mode!r}")
        if self.loss not in ("xe", "alpha"):
            raise ValidationError(f"unknown loss {self.loss!r}")
        if self.loss == "alpha" and not (self.alpha is not None and self.alpha > 1):
            raise ValidationError("alpha-loss needs alpha > 1")
        if self.binary_objective not in ("expected", "plugin"):
            raise ValidationError(f"unknown binary_objective {self.binary_objective!r}")
        if not 0.0 <= self.average_tail < 1.0:
            raise ValidationError("average_tail must lie in [0, 1)")
        growth, cap = _RHO_DEFAULTS[self.constraint_mode]
        if self.rho_growth is None:
            self.rho_growth = growth
        if self.rho_max is None:
            self.rho_max = cap
        if not (self.rho0 > 0 and self.rho_growth >= 0 and self.rho_max >= self.rho0):
            raise ValidationError("rho schedule needs rho0 > 0, rho_growth >= 0, rho_max >= rho0")

    def rho(self, t: int) -> float:
        return min(self.rho_max, self.rho0 * (1.0 + self.rho_growth * t))


HISTORY_FIELDS = ("iter", "adv_loss", "distortion", "residual", "lambda", "rho")


@dataclass
class History:
    rows: list[tuple[int, float, float, float, float, float]] = field(default_factory=list)

    def append(self, *row) -> None:
        self.rows.append(tuple(row))

    def column(self, name: str) -> np.ndarray:
        k = HISTORY_FIELDS.index(name)
        return np.array([r[k] for r in self.rows])

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(HISTORY_FIELDS)
            for r in self.rows:
                w.writerow([r[0], *(repr(float(v)) for v in r[1:])])


@dataclass
class TrainResult:
    model_kind: str
    privatizer: dict[str, np.ndarray]
    adversary: dict[str, np.ndarray]
    history: History
    iterations: int
    config: TrainConfig

    def config_dict(self) -> dict:
        return asdict(self.config)


class _BinaryGame:
    def __init__(self, data: Dataset, kind: str, cfg: TrainConfig):
        self.x = data.x.astype(int)
        self.y = data.y
        self.n_s = 4 if kind == BINARY_PDD else 2
        self.cfg = cfg
        self.loss_fn = nets.binary_expected_loss if cfg.binary_objective == "expected" else nets.binary_plugin_loss

    def init(self, rng):
        return {"s": np.ones(self.n_s)}, {"a": np.full(2, 0.5)}

    def batch(self, idx, rng, priv):
        return self.x[idx], self.y[idx]

    def adversary_grads(self, batch, priv, adv):
        x, y = batch
        rows, _, d_a = self.loss_fn(x, y, priv["s"], adv["a"], self.cfg.loss, self.cfg.alpha)
        return float(rows.mean()), {"a": d_a.mean(axis=0)}

    def project_adversary(self, adv):
        return {"a": np.clip(adv["a"], 0.0, 1.0)}

    def privatizer_terms(self, batch, priv, adv):
        """Returns ``(mean adversary loss, its gradient, mean distortion, its gradient)``."""
        x, y = batch
        m = x.size
        rows, d_stay, _ = self.loss_fn(x, y, priv["s"], adv["a"], self.cfg.loss, self.cfg.alpha)
        cells = nets.cell_index(self.n_s, x, y)
        g_loss = np.bincount(cells, d_stay, minlength=self.n_s) / m
        stay = priv["s"][cells]
        dist = float(np.mean(1.0 - stay))
        g_dist = -np.bincount(cells, minlength=self.n_s) / m
        return float(rows.mean()), {"s": g_loss}, dist, {"s": g_dist}

    def project_privatizer(self, priv):
        return {"s": np.clip(priv["s"], 0.0, 1.0)}

    def full_distortion(self, priv) -> float:
        cells = nets.cell_index(self.n_s, self.x, self.y)
        return float(np.mean(1.0 - priv["s"][cells]))


class _GaussGame:
    def __init__(self, data: Dataset, cfg: TrainConfig):
        self.x = data.x
        self.y = data.y
        self.cfg = cfg
        self._cache = None

    def init(self, rng):
        priv = {
            "beta0": np.array(0.0),
            "beta1": np.array(0.0),
            "gamma0_raw": np.array(0.1),
            "gamma1_raw": np.array(0.1),
        }
        return priv, nets.init_mlp(rng)

    def batch(self, idx, rng, priv):
        noise = rng.standard_normal(idx.size)
        x, y = self.x[idx], self.y[idx]
        return x, y, noise, nets.gauss_privatize(priv, x, y, noise)

    def adversary_grads(self, batch, priv, adv):
        _, y, _, xhat = batch
        loss, grads, _ = nets.backprop_mlp(adv, xhat, y, self.cfg.loss, self.cfg.alpha)
        return loss, grads

    def project_adversary(self, adv):
        return adv

    def privatizer_terms(self, batch, priv, adv):
        x, y, noise, _ = batch
        xhat = nets.gauss_privatize(priv, x, y, noise)
        loss, _, d_xhat = nets.backprop_mlp(adv, xhat, y, self.cfg.loss, self.cfg.alpha)
        g_loss = nets.gauss_privatize_backward(priv, y, noise, d_xhat)
        dist = float(np.mean(nets.gauss_expected_distortion(priv, y)))
        return loss, g_loss, dist, nets.gauss_distortion_grads(priv, y)

    def project_privatizer(self, priv):
        return priv

    def full_distortion(self, priv) -> float:
        return float(np.mean(nets.gauss_expected_distortion(priv, self.y)))


def _snapshot(priv, adv) -> dict:
    return {"privatizer": {k: np.copy(v) for k, v in priv.items()}, "adversary": {k: np.copy(v) for k, v in adv.items()}}


def _max_move(old: dict, new: dict) -> float:
    return max(float(np.max(np.abs(np.asarray(new[k]) - np.asarray(old[k])))) for k in old)


def train_gap(data: Dataset, model_kind: str, cfg: TrainConfig) -> TrainResult:
    """Run the alternating minimax loop and return the learned mechanism.

    The returned privatizer is the average of the privatizer iterates over the
    final ``cfg.average_tail`` fraction of the run (the last iterate when it
    is 0).
    """
    if model_kind not in MODEL_KINDS:
        raise ValidationError(f"unknown model kind {model_kind!r}")
    if len(data) == 0:
        raise ValidationError("dataset is empty")
    if (model_kind == GAUSS) != (data.kind == GAUSSIAN):
        raise ValidationError(f"model {model_kind!r} does not match a {data.kind} dataset")
    game = _GaussGame(data, cfg) if model_kind == GAUSS else _BinaryGame(data, model_kind, cfg)

    rng = make_rng(cfg.seed)
    priv, adv = game.init(rng)
    opt_p, opt_a = AdamState(), AdamState()
    lam = float(cfg.lambda0)
    history = History()
    n = len(data)
    m = min(cfg.minibatch, n)
    tail_start = int(cfg.outer_iters * (1.0 - cfg.average_tail)) if cfg.average_tail > 0 else cfg.outer_iters
    tail_sum = None
    tail_count = 0
    last_good = _snapshot(priv, adv)

    order = rng.permutation(n)
    cursor = 0
    t = 0
    for t in range(cfg.outer_iters):
        prev = {**{f"p.{k}": v for k, v in priv.items()}, **{f"a.{k}": v for k, v in adv.items()}}
        if cursor + m > n:
            order = rng.permutation(n)
            cursor = 0
        idx = order[cursor : cursor + m]
        cursor += m
        batch = game.batch(idx, rng, priv)

        adv_loss = float("nan")
        for _ in range(cfg.adversary_epochs_k):
            adv_loss, g_adv = game.adversary_grads(batch, priv, adv)
            adv, opt_a = adam_step(adv, g_adv, opt_a, cfg.learning_rate)
            adv = game.project_adversary(adv)

        loss, g_loss, dist, g_dist = game.privatizer_terms(batch, priv, adv)
        if not (math.isfinite(loss) and math.isfinite(adv_loss)):
            raise TrainingDivergedError(t, last_good)

        rho = cfg.rho(t)
        if cfg.constraint_mode == PENALTY:
            residual = max(0.0, dist - cfg.D)
            coef = rho if residual > 0 else 0.0
        else:
            delta = max(0.0, cfg.D - dist + lam / rho)
            residual = dist + delta - cfg.D
            coef = rho * residual - lam
        # privatizer minimises -(adversary loss) + constraint term
        g_priv = {k: -g_loss[k] + coef * g_dist[k] for k in g_loss}
        priv, opt_p = adam_step(priv, g_priv, opt_p, cfg.learning_rate)
        priv = game.project_privatizer(priv)
        if cfg.constraint_mode == AUGMENTED_LAGRANGIAN:
            lam = lam - rho * residual

        history.append(t, adv_loss, dist, residual, lam, rho)
        last_good = _snapshot(priv, adv)

        if t >= tail_start:
            if tail_sum is None:
                tail_sum = {k: np.zeros_like(v, dtype=float) for k, v in priv.items()}
            for k, v in priv.items():
                tail_sum[k] += v
            tail_count += 1

        now = {**{f"p.{k}": v for k, v in priv.items()}, **{f"a.{k}": v for k, v in adv.items()}}
        if _max_move(prev, now) < cfg.tol:
            break

    final = {k: v / tail_count for k, v in tail_sum.items()} if tail_count else priv
    final = game.project_privatizer(final)
    return TrainResult(model_kind, final, adv, history, t + 1, cfg)


def binary_mechanism_from(result: TrainResult):
    """Learned binary privatizer as a :class:`~gapmech.probability.BinaryMechanism`."""
    from ..probability import BinaryMechanism

    s = np.clip(result.privatizer["s"], 0.0, 1.0)
    if s.size == 4:
        return BinaryMechanism.pdd(*map(float, s))
    return BinaryMechanism.pdi(float(s[0]), float(s[1]))


def gauss_mechanism_from(result: TrainResult):
    """Learned Gaussian privatizer as a :class:`~gapmech.gaussian.GaussMechanism`.

    Shifts are reported as magnitudes; a negative learned shift moves a class
    away from the other and is reported with its sign folded into the model
    evaluation by :func:`gauss_release_pair`.
    """
    from ..gaussian import GaussMechanism

    p = result.privatizer
    g0 = float(p["gamma0_raw"]) ** 2
    g1 = float(p["gamma1_raw"]) ** 2
    return GaussMechanism(max(0.0, float(p["beta0"])), max(0.0, float(p["beta1"])), g0, g1)


def gauss_release_pair(result: TrainResult, model):
    """Exact class-conditional release law of a learned Gaussian privatizer (signed shifts)."""
    from ..probability import GaussPair

    p = result.privatizer
    g0 = float(p["gamma0_raw"]) ** 2
    g1 = float(p["gamma1_raw"]) ** 2
    return GaussPair(
        model.ptilde,
        -model.mu + float(p["beta0"]),
        model.mu - float(p["beta1"]),
        model.var0 + g0**2,
        model.var1 + g1**2,
    )


def full_distortion(data: Dataset, result: TrainResult) -> float:
    """Mean expected distortion of the learned privatizer over the whole dataset."""
    if result.model_kind == GAUSS:
        return float(np.mean(nets.gauss_expected_distortion(result.privatizer, data.y)))
    cells = nets.cell_index(result.privatizer["s"].size, data.x, data.y)
    return float(np.mean(1.0 - result.privatizer["s"][cells]))
