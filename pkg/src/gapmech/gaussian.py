"""Optimal Gaussian noise-adding mechanisms for the binary Gaussian mixture.

Every mechanism has the form
``X_hat = X + (1-Y)*beta0 - Y*beta1 + ((1-Y)*gamma0 + Y*gamma1) * N`` with
``N ~ N(0, 1)``; its mean squared distortion is
``ptilde*(beta1^2 + gamma1^2) + (1-ptilde)*(beta0^2 + gamma0^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .probability import (
    GaussMixture,
    GaussPair,
    ValidationError,
    gauss_map_accuracy_closed,
    gauss_map_accuracy_general,
    map_accuracy_arrays,
)


@dataclass(frozen=True)
class GaussMechanism:
    beta0: float = 0.0
    beta1: float = 0.0
    gamma0: float = 0.0
    gamma1: float = 0.0

    def __post_init__(self) -> None:
        for name in ("beta0", "beta1", "gamma0", "gamma1"):
            v = float(getattr(self, name))
            if not math.isfinite(v) or v < 0:
                raise ValidationError(f"{name}={v!r} must be finite and nonnegative")
            object.__setattr__(self, name, v)

    def distortion(self, ptilde: float) -> float:
        return ptilde * (self.beta1**2 + self.gamma1**2) + (1 - ptilde) * (
            self.beta0**2 + self.gamma0**2
        )

    def released(self, model: GaussMixture) -> GaussPair:
        """Class-conditional distribution of the released variable."""
        return GaussPair(
            prior1=model.ptilde,
            mean0=-model.mu + self.beta0,
            mean1=model.mu - self.beta1,
            var0=model.var0 + self.gamma0**2,
            var1=model.var1 + self.gamma1**2,
        )

    def map_accuracy(self, model: GaussMixture) -> float:
        return gauss_map_accuracy_general(self.released(model))


@dataclass(frozen=True)
class GaussSolution:
    mechanism: GaussMechanism
    accuracy: float


def _require_equal_variance(model: GaussMixture) -> float:
    if not model.equal_variance:
        raise ValidationError("this solver needs var0 == var1; use pdd_full_grid_search")
    return math.sqrt(model.var0)


def _check_budget(D: float) -> float:
    D = float(D)
    if not (D >= 0 and math.isfinite(D)):
        raise ValidationError(f"distortion budget must be finite and nonnegative, got {D!r}")
    return D


def theorem2_pdi(model: GaussMixture, D: float) -> GaussSolution:
    """Best ``Y``-independent mechanism: all budget into zero-mean noise."""
    D = _check_budget(D)
    sigma = _require_equal_variance(model)
    g = math.sqrt(D)
    alpha = 2 * model.mu / math.sqrt(D + sigma**2)
    return GaussSolution(GaussMechanism(0.0, 0.0, g, g), gauss_map_accuracy_closed(alpha, model.ptilde))


def theorem3_pdd_shift(model: GaussMixture, D: float) -> GaussSolution:
    """Best pure-shift mechanism; the rarer class is moved further."""
    D = _check_budget(D)
    sigma = _require_equal_variance(model)
    pt = model.ptilde
    b0 = math.sqrt(pt * D / (1 - pt))
    b1 = math.sqrt((1 - pt) * D / pt)
    alpha = (2 * model.mu - b0 - b1) / sigma
    return GaussSolution(GaussMechanism(b0, b1, 0.0, 0.0), gauss_map_accuracy_closed(alpha, model.ptilde))


def _shift_noise_alpha(t, model: GaussMixture, D: float, sigma: float):
    """Separation after spending a fraction ``t`` of ``D`` on shift, the rest on common noise.

    The shift is split in the pure-shift optimal ratio, which minimises the
    distortion for a given total shift ``beta0 + beta1``. Returns ``|alpha|``:
    overshooting the means is as informative as undershooting.
    """
    pt = model.ptilde
    beta = np.sqrt(t * D / (pt * (1 - pt)))
    gamma2 = (1 - t) * D
    return np.abs(2 * model.mu - beta) / np.sqrt(gamma2 + sigma**2)


def theorem4_shift_plus_noise(model: GaussMixture, D: float, grid_n: int = 201) -> GaussSolution:
    """Best shift plus common-noise mechanism by 1-D global search.

    The objective depends on ``beta0 + beta1`` and ``gamma`` only, and the
    optimum spends the full budget, so the search runs over the fraction of
    the budget given to the shift. A coarse grid of ``grid_n`` points is
    followed by golden-section refinement on the best bracket.
    """
    D = _check_budget(D)
    sigma = _require_equal_variance(model)
    if grid_n < 2:
        raise ValidationError("grid_n must be at least 2")
    pt = model.ptilde
    if D == 0:
        return GaussSolution(GaussMechanism(), gauss_map_accuracy_closed(2 * model.mu / sigma, pt))

    f = lambda t: float(_shift_noise_alpha(t, model, D, sigma))  # noqa: E731
    grid = np.linspace(0.0, 1.0, grid_n)
    vals = _shift_noise_alpha(grid, model, D, sigma)
    k = int(np.argmin(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid_n - 1)]
    best_t, best_v = float(grid[k]), float(vals[k])
    # golden-section on the bracket around the coarse optimum
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - invphi * (b - a), a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(80):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    for t, v in ((c, fc), (d, fd)):
        if v < best_v:
            best_t, best_v = t, v

    beta = math.sqrt(best_t * D / (pt * (1 - pt)))
    gamma = math.sqrt(max(0.0, (1 - best_t) * D))
    mech = GaussMechanism(pt * beta, (1 - pt) * beta, gamma, gamma)
    return GaussSolution(mech, gauss_map_accuracy_closed(best_v, pt))


@dataclass(frozen=True)
class CubePoint:
    eps: float
    w0: float
    w1: float

    def __post_init__(self) -> None:
        for name in ("eps", "w0", "w1"):
            v = float(getattr(self, name))
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name}={v!r} must lie in [0, 1]")


def cube_parameters(eps, w0, w1, ptilde: float, D: float):
    """Vectorised map from the unit cube onto the full-budget boundary.

    ``eps`` splits the budget between the classes along the distortion
    ellipse; ``w0`` and ``w1`` split each class's share between shift and
    noise along a circle. Rational parameterisations keep every coordinate
    algebraic.
    """
    eps, w0, w1 = (np.asarray(v, dtype=float) for v in (eps, w0, w1))
    r0 = 2 * np.sqrt(D / (1 - ptilde)) * eps / (1 + eps**2)
    r1 = np.sqrt(D / ptilde) * (1 - eps**2) / (1 + eps**2)
    beta0 = r0 * (1 - w0**2) / (1 + w0**2)
    gamma0 = r0 * 2 * w0 / (1 + w0**2)
    beta1 = r1 * (1 - w1**2) / (1 + w1**2)
    gamma1 = r1 * 2 * w1 / (1 + w1**2)
    return beta0, beta1, gamma0, gamma1


def cube_to_mechanism(point: CubePoint, ptilde: float, D: float) -> GaussMechanism:
    b0, b1, g0, g1 = cube_parameters(point.eps, point.w0, point.w1, ptilde, _check_budget(D))
    return GaussMechanism(float(b0), float(b1), float(g0), float(g1))


def _cube_accuracy(model: GaussMixture, D: float, eps, w0, w1) -> np.ndarray:
    b0, b1, g0, g1 = cube_parameters(eps, w0, w1, model.ptilde, D)
    return map_accuracy_arrays(
        model.ptilde, -model.mu + b0, model.var0 + g0**2, model.mu - b1, model.var1 + g1**2
    )


def _lattice_argmin(model, D, axes) -> tuple[tuple[float, float, float], float]:
    e, a, b = np.meshgrid(*axes, indexing="ij")
    acc = _cube_accuracy(model, D, e, a, b)
    # C-order argmin = lexicographically smallest (eps, w0, w1) among ties
    k = int(np.argmin(acc))
    i, j, m = np.unravel_index(k, acc.shape)
    return (float(axes[0][i]), float(axes[1][j]), float(axes[2][m])), float(acc[i, j, m])


def _refined_axis(center: float, width: float, n: int) -> np.ndarray:
    lo = min(max(center - width / 2, 0.0), 1.0 - width)
    return np.linspace(lo, lo + width, n)


def pdd_full_grid_search(
    model: GaussMixture, D: float, grid_n: int = 51, refine: int = 1
) -> tuple[GaussSolution, CubePoint]:
    """Minimise the MAP accuracy of the general PDD mechanism over the cube.

    Evaluates ``grid_n**3`` lattice points, then ``refine`` stages each
    shrinking the box tenfold around the incumbent. Works for unequal class
    variances.
    """
    D = _check_budget(D)
    if grid_n < 2:
        raise ValidationError("grid_n must be at least 2")
    if D == 0:
        acc = gauss_map_accuracy_general(model.as_pair())
        return GaussSolution(GaussMechanism(), acc), CubePoint(0.0, 0.0, 0.0)
    axis = np.linspace(0.0, 1.0, grid_n)
    best, best_acc = _lattice_argmin(model, D, (axis, axis, axis))
    width = 1.0
    for _ in range(refine):
        width /= 10.0
        axes = tuple(_refined_axis(c, width, grid_n) for c in best)
        cand, cand_acc = _lattice_argmin(model, D, axes)
        if cand_acc < best_acc:
            best, best_acc = cand, cand_acc
    point = CubePoint(*best)
    mech = cube_to_mechanism(point, model.ptilde, D)
    return GaussSolution(mech, best_acc), point
