"""Optimal privatization of binary data against a MAP adversary.

Two routes are provided: the private-data-dependent (PDD) problem as a
six-variable LP solved with :mod:`gapmech.simplex`, and the closed-form
private-data-independent (PDI) optimum for ``Y = X xor N``. A grid search
over the PDI mechanism space is kept alongside as an independent check.
The log-loss counterpart, minimising ``I(X_hat; Y)`` under the same budget,
is a small convex program handled by :func:`min_mi_mechanism`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .probability import (
    BernoulliXorModel,
    BinaryMechanism,
    JointBinary,
    MechanismKind,
    ValidationError,
    expected_hamming_distortion,
    mechanism_joint,
    mutual_information,
)
from .simplex import LE, LpProblem, make_lp, solve_lp

LP_VARIABLES = ("s11", "s01", "s10", "s00", "t0", "t1")


def build_pdd_lp(joint: JointBinary, D: float) -> LpProblem:
    """LP whose optimum is the smallest MAP accuracy reachable with Hamming budget ``D``.

    ``t0`` and ``t1`` bound the larger joint mass of each released value.
    """
    if not D >= 0:
        raise ValidationError(f"distortion budget must be nonnegative, got {D!r}")
    p00, p01, p10, p11 = joint.p00, joint.p01, joint.p10, joint.p11
    # variables: s11, s01, s10, s00, t0, t1
    rows = [
        # p11 (1 - s11) + p01 s01 <= t0
        ((-p11, p01, 0.0, 0.0, -1.0, 0.0), LE, -p11),
        # p10 (1 - s10) + p00 s00 <= t0
        ((0.0, 0.0, -p10, p00, -1.0, 0.0), LE, -p10),
        # p11 s11 + p01 (1 - s01) <= t1
        ((p11, -p01, 0.0, 0.0, 0.0, -1.0), LE, -p01),
        # p10 s10 + p00 (1 - s00) <= t1
        ((0.0, 0.0, p10, -p00, 0.0, -1.0), LE, -p00),
        # sum p_ij (1 - s_ij) <= D
        ((-p11, -p01, -p10, -p00, 0.0, 0.0), LE, D - (p00 + p01 + p10 + p11)),
    ]
    return make_lp(
        objective=(0, 0, 0, 0, 1, 1),
        constraints=rows,
        bounds=[(0.0, 1.0)] * 6,
        names=LP_VARIABLES,
    )


@dataclass(frozen=True)
class PddSolution:
    accuracy: float
    mechanism: BinaryMechanism


def optimal_pdd(joint: JointBinary, D: float) -> PddSolution:
    x, obj = solve_lp(build_pdd_lp(joint, D))
    s11, s01, s10, s00 = (float(np.clip(v, 0.0, 1.0)) for v in x[:4])
    return PddSolution(accuracy=obj, mechanism=BinaryMechanism.pdd(s00, s01, s10, s11))


@dataclass(frozen=True)
class PdiFamily:
    """Optimal PDI mechanisms: ``lower <= p*s1 + (1-p)*s0 <= upper`` with ``s0, s1`` in [0, 1]."""

    p: float
    lower: float
    upper: float

    def contains(self, s0: float, s1: float, tol: float = 1e-12) -> bool:
        if not (-tol <= s0 <= 1 + tol and -tol <= s1 <= 1 + tol):
            return False
        kept = self.p * s1 + (1 - self.p) * s0
        return self.lower - tol <= kept <= self.upper + tol

    def describe(self) -> str:
        if self.lower == self.upper:
            return f"{self.p:g}*s1 + {1 - self.p:g}*s0 = {self.lower:g}"
        return f"{self.lower:g} <= {self.p:g}*s1 + {1 - self.p:g}*s0 <= {self.upper:g}"


@dataclass(frozen=True)
class TheoremOneSolution:
    accuracy: float
    family: PdiFamily
    witness: BinaryMechanism
    branch: str


def theorem1_pdi(p: float, q: float, D: float) -> TheoremOneSolution:
    """Closed-form optimal PDI mechanism for ``Y = X xor N``, ``X~Bern(p)``, ``N~Bern(q)``.

    The witness is the symmetric mechanism ``s0 = s1`` at the least-distortion
    end of the optimal family.
    """
    model = BernoulliXorModel(p, q)  # validates p, q
    p, q = model.p, model.q
    if not 0.0 <= D <= 1.0:
        raise ValidationError(f"D={D!r} must lie in [0, 1]")
    hi_p = max(p, 1 - p)
    if q == 0.5:
        family = PdiFamily(p, 1.0 - D, 1.0)
        accuracy = 0.5
        branch = "independent"
    elif 1.0 - D > hi_p:
        family = PdiFamily(p, 1.0 - D, 1.0 - D)
        accuracy = (1 - 2 * q) * (1 - D) + q if q < 0.5 else (2 * q - 1) * (1 - D) + 1 - q
        branch = "linear"
    else:
        family = PdiFamily(p, max(min(p, 1 - p), 1.0 - D), hi_p)
        if (p >= 0.5 and q < 0.5) or (p <= 0.5 and q > 0.5):
            accuracy = p * (1 - q) + (1 - p) * q
        else:
            accuracy = p * q + (1 - p) * (1 - q)
        branch = "saturated"
    c = min(family.upper, 1.0)
    return TheoremOneSolution(
        accuracy=accuracy,
        family=family,
        witness=BinaryMechanism.pdi(c, c),
        branch=branch,
    )


def pdi_brute_force(p: float, q: float, D: float, step: float = 0.01) -> tuple[float, float, float]:
    """Exhaustive grid minimisation of the PDI MAP accuracy.

    Returns ``(accuracy, s0, s1)``. Ties resolve to the first grid point in
    ``(s0, s1)`` lexicographic order.
    """
    if not 0 < step <= 0.1:
        raise ValidationError("step must lie in (0, 0.1]")
    n = int(round(1.0 / step))
    grid = np.linspace(0.0, 1.0, n + 1)
    s0, s1 = np.meshgrid(grid, grid, indexing="ij")
    # joint of (Y, X_hat) under the Markov chain Y - X - X_hat
    y1_x0 = p * (1 - q) * (1 - s1) + (1 - p) * q * s0
    y0_x0 = p * q * (1 - s1) + (1 - p) * (1 - q) * s0
    y1_x1 = p * (1 - q) * s1 + (1 - p) * q * (1 - s0)
    y0_x1 = p * q * s1 + (1 - p) * (1 - q) * (1 - s0)
    acc = np.maximum(y1_x0, y0_x0) + np.maximum(y1_x1, y0_x1)
    feasible = (1 - s0) * (1 - p) + (1 - s1) * p <= D + 1e-12
    acc = np.where(feasible, acc, np.inf)
    k = int(np.argmin(acc))
    i, j = np.unravel_index(k, acc.shape)
    return float(acc[i, j]), float(grid[i]), float(grid[j])


def pdd_brute_force(joint: JointBinary, D: float, step: float = 0.01) -> float:
    """Grid minimisation of the PDD MAP accuracy over ``s`` in ``[0,1]^4``.

    The accuracy depends on ``(s11, s01)`` only through ``u = P(Y=1, X_hat=0)``
    and on ``(s10, s00)`` only through ``v = P(Y=0, X_hat=0)``, so each half is
    enumerated once and the pairs are combined blockwise. Half-grids that
    alone exceed the budget are pruned.
    """
    n = int(round(1.0 / step))
    grid = np.linspace(0.0, 1.0, n + 1)
    a, b = np.meshgrid(grid, grid, indexing="ij")
    a, b = a.ravel(), b.ravel()
    p00, p01, p10, p11 = joint.p00, joint.p01, joint.p10, joint.p11
    py1, py0 = p01 + p11, p00 + p10
    # Y=1 half: a=s11, b=s01
    u = p11 * (1 - a) + p01 * b
    d1 = p11 * (1 - a) + p01 * (1 - b)
    # Y=0 half: a=s10, b=s00
    v = p10 * (1 - a) + p00 * b
    d0 = p10 * (1 - a) + p00 * (1 - b)
    tol = 1e-12
    keep1 = d1 <= D + tol
    keep0 = d0 <= D + tol
    u, d1 = u[keep1], d1[keep1]
    v, d0 = v[keep0], d0[keep0]
    best = np.inf
    block = max(1, 4_000_000 // max(1, v.size))
    for start in range(0, u.size, block):
        uu = u[start : start + block, None]
        dd = d1[start : start + block, None]
        acc = np.maximum(uu, v) + np.maximum(py1 - uu, py0 - v)
        acc = np.where(dd + d0 <= D + tol, acc, np.inf)
        best = min(best, float(acc.min()))
    return best


def _mi_and_grad(stay: np.ndarray, p: np.ndarray) -> tuple[float, np.ndarray]:
    """``I(X_hat; Y)`` and its gradient in the 2x2 stay table."""
    out = p * stay + p[::-1] * (1.0 - stay[::-1])  # out[x_hat, y]
    px_hat = out.sum(axis=1, keepdims=True)
    py = out.sum(axis=0, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_post = np.where(out > 0, np.log(out / px_hat), 0.0)
        log_ratio = np.where(out > 0, np.log(out / (px_hat * py)), 0.0)
    mi = float(np.sum(out * log_ratio))
    # d out[i, y] / d stay[i, y] = p[i, y]; d out[1-i, y] / d stay[i, y] = -p[i, y]
    return mi, p * (log_post - log_post[::-1])


def min_mi_mechanism(
    joint: JointBinary, D: float, kind: MechanismKind | str = MechanismKind.PDD
) -> tuple[float, BinaryMechanism]:
    """Mechanism of least ``I(X_hat; Y)`` with Hamming distortion at most ``D``.

    The objective is convex in the stay probabilities and the feasible set is
    a polytope, so a local SQP solve from the identity is global.
    """
    if not D >= 0:
        raise ValidationError(f"D={D!r} must be nonnegative")
    kind = MechanismKind(kind)
    p = joint.as_array()
    if kind is MechanismKind.PDD:
        expand = lambda z: z.reshape(2, 2)  # noqa: E731
        reduce = lambda g: g.ravel()  # noqa: E731
        n = 4
    else:
        expand = lambda z: np.repeat(z[:, None], 2, axis=1)  # noqa: E731
        reduce = lambda g: g.sum(axis=1)  # noqa: E731
        n = 2
    weights = reduce(p)  # distortion = sum(weights * (1 - z))

    def fun(z):
        mi, g = _mi_and_grad(expand(z), p)
        return mi, reduce(g)

    res = minimize(
        fun,
        np.ones(n),
        jac=True,
        method="SLSQP",
        bounds=[(0.0, 1.0)] * n,
        constraints=[{"type": "ineq", "fun": lambda z: D - weights @ (1 - z), "jac": lambda z: weights}],
        options={"ftol": 1e-14, "maxiter": 500},
    )
    z = np.clip(res.x, 0.0, 1.0)
    stay = expand(z)
    mech = BinaryMechanism(kind, stay[0, 0], stay[0, 1], stay[1, 0], stay[1, 1])
    if expected_hamming_distortion(joint, mech) > D + 1e-9:
        raise ValidationError("minimum-MI solve ended outside the distortion budget")
    return mutual_information(mechanism_joint(joint, mech)), mech
