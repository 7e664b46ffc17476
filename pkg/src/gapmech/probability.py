"""Probability primitives shared by every solver and evaluator.

Binary conventions: ``JointBinary`` stores ``P(X=i, Y=j)`` as ``p{i}{j}``.
When a table describes a *released* variable the first index is the
released value ``X_hat``. Gaussian conventions: class ``Y=0`` is centred at
``-mu`` and class ``Y=1`` at ``+mu``.

All functions here are pure; the dataclasses are frozen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import erfc, ndtr

PROB_TOL = 1e-9
_SQRT2 = math.sqrt(2.0)


class ValidationError(ValueError):
    """Raised when an input violates a documented domain constraint."""


def _check_prob(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value < -PROB_TOL or value > 1.0 + PROB_TOL:
        raise ValidationError(f"{name}={value!r} is not a probability")
    return min(1.0, max(0.0, value))


@dataclass(frozen=True)
class JointBinary:
    """2x2 joint table ``P(X=i, Y=j)``.

    Entries within ``PROB_TOL`` of a valid table are clipped and renormalised;
    anything further off raises :class:`ValidationError`.
    """

    p00: float
    p01: float
    p10: float
    p11: float

    def __post_init__(self) -> None:
        vals = [_check_prob(n, getattr(self, n)) for n in ("p00", "p01", "p10", "p11")]
        total = sum(vals)
        if abs(total - 1.0) > PROB_TOL:
            raise ValidationError(f"joint table sums to {total!r}, expected 1")
        for name, v in zip(("p00", "p01", "p10", "p11"), vals):
            object.__setattr__(self, name, v / total)

    @classmethod
    def from_array(cls, table) -> "JointBinary":
        t = np.asarray(table, dtype=float)
        if t.shape != (2, 2):
            raise ValidationError(f"joint table must be 2x2, got shape {t.shape}")
        return cls(t[0, 0], t[0, 1], t[1, 0], t[1, 1])

    def as_array(self) -> np.ndarray:
        return np.array([[self.p00, self.p01], [self.p10, self.p11]])

    @property
    def px1(self) -> float:
        return self.p10 + self.p11

    @property
    def py1(self) -> float:
        return self.p01 + self.p11


@dataclass(frozen=True)
class BernoulliXorModel:
    """``X ~ Bern(p)``, ``N ~ Bern(q)`` independent, ``Y = X xor N``."""

    p: float
    q: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", _check_prob("p", self.p))
        object.__setattr__(self, "q", _check_prob("q", self.q))

    def joint(self) -> JointBinary:
        p, q = self.p, self.q
        return JointBinary(
            p00=(1 - p) * (1 - q),
            p01=(1 - p) * q,
            p10=p * q,
            p11=p * (1 - q),
        )


@dataclass(frozen=True)
class GaussMixture:
    """``Y ~ Bern(ptilde)``, ``X|Y=0 ~ N(-mu, var0)``, ``X|Y=1 ~ N(mu, var1)``."""

    ptilde: float
    mu: float
    var0: float = 1.0
    var1: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 < self.ptilde < 1.0:
            raise ValidationError(f"ptilde={self.ptilde!r} must lie in (0, 1)")
        if not math.isfinite(self.mu):
            raise ValidationError("mu must be finite")
        if not (self.var0 > 0 and self.var1 > 0):
            raise ValidationError("class variances must be positive")

    @property
    def equal_variance(self) -> bool:
        return abs(self.var0 - self.var1) < 1e-12 * max(self.var0, self.var1)

    def as_pair(self) -> "GaussPair":
        return GaussPair(self.ptilde, -self.mu, self.mu, self.var0, self.var1)


@dataclass(frozen=True)
class GaussPair:
    """Generic binary Gaussian hypothesis test, typically after a mechanism."""

    prior1: float
    mean0: float
    mean1: float
    var0: float
    var1: float

    def __post_init__(self) -> None:
        if not 0.0 < self.prior1 < 1.0:
            raise ValidationError(f"prior1={self.prior1!r} must lie in (0, 1)")
        if not (self.var0 > 0 and self.var1 > 0):
            raise ValidationError("variances must be positive")


class MechanismKind(str, Enum):
    PDD = "PDD"
    PDI = "PDI"


@dataclass(frozen=True)
class BinaryMechanism:
    """Stay probabilities ``s_ij = P(X_hat = i | X=i, Y=j)``.

    A PDI mechanism ignores ``Y``: ``s00 == s01 == s0`` and ``s10 == s11 == s1``.
    """

    kind: MechanismKind
    s00: float
    s01: float
    s10: float
    s11: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", MechanismKind(self.kind))
        for name in ("s00", "s01", "s10", "s11"):
            object.__setattr__(self, name, _check_prob(name, getattr(self, name)))
        if self.kind is MechanismKind.PDI and (self.s00 != self.s01 or self.s10 != self.s11):
            raise ValidationError("PDI mechanism must satisfy s00 == s01 and s10 == s11")

    @classmethod
    def pdd(cls, s00: float, s01: float, s10: float, s11: float) -> "BinaryMechanism":
        return cls(MechanismKind.PDD, s00, s01, s10, s11)

    @classmethod
    def pdi(cls, s0: float, s1: float) -> "BinaryMechanism":
        return cls(MechanismKind.PDI, s0, s0, s1, s1)

    @classmethod
    def identity(cls, kind: MechanismKind | str = MechanismKind.PDD) -> "BinaryMechanism":
        return cls(MechanismKind(kind), 1.0, 1.0, 1.0, 1.0)

    def stay_table(self) -> np.ndarray:
        """``stay[i, j] = s_ij``."""
        return np.array([[self.s00, self.s01], [self.s10, self.s11]])


def q_function(x):
    """Standard normal upper tail ``P(Z > x)``; accepts scalars or arrays."""
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(float(x) / _SQRT2)
    return 0.5 * erfc(np.asarray(x, dtype=float) / _SQRT2)


def binary_map_accuracy(joint_hat: JointBinary) -> float:
    """MAP accuracy of guessing ``Y`` from ``X_hat``: sum over outputs of the larger joint mass."""
    t = joint_hat.as_array()
    return float(t.max(axis=1).sum())


def mechanism_joint(joint: JointBinary, mech: BinaryMechanism) -> JointBinary:
    """Joint table of ``(X_hat, Y)`` after applying ``mech`` to ``(X, Y)``."""
    p = joint.as_array()
    stay = mech.stay_table()
    out = np.empty((2, 2))
    for xh in (0, 1):
        for y in (0, 1):
            out[xh, y] = p[xh, y] * stay[xh, y] + p[1 - xh, y] * (1.0 - stay[1 - xh, y])
    return JointBinary.from_array(out)


def expected_hamming_distortion(joint: JointBinary, mech: BinaryMechanism) -> float:
    """``P(X_hat != X)``."""
    return float(np.sum(joint.as_array() * (1.0 - mech.stay_table())))


def mutual_information(joint: JointBinary, base: float = math.e) -> float:
    """``I(X;Y)`` of a 2x2 joint table, in nats unless ``base`` is given."""
    t = joint.as_array()
    mask = t > 0
    # log-domain ratio: products of tiny marginals underflow
    with np.errstate(divide="ignore", invalid="ignore"):
        log_ratio = np.log(t) - np.log(t.sum(axis=1))[:, None] - np.log(t.sum(axis=0))[None, :]
    mi = float(np.sum(t[mask] * log_ratio[mask]))
    mi = max(mi, 0.0)
    if base != math.e:
        mi /= math.log(base)
    return mi


def mutual_information_bits(joint_hat: JointBinary) -> float:
    """Alias of :func:`mutual_information` kept for the published operation name.

    Despite the name the value is in nats, matching the tradeoff tables.
    """
    return mutual_information(joint_hat)


ALPHA_FLOOR = 1e-12


def gauss_map_accuracy_closed(alpha, ptilde: float):
    """Equal-variance MAP detection probability for normalised separation ``alpha``.

    ``alpha`` is the distance between the class means divided by the common
    standard deviation. For ``alpha`` below ``ALPHA_FLOOR`` (including any
    non-positive value) the classes are treated as inseparable and the prior
    guess ``max(ptilde, 1 - ptilde)`` is returned.
    """
    a = np.asarray(alpha, dtype=float)
    prior_guess = max(ptilde, 1.0 - ptilde)
    log_ratio = math.log((1.0 - ptilde) / ptilde)
    safe = np.where(a > ALPHA_FLOOR, a, 1.0)
    acc = ptilde * q_function(-safe / 2 + log_ratio / safe) + (1 - ptilde) * q_function(
        -safe / 2 - log_ratio / safe
    )
    acc = np.where(a > ALPHA_FLOOR, acc, prior_guess)
    return float(acc) if acc.ndim == 0 else acc


def _interval_mass(mean, sd, lo, hi):
    return ndtr((hi - mean) / sd) - ndtr((lo - mean) / sd)


def map_accuracy_arrays(prior1: float, mean0, var0, mean1, var1) -> np.ndarray:
    """Vectorised exact MAP accuracy for two Gaussian classes.

    Solves the log-likelihood-ratio boundary in closed form and sums the
    prior-weighted Gaussian masses of the correct-decision regions.
    """
    mean0, var0, mean1, var1 = np.broadcast_arrays(
        *(np.asarray(v, dtype=float) for v in (mean0, var0, mean1, var1))
    )
    prior0 = 1.0 - prior1
    sd0, sd1 = np.sqrt(var0), np.sqrt(var1)
    out = np.empty(mean0.shape)

    equal = np.abs(var0 - var1) < 1e-12 * np.maximum(var0, var1)
    if np.any(equal):
        alpha = np.abs(mean1[equal] - mean0[equal]) / sd0[equal]
        out[equal] = gauss_map_accuracy_closed(alpha, prior1)

    uneq = ~equal
    if np.any(uneq):
        m0, v0, s0 = mean0[uneq], var0[uneq], sd0[uneq]
        m1, v1, s1 = mean1[uneq], var1[uneq], sd1[uneq]
        # decide Y=1 where a x^2 + b x + c > 0
        a = 0.5 / v0 - 0.5 / v1
        b = m1 / v1 - m0 / v0
        c = 0.5 * m0**2 / v0 - 0.5 * m1**2 / v1 + 0.5 * np.log(v0 / v1) + math.log(prior1 / prior0)
        disc = b * b - 4 * a * c
        res = np.where(a > 0, prior1, prior0)
        two = disc > 0
        if np.any(two):
            a2, b2, c2 = a[two], b[two], c[two]
            sq = np.sqrt(disc[two])
            qq = -0.5 * (b2 + np.where(b2 >= 0, sq, -sq))
            r_a = qq / a2
            r_b = np.where(qq != 0, c2 / np.where(qq != 0, qq, 1.0), r_a)
            lo, hi = np.minimum(r_a, r_b), np.maximum(r_a, r_b)
            in1 = _interval_mass(m1[two], s1[two], lo, hi)
            in0 = _interval_mass(m0[two], s0[two], lo, hi)
            outside_is_one = a2 > 0
            res[two] = np.where(
                outside_is_one,
                prior1 * (1 - in1) + prior0 * in0,
                prior1 * in1 + prior0 * (1 - in0),
            )
        out[uneq] = res
    return out


def gauss_map_accuracy_general(pair: GaussPair) -> float:
    """Exact MAP accuracy of the hypothesis test described by ``pair``."""
    return float(
        map_accuracy_arrays(pair.prior1, pair.mean0, pair.var0, pair.mean1, pair.var1)
    )
