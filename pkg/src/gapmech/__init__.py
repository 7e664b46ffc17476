"""Optimal and learned privatization mechanisms for generative adversarial privacy.

The package covers two data models. In the binary model ``Y = X xor N``, and
mechanisms flip ``X`` with probabilities that may depend on ``Y``. In the
Gaussian model ``X | Y`` is a two-class Gaussian mixture, and mechanisms add
class-dependent shifts and noise. For each model there are exact MAP
evaluators, game-theoretically optimal mechanisms and a trainer that learns a
privatizer against an adversary from samples.
"""

from .binary import optimal_pdd, pdi_brute_force, theorem1_pdi
from .gaussian import (
    GaussMechanism,
    pdd_full_grid_search,
    theorem2_pdi,
    theorem3_pdd_shift,
    theorem4_shift_plus_noise,
)
from .probability import (
    BernoulliXorModel,
    BinaryMechanism,
    GaussMixture,
    GaussPair,
    JointBinary,
    ValidationError,
    binary_map_accuracy,
    gauss_map_accuracy_closed,
    gauss_map_accuracy_general,
    mechanism_joint,
    mutual_information,
    mutual_information_bits,
    q_function,
)

__version__ = "0.1.0"

__all__ = [
    "BernoulliXorModel",
    "BinaryMechanism",
    "GaussMechanism",
    "GaussMixture",
    "GaussPair",
    "JointBinary",
    "ValidationError",
    "binary_map_accuracy",
    "gauss_map_accuracy_closed",
    "gauss_map_accuracy_general",
    "mechanism_joint",
    "mutual_information",
    "mutual_information_bits",
    "optimal_pdd",
    "pdd_full_grid_search",
    "pdi_brute_force",
    "q_function",
    "theorem1_pdi",
    "theorem2_pdi",
    "theorem3_pdd_shift",
    "theorem4_shift_plus_noise",
]
