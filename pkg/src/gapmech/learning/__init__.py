"""Data-driven privatizer training: losses, models, Adam and the minimax loop."""

from .train import (
    AUGMENTED_LAGRANGIAN,
    PENALTY,
    History,
    TrainConfig,
    TrainingDivergedError,
    TrainResult,
    train_gap,
)

__all__ = [
    "AUGMENTED_LAGRANGIAN",
    "PENALTY",
    "History",
    "TrainConfig",
    "TrainResult",
    "TrainingDivergedError",
    "train_gap",
]
