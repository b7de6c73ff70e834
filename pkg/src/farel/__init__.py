"""Fairness-aware multi-objective reinforcement learning toolkit."""

__version__ = "0.1.0"

from .objectives import CANONICAL_OBJECTIVES, RewardVector, assemble_reward

__all__ = ["CANONICAL_OBJECTIVES", "RewardVector", "assemble_reward", "__version__"]
