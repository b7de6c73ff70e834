from .dqn import DqnAgent, DqnConfig, ReplayBuffer
from .pcn import Command, EpisodeRecord, PcnAgent, PcnConfig, PcnRolloutPolicy, UniformRandomPolicy, update_command

__all__ = [
    "Command",
    "DqnAgent",
    "DqnConfig",
    "EpisodeRecord",
    "PcnAgent",
    "PcnConfig",
    "PcnRolloutPolicy",
    "ReplayBuffer",
    "UniformRandomPolicy",
    "update_command",
]
