"""Environment bindings for external multi-agent RL trainers."""

from .api import (
    env_close,
    env_create,
    env_num_agents,
    env_observation_size,
    env_reset,
    env_step,
    last_error,
)
from .wrapper import BindingError, ParallelMarketEnv

__all__ = [
    "BindingError",
    "ParallelMarketEnv",
    "env_close",
    "env_create",
    "env_num_agents",
    "env_observation_size",
    "env_reset",
    "env_step",
    "last_error",
]
