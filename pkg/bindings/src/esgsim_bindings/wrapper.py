"""Parallel multi-agent environment wrapper over the flat-array API.

Presents per-agent dictionaries in the style of simultaneous-action
multi-agent RL interfaces: every agent acts each step, observations are
shared, and rewards/terminations come back keyed by agent id.  Agent ids
are ``company_0..company_{M-1}`` and ``investor_0..investor_{N-1}``.

The wrapper consumes only the boundary functions in
:mod:`esgsim_bindings.api`, so any trajectory it produces is exactly what
an external trainer would see.
"""

from __future__ import annotations

import numpy as np

from . import api


class BindingError(RuntimeError):
    """Raised by the wrapper when a boundary call reports a failure."""


class ParallelMarketEnv:
    """Simultaneous-action multi-agent view of one market episode."""

    def __init__(self, config_document) -> None:
        handle = api.env_create(config_document)
        if not handle:
            raise BindingError(api.last_error() or "environment creation failed")
        self._handle = handle
        self.n_companies, self.n_investors = api.env_num_agents(handle)
        self.observation_size = api.env_observation_size(handle)
        self.company_agents = [f"company_{i}" for i in range(self.n_companies)]
        self.investor_agents = [f"investor_{j}" for j in range(self.n_investors)]
        self.possible_agents = self.company_agents + self.investor_agents
        self.agents: list[str] = []
        self._closed = False

    # -- lifecycle ---------------------------------------------------------

    def reset(self, climate_seed: int = 0, policy_seed: int = 0):
        obs = api.env_reset(self._handle, climate_seed, policy_seed)
        if obs is None:
            raise BindingError(api.last_error() or "reset failed")
        self.agents = list(self.possible_agents)
        infos = {agent: {} for agent in self.agents}
        return {agent: obs.copy() for agent in self.agents}, infos

    def step(self, actions: dict):
        """Apply one joint action dict; returns per-agent result dicts."""
        if self._closed:
            raise BindingError("environment is closed")
        company = np.zeros((self.n_companies, 3))
        investor = np.zeros((self.n_investors, self.n_companies))
        for i, agent in enumerate(self.company_agents):
            if agent in actions:
                company[i] = np.asarray(actions[agent], dtype=np.float64)
        for j, agent in enumerate(self.investor_agents):
            if agent in actions:
                investor[j] = np.asarray(actions[agent], dtype=np.float64)

        result = api.env_step(self._handle, company.ravel(), investor.ravel())
        if result is None:
            raise BindingError(api.last_error() or "step failed")
        obs, rewards, dones, info = result

        observations = {agent: obs.copy() for agent in self.possible_agents}
        reward_map = {
            agent: float(rewards[k]) for k, agent in enumerate(self.possible_agents)
        }
        terminations = {
            agent: bool(dones[k]) for k, agent in enumerate(self.possible_agents)
        }
        truncations = {agent: False for agent in self.possible_agents}
        infos = {agent: info for agent in self.possible_agents}
        self.agents = [a for a in self.possible_agents if not terminations[a]]
        return observations, reward_map, terminations, truncations, infos

    def close(self) -> None:
        if not self._closed:
            if not api.env_close(self._handle):
                raise BindingError(api.last_error() or "close failed")
            self._closed = True

    def __enter__(self) -> "ParallelMarketEnv":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
