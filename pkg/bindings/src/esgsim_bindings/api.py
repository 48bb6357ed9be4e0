"""Flat-array environment API for external trainers.

The surface mirrors a C symbol set: `env_create`, `env_step`, `env_reset`,
`env_close`, and `last_error`.  Functions never raise across this boundary;
failures return a null value (0, None, or False) and record a message
retrievable through `last_error()`.  Handles are explicit and must be
closed; operations on a closed or unknown handle fail cleanly.

Actions cross the boundary as flat numeric arrays: company actions of
length 3*M (mitigation, greenwash, resilience per company) and investor
actions of length M*N (flag rows per investor).  Observations come back as
the engine's shared flat vector; rewards and done flags are per-agent with
companies first, then investors.
"""

from __future__ import annotations

import threading

import numpy as np
import yaml

from esgsim.engine import ConfigError, EpisodeDriver, ScenarioConfig
from esgsim.market import EpisodeCompleteError, build_observations, observation_size

_lock = threading.Lock()
_registry: dict[int, "_EnvSlot"] = {}
_next_handle = 1
_last_error: str | None = None


class _EnvSlot:
    def __init__(self, config: ScenarioConfig) -> None:
        self.config = config
        self.driver = EpisodeDriver(config, [(config.climate_seed, config.policy_seed)])

    def observation(self) -> np.ndarray:
        return build_observations(self.driver.state, self.driver.dynamics)[0]


def _fail(message: str):
    global _last_error
    _last_error = message
    return None


def last_error() -> str | None:
    """Message from the most recent failed call, or None."""
    return _last_error


def env_create(config_document) -> int:
    """Create an environment from a YAML string or a plain mapping.

    Returns a positive handle, or 0 with `last_error()` set on failure.
    """
    global _next_handle, _last_error
    try:
        if isinstance(config_document, (str, bytes)):
            data = yaml.safe_load(config_document)
        else:
            data = config_document
        config = ScenarioConfig.from_dict(data)
    except ConfigError as exc:
        _fail(f"invalid config: {exc}")
        return 0
    except yaml.YAMLError as exc:
        _fail(f"malformed config document: {exc}")
        return 0
    except Exception as exc:  # never leak a raw crash across the boundary
        _fail(f"config error: {exc}")
        return 0
    with _lock:
        handle = _next_handle
        _next_handle += 1
        try:
            _registry[handle] = _EnvSlot(config)
        except Exception as exc:
            _fail(f"environment construction failed: {exc}")
            return 0
    _last_error = None
    return handle


def _slot(handle: int) -> "_EnvSlot | None":
    slot = _registry.get(handle)
    if slot is None:
        _fail(f"invalid or closed handle: {handle}")
    return slot


def env_observation_size(handle: int) -> int:
    """Length of the flat observation vector, or 0 on error."""
    slot = _slot(handle)
    if slot is None:
        return 0
    cfg = slot.config
    return observation_size(cfg.n_companies, cfg.n_investors, cfg.more_info_obs)


def env_num_agents(handle: int) -> tuple[int, int] | None:
    """(companies, investors), or None on error."""
    slot = _slot(handle)
    if slot is None:
        return None
    return slot.config.n_companies, slot.config.n_investors


def env_reset(handle: int, climate_seed: int, policy_seed: int) -> np.ndarray | None:
    """Reinitialize to t=0 with the given seed pair; returns the observation."""
    global _last_error
    slot = _slot(handle)
    if slot is None:
        return None
    try:
        cfg = slot.config
        # an explicit pair overrides the config seeds for this episode
        slot.driver = EpisodeDriver(cfg, [(int(climate_seed), int(policy_seed))])
        obs = slot.observation()
    except Exception as exc:
        return _fail(f"reset failed: {exc}")
    _last_error = None
    return obs


def env_step(handle: int, company_actions, investor_actions):
    """Advance one period.

    Returns (observations, rewards, dones, info) or None with `last_error()`
    set.  Rewards and dones are length M+N, companies first.  A company is
    done once bankrupt; all agents are done when the horizon is reached.
    """
    global _last_error
    slot = _slot(handle)
    if slot is None:
        return None
    cfg = slot.config
    m, n = cfg.n_companies, cfg.n_investors

    comp = np.asarray(company_actions, dtype=np.float64).ravel()
    inv = np.asarray(investor_actions, dtype=np.float64).ravel()
    if comp.shape != (3 * m,):
        return _fail(f"company action shape: expected {3 * m} values, got {comp.size}")
    if inv.shape != (m * n,):
        return _fail(f"investor action shape: expected {m * n} values, got {inv.size}")

    try:
        out = slot.driver.step(comp.reshape(1, m, 3), inv.reshape(1, n, m))
    except EpisodeCompleteError as exc:
        return _fail(f"episode complete: {exc}")
    except Exception as exc:
        return _fail(f"step failed: {exc}")

    state = out.state
    horizon_done = slot.driver.done
    rewards = np.concatenate([out.company_rewards[0], out.investor_rewards[0]])
    dones = np.concatenate(
        [
            state.bankrupt[0] | horizon_done,
            np.full(n, horizon_done, dtype=bool),
        ]
    )
    info = {
        "t": state.t,
        "year": 2021 + state.t - 1,
        "risks": state.risks[0].copy(),
        "events": out.events[0].copy(),
        "bankrupt": state.bankrupt[0].copy(),
        "cumulative_mitigation": float(state.cumulative_mitigation[0]),
        "wealth": float(state.capital[0].sum() + state.cash[0].sum()),
        "margins": out.margins[0].copy(),
        "applied_company_actions": out.actions[0].copy(),
    }
    _last_error = None
    return out.observations[0], rewards, dones, info


def env_close(handle: int) -> bool:
    """Release a handle; closing an unknown or closed handle fails cleanly."""
    global _last_error
    with _lock:
        if handle not in _registry:
            _fail(f"invalid or closed handle: {handle}")
            return False
        del _registry[handle]
    _last_error = None
    return True
