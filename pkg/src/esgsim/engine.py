"""Scenario configuration, episode orchestration, metrics, and persistence.

An episode advances the market for `horizon` periods (period 0 is calendar
year 2021).  The driver pre-draws every random number an episode will
consume from two independent streams:

* the climate stream (event uniforms and, in gaussian-damage mode, loss
  normals), seeded by `climate_seed` alone when `fixed_climate_seed` is on
  so the underlying draws are identical across episodes, or by
  (climate_seed, episode_seed) otherwise;
* the policy stream (stochastic policy sampling and real-data action
  seeding), always derived from (policy_seed, episode_seed).

Because all noise is pre-drawn per episode and the transition math is
elementwise over the batch, running a batch of episodes vectorized is
bit-identical to running them one at a time with the same seeds.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import market
from .climate import ClimateParams, overall_risk
from .market import Dynamics, EpisodeCompleteError, MarketState
from .policies import (
    InvestorPolicyKind,
    ScriptedCompanyPolicy,
    ScriptedInvestorPolicy,
    conscious_flags,
)

START_YEAR = 2021

SeedEntropy = tuple[int, ...]
SeedPair = tuple[SeedEntropy, SeedEntropy]


class ConfigError(ValueError):
    """Invalid scenario configuration; message names the offending field."""


# defaults for the learner settings block carried by ScenarioConfig; the
# learner module asserts these stay in sync with its settings dataclass
LEARNER_BLOCK_DEFAULTS: dict[str, float | int] = {
    "iterations": 300,
    "episodes_per_iter": 4,
    "learning_rate": 0.05,
    "baseline_momentum": 0.9,
    "window": 50,
}


@dataclass(frozen=True)
class ScenarioConfig:
    """One reproducible experiment.

    Capital fields accept a scalar (applied to every agent) or a per-agent
    sequence; `esg_preference` likewise.  Defaults reproduce the reference
    setup: 5 companies at 10 T and 3 investors at 16 T (98 T total), 10%
    growth, disclosure mandate on, greenwashing and resilience disabled.
    """

    n_companies: int = 5
    n_investors: int = 3
    company_capital: float | tuple[float, ...] = 10.0
    investor_capital: float | tuple[float, ...] = 16.0
    growth_rate: float = 0.10
    greenwash_coefficient: float = 2.0
    esg_preference: float | tuple[float, ...] = 0.0
    horizon: int = 100
    disclosure: bool = True
    greenwash_enabled: bool = False
    resilience_enabled: bool = False
    more_info_obs: bool = False
    fixed_climate_seed: bool = True
    lock_in_years: int = 0
    strict_bankruptcy: bool = False
    gaussian_damage: bool = False
    gaussian_sigma_scale: float = 0.5
    real_data_seeding: bool = False
    real_data_periods: int = 10
    initial_vulnerability: float | tuple[float, ...] = 0.05
    resilience_efficiency: float | tuple[float, ...] = 5.0
    climate: ClimateParams = field(default_factory=ClimateParams)
    climate_seed: int = 0
    policy_seed: int = 0
    batch_size: int = 3
    learner: dict = field(default_factory=lambda: dict(LEARNER_BLOCK_DEFAULTS))

    # -- validation ------------------------------------------------------

    def validate(self) -> "ScenarioConfig":
        if self.n_companies < 1:
            raise ConfigError("companies: need at least one company")
        if self.n_investors < 0:
            raise ConfigError("investors: must be non-negative")
        if self.horizon < 0:
            raise ConfigError("horizon: must be non-negative")
        if self.growth_rate <= -1.0:
            raise ConfigError("growth_rate: must exceed -1")
        if self.greenwash_enabled and self.greenwash_coefficient <= 1.0:
            raise ConfigError("greenwash_coefficient: must exceed 1 when greenwashing is enabled")
        if self.lock_in_years < 0:
            raise ConfigError("lock_in_years: must be non-negative (0 disables lock-in)")
        if self.gaussian_sigma_scale < 0:
            raise ConfigError("gaussian_damage.sigma_scale: must be non-negative")
        if self.real_data_periods < 0:
            raise ConfigError("real_data_seeding.periods: must be non-negative")
        if self.batch_size < 1:
            raise ConfigError("batch_size: must be positive")
        for key in self.learner:
            if key not in LEARNER_BLOCK_DEFAULTS:
                raise ConfigError(f"learner.{key}: unknown config key")
        for name, arr, size in (
            ("company_capital", self.company_capitals(), self.n_companies),
            ("investor_capital", self.investor_capitals(), self.n_investors),
            ("initial_vulnerability", self.vulnerabilities(), self.n_companies),
            ("resilience_efficiency", self.efficiencies(), self.n_companies),
            ("esg_preference", self.preferences(), self.n_investors),
        ):
            if arr.shape != (size,):
                raise ConfigError(f"{name}: expected {size} values, got {arr.shape[0]}")
        if np.any(self.company_capitals() < 0) or np.any(self.investor_capitals() < 0):
            raise ConfigError("company_capital/investor_capital: must be non-negative")
        if np.any(self.vulnerabilities() < 0) or np.any(self.vulnerabilities() > 1):
            raise ConfigError("initial_vulnerability: must lie in [0, 1]")
        if np.any(self.efficiencies() <= 0):
            raise ConfigError("resilience_efficiency: must be positive")
        pref = self.preferences()
        if np.any(pref[np.isfinite(pref)] < 0):
            raise ConfigError("esg_preference: must be non-negative")
        return self

    # -- per-agent expansions --------------------------------------------

    def _expand(self, value, size: int) -> np.ndarray:
        if np.isscalar(value):
            return np.full(size, float(value))
        return np.asarray([float(v) for v in value])

    def company_capitals(self) -> np.ndarray:
        return self._expand(self.company_capital, self.n_companies)

    def investor_capitals(self) -> np.ndarray:
        return self._expand(self.investor_capital, self.n_investors)

    def vulnerabilities(self) -> np.ndarray:
        return self._expand(self.initial_vulnerability, self.n_companies)

    def efficiencies(self) -> np.ndarray:
        return self._expand(self.resilience_efficiency, self.n_companies)

    def preferences(self) -> np.ndarray:
        return self._expand(self.esg_preference, self.n_investors)

    def dynamics(self) -> Dynamics:
        return Dynamics(
            climate=self.climate,
            growth_rate=self.growth_rate,
            greenwash_coefficient=self.greenwash_coefficient,
            disclosure=self.disclosure,
            greenwash_enabled=self.greenwash_enabled,
            resilience_enabled=self.resilience_enabled,
            more_info_obs=self.more_info_obs,
            strict_bankruptcy=self.strict_bankruptcy,
            gaussian_damage=self.gaussian_damage,
            gaussian_sigma_scale=self.gaussian_sigma_scale,
            horizon=self.horizon,
        )

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        def plain(value):
            if isinstance(value, tuple):
                return list(value)
            if isinstance(value, float) and math.isinf(value):
                return "inf"
            return value

        climate = {
            f.name: getattr(self.climate, f.name)
            for f in fields(ClimateParams)
            if f.name != "horizon"
        }
        return {
            "companies": self.n_companies,
            "investors": self.n_investors,
            "company_capital": plain(self.company_capital),
            "investor_capital": plain(self.investor_capital),
            "growth_rate": self.growth_rate,
            "greenwash_coefficient": self.greenwash_coefficient,
            "esg_preference": plain(self.esg_preference),
            "horizon": self.horizon,
            "disclosure": self.disclosure,
            "greenwash_enabled": self.greenwash_enabled,
            "resilience_enabled": self.resilience_enabled,
            "more_info_obs": self.more_info_obs,
            "fixed_climate_seed": self.fixed_climate_seed,
            "lock_in_years": self.lock_in_years,
            "strict_bankruptcy": self.strict_bankruptcy,
            "gaussian_damage": {
                "enabled": self.gaussian_damage,
                "sigma_scale": self.gaussian_sigma_scale,
            },
            "real_data_seeding": {
                "enabled": self.real_data_seeding,
                "periods": self.real_data_periods,
            },
            "initial_vulnerability": plain(self.initial_vulnerability),
            "resilience_efficiency": plain(self.resilience_efficiency),
            "climate": climate,
            "seeds": {"climate": self.climate_seed, "policy": self.policy_seed},
            "batch_size": self.batch_size,
            "learner": dict(self.learner),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError(f"config document must be a mapping, got {type(data).__name__}")
        data = dict(data)

        def pop_block(key: str, allowed: set[str]) -> dict:
            block = data.pop(key, {})
            if block is None:
                return {}
            if not isinstance(block, dict):
                raise ConfigError(f"{key}: expected a mapping")
            for sub in block:
                if sub not in allowed:
                    raise ConfigError(f"{key}.{sub}: unknown config key")
            return block

        def seq_or_scalar(value):
            if isinstance(value, str):
                return float(value)  # accepts "inf"
            if isinstance(value, (list, tuple)):
                return tuple(float(v) for v in value)
            return float(value)

        gaussian = pop_block("gaussian_damage", {"enabled", "sigma_scale"})
        realdata = pop_block("real_data_seeding", {"enabled", "periods"})
        seeds = pop_block("seeds", {"climate", "policy"})
        learner_block = pop_block("learner", set(LEARNER_BLOCK_DEFAULTS))
        climate_block = pop_block(
            "climate", {f.name for f in fields(ClimateParams) if f.name != "horizon"}
        )

        known = {
            "companies",
            "investors",
            "company_capital",
            "investor_capital",
            "growth_rate",
            "greenwash_coefficient",
            "esg_preference",
            "horizon",
            "disclosure",
            "greenwash_enabled",
            "resilience_enabled",
            "more_info_obs",
            "fixed_climate_seed",
            "lock_in_years",
            "strict_bankruptcy",
            "initial_vulnerability",
            "resilience_efficiency",
            "batch_size",
        }
        for key in data:
            if key not in known:
                raise ConfigError(f"{key}: unknown config key")

        defaults = cls()
        horizon = int(data.get("horizon", defaults.horizon))
        try:
            climate = ClimateParams(horizon=horizon, **climate_block)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"climate: {exc}") from exc

        try:
            cfg = cls(
                n_companies=int(data.get("companies", defaults.n_companies)),
                n_investors=int(data.get("investors", defaults.n_investors)),
                company_capital=seq_or_scalar(data.get("company_capital", defaults.company_capital)),
                investor_capital=seq_or_scalar(
                    data.get("investor_capital", defaults.investor_capital)
                ),
                growth_rate=float(data.get("growth_rate", defaults.growth_rate)),
                greenwash_coefficient=float(
                    data.get("greenwash_coefficient", defaults.greenwash_coefficient)
                ),
                esg_preference=seq_or_scalar(data.get("esg_preference", defaults.esg_preference)),
                horizon=horizon,
                disclosure=bool(data.get("disclosure", defaults.disclosure)),
                greenwash_enabled=bool(data.get("greenwash_enabled", defaults.greenwash_enabled)),
                resilience_enabled=bool(
                    data.get("resilience_enabled", defaults.resilience_enabled)
                ),
                more_info_obs=bool(data.get("more_info_obs", defaults.more_info_obs)),
                fixed_climate_seed=bool(
                    data.get("fixed_climate_seed", defaults.fixed_climate_seed)
                ),
                lock_in_years=int(data.get("lock_in_years", defaults.lock_in_years)),
                strict_bankruptcy=bool(data.get("strict_bankruptcy", defaults.strict_bankruptcy)),
                gaussian_damage=bool(gaussian.get("enabled", defaults.gaussian_damage)),
                gaussian_sigma_scale=float(
                    gaussian.get("sigma_scale", defaults.gaussian_sigma_scale)
                ),
                real_data_seeding=bool(realdata.get("enabled", defaults.real_data_seeding)),
                real_data_periods=int(realdata.get("periods", defaults.real_data_periods)),
                initial_vulnerability=seq_or_scalar(
                    data.get("initial_vulnerability", defaults.initial_vulnerability)
                ),
                resilience_efficiency=seq_or_scalar(
                    data.get("resilience_efficiency", defaults.resilience_efficiency)
                ),
                climate=climate,
                climate_seed=int(seeds.get("climate", defaults.climate_seed)),
                policy_seed=int(seeds.get("policy", defaults.policy_seed)),
                batch_size=int(data.get("batch_size", defaults.batch_size)),
                learner={**LEARNER_BLOCK_DEFAULTS, **learner_block},
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc
        return cfg.validate()


# -- scenario presets ------------------------------------------------------

def _scaled(m: int, n: int, **kw) -> ScenarioConfig:
    # scaled settings keep total wealth at 98 T, split evenly between sides
    return ScenarioConfig(
        n_companies=m, n_investors=n, company_capital=49.0 / m, investor_capital=49.0 / n, **kw
    )


PRESETS: dict[str, ScenarioConfig] = {
    "status_quo": ScenarioConfig(disclosure=False, esg_preference=0.0),
    "mandate": ScenarioConfig(disclosure=True, esg_preference=0.0),
    "conscious_0.5": ScenarioConfig(esg_preference=0.5),
    "conscious_1": ScenarioConfig(esg_preference=1.0),
    "conscious_10": ScenarioConfig(esg_preference=10.0),
    "heterogeneous": ScenarioConfig(esg_preference=(0.0, 10.0, 10.0)),
    "greenwash_beta2": ScenarioConfig(
        greenwash_enabled=True, greenwash_coefficient=2.0, esg_preference=1.0
    ),
    "greenwash_beta10": ScenarioConfig(
        greenwash_enabled=True, greenwash_coefficient=10.0, esg_preference=1.0
    ),
    "greenwash_beta20": ScenarioConfig(
        greenwash_enabled=True, greenwash_coefficient=20.0, esg_preference=1.0
    ),
    "more_info": ScenarioConfig(more_info_obs=True),
    "no_investor_info": ScenarioConfig(n_investors=0, esg_preference=(), more_info_obs=True),
    "resilience": ScenarioConfig(resilience_enabled=True, esg_preference=10.0),
    "lockin": ScenarioConfig(lock_in_years=5),
    "uncertain_damage": ScenarioConfig(gaussian_damage=True),
    "strict_bankruptcy": ScenarioConfig(strict_bankruptcy=True),
    "realdata_seed": ScenarioConfig(real_data_seeding=True),
    "scale_10x10": _scaled(10, 10),
    "scale_25x25": _scaled(25, 25),
}


def scenario_preset(name: str) -> ScenarioConfig:
    """Named experiment configuration; unknown names list the valid set."""
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(
            f"unknown preset {name!r}; valid presets: {', '.join(sorted(PRESETS))}"
        ) from None


# -- policy assignment ------------------------------------------------------

@dataclass
class PolicyAssignment:
    """Per-agent policy objects driving one episode."""

    companies: list
    investors: list

    def __post_init__(self) -> None:
        self._static_company = None
        self._static_bcast = None
        if self.companies and all(isinstance(p, ScriptedCompanyPolicy) for p in self.companies):
            self._static_company = np.stack([p.fractions() for p in self.companies])
        # one shared scripted kind lets the batch path skip per-agent stacking
        self._uniform_investor_kind = None
        if self.investors and all(isinstance(p, ScriptedInvestorPolicy) for p in self.investors):
            kinds = {p.kind for p in self.investors}
            if len(kinds) == 1:
                self._uniform_investor_kind = kinds.pop()

    @property
    def stochastic(self) -> bool:
        return any(getattr(p, "stochastic", False) for p in self.companies) or any(
            getattr(p, "stochastic", False) for p in self.investors
        )

    def company_actions(self, t: int, state: MarketState, uniforms) -> np.ndarray:
        if self._static_company is not None:
            cached = self._static_bcast
            if cached is None or cached.shape[:-2] != state.batch_shape:
                cached = np.broadcast_to(
                    self._static_company, state.batch_shape + self._static_company.shape
                )
                self._static_bcast = cached
            return cached
        cols = [
            p.company_batch_actions(
                t, state, i, None if uniforms is None else uniforms[..., i, :]
            )
            for i, p in enumerate(self.companies)
        ]
        return np.stack(cols, axis=-2)

    def investor_actions(self, t: int, state: MarketState, uniforms) -> np.ndarray:
        n = len(self.investors)
        if not n:
            return np.zeros(state.batch_shape + (0, state.n_companies))
        if self._uniform_investor_kind is not None:
            if self._uniform_investor_kind is InvestorPolicyKind.PROFIT_DRIVEN:
                row = state.active.astype(np.float64)
            else:
                row = conscious_flags(state.esg, state.active)
            return np.broadcast_to(
                row[..., None, :], state.batch_shape + (n, state.n_companies)
            )
        rows = [
            p.investor_batch_actions(
                t, state, j, None if uniforms is None else uniforms[..., j, :]
            )
            for j, p in enumerate(self.investors)
        ]
        return np.stack(rows, axis=-2)


COMPANY_KIND_ALIASES = {
    "cooperator": "cooperator",
    "defector": "defector",
    "resilience_defector": "resilience_defector",
    "greenwasher": "greenwasher",
}
INVESTOR_KIND_ALIASES = {
    "profit": "profit_driven",
    "profit_driven": "profit_driven",
    "conscious": "infinitely_conscious",
    "infinitely_conscious": "infinitely_conscious",
}


def scripted_assignment(
    config: ScenarioConfig,
    company_kind: str | list[str] = "defector",
    investor_kind: str | list[str] = "profit_driven",
) -> PolicyAssignment:
    """All-scripted assignment from kind names (one for all, or one each)."""
    if isinstance(company_kind, str):
        company_kind = [company_kind] * config.n_companies
    if isinstance(investor_kind, str):
        investor_kind = [investor_kind] * config.n_investors
    if len(company_kind) != config.n_companies:
        raise ConfigError(f"company policies: expected {config.n_companies} kinds")
    if len(investor_kind) != config.n_investors:
        raise ConfigError(f"investor policies: expected {config.n_investors} kinds")
    companies = [ScriptedCompanyPolicy.of(COMPANY_KIND_ALIASES.get(k, k)) for k in company_kind]
    investors = []
    for k in investor_kind:
        resolved = INVESTOR_KIND_ALIASES.get(k, k)
        if resolved == "profit_driven":
            investors.append(ScriptedInvestorPolicy.profit_driven())
        elif resolved == "infinitely_conscious":
            investors.append(ScriptedInvestorPolicy.infinitely_conscious())
        else:
            raise ConfigError(f"investor policy: unknown kind {k!r}")
    return PolicyAssignment(companies, investors)


# -- seeds ------------------------------------------------------------------

def derive_seed_pair(config: ScenarioConfig, episode_seed: int) -> SeedPair:
    """Entropy tuples for the climate and policy streams of one episode.

    With a fixed climate seed the climate entropy ignores the episode seed,
    so the underlying event draws are constant across episodes.
    """
    if config.fixed_climate_seed:
        climate = (config.climate_seed,)
    else:
        climate = (config.climate_seed, int(episode_seed))
    return climate, (config.policy_seed, int(episode_seed))


def _as_seed_pair(config: ScenarioConfig, seed) -> SeedPair:
    if isinstance(seed, (int, np.integer)):
        return derive_seed_pair(config, int(seed))
    climate, policy = seed
    climate = (int(climate),) if isinstance(climate, (int, np.integer)) else tuple(climate)
    policy = (int(policy),) if isinstance(policy, (int, np.integer)) else tuple(policy)
    return climate, policy


# -- episode records ---------------------------------------------------------

@dataclass(frozen=True)
class EpisodeSummary:
    p_end: float
    w_end: float
    events_total: int
    bankruptcies: int
    mitigation_total: float

    def to_dict(self) -> dict:
        return {
            "P100": self.p_end,
            "W100": self.w_end,
            "events_total": self.events_total,
            "bankruptcies": self.bankruptcies,
            "mitigation_total": self.mitigation_total,
        }


@dataclass
class EpisodeRecord:
    """Per-period trajectory rows plus the ending summary."""

    n_companies: int
    n_investors: int
    seed_pair: SeedPair
    risks: np.ndarray  # (T, 3)
    overall: np.ndarray  # (T,)
    events: np.ndarray  # (T, 3) int
    capital: np.ndarray  # (T, M)
    esg: np.ndarray  # (T, M)
    vulnerability: np.ndarray  # (T, M)
    actions: np.ndarray  # (T, M, 3)
    company_rewards: np.ndarray  # (T, M)
    bankrupt: np.ndarray  # (T, M) int
    holdings: np.ndarray  # (T, N, M)
    cash: np.ndarray  # (T, N)
    investor_rewards: np.ndarray  # (T, N)
    cumulative_mitigation: np.ndarray  # (T,)
    summary: EpisodeSummary

    @property
    def periods(self) -> int:
        return self.risks.shape[0]

    def header(self) -> list[str]:
        cols = ["t", "year", "risk_h", "risk_p", "risk_d", "risk_overall", "ev_h", "ev_p", "ev_d"]
        for i in range(1, self.n_companies + 1):
            cols += [f"K{i}", f"Q{i}", f"L{i}", f"um{i}", f"ug{i}", f"ur{i}", f"rew{i}", f"bankrupt{i}"]
        for j in range(1, self.n_investors + 1):
            cols += [f"H{j}_{i}" for i in range(1, self.n_companies + 1)]
            cols += [f"C{j}", f"rew{j}"]
        return cols

    def rows(self):
        for t in range(self.periods):
            row: list = [t, START_YEAR + t]
            row += [self.risks[t, 0], self.risks[t, 1], self.risks[t, 2], self.overall[t]]
            row += [int(self.events[t, 0]), int(self.events[t, 1]), int(self.events[t, 2])]
            for i in range(self.n_companies):
                row += [
                    self.capital[t, i],
                    self.esg[t, i],
                    self.vulnerability[t, i],
                    self.actions[t, i, 0],
                    self.actions[t, i, 1],
                    self.actions[t, i, 2],
                    self.company_rewards[t, i],
                    int(self.bankrupt[t, i]),
                ]
            for j in range(self.n_investors):
                row += list(self.holdings[t, j])
                row += [self.cash[t, j], self.investor_rewards[t, j]]
            yield row


@dataclass
class BatchResult:
    """Per-episode summaries plus cross-seed aggregates."""

    records: list[EpisodeRecord]
    seeds: list

    @property
    def summaries(self) -> list[EpisodeSummary]:
        return [r.summary for r in self.records]

    def aggregate(self) -> dict:
        keys = ["P100", "W100", "events_total", "bankruptcies", "mitigation_total"]
        table = {k: np.array([s.to_dict()[k] for s in self.summaries], dtype=float) for k in keys}
        out = {}
        for k, v in table.items():
            out[f"{k}_mean"] = float(v.mean())
            out[f"{k}_stderr"] = float(v.std(ddof=1) / np.sqrt(len(v))) if len(v) > 1 else 0.0
        out["episodes"] = len(self.records)
        return out


# -- the episode driver -------------------------------------------------------

class EpisodeDriver:
    """Pre-seeded stepping core shared by the runner and external bindings.

    Holds a (possibly batched) market state, the pre-drawn noise plan, and
    the per-period recording buffers.  `step` applies lock-in replay and
    real-data action seeding before delegating to the market transition.
    """

    def __init__(self, config: ScenarioConfig, seeds: list) -> None:
        config.validate()
        self.config = config
        self.dynamics = config.dynamics()
        self.seed_pairs = [_as_seed_pair(config, s) for s in seeds]
        self.batch = len(self.seed_pairs)
        self.reset()

    def _alloc(self) -> None:
        # rows are appended per period and stacked once at the end; every
        # array the transition emits is fresh, so holding references is safe
        self._trace: dict[str, list[np.ndarray]] = {
            name: []
            for name in (
                "risks",
                "events",
                "capital",
                "esg",
                "vuln",
                "actions",
                "crew",
                "bankrupt",
                "holdings",
                "cash",
                "irew",
                "cum_mit",
            )
        }

    def reset(self) -> np.ndarray:
        cfg = self.config
        m, n, t_max = cfg.n_companies, cfg.n_investors, cfg.horizon
        self._alloc()
        self.state = market.initial_state(
            cfg.company_capitals(),
            cfg.investor_capitals(),
            cfg.vulnerabilities(),
            cfg.efficiencies(),
            cfg.preferences(),
            cfg.climate,
            batch_shape=(self.batch,),
        )
        self._locked_company = np.zeros((self.batch, m, 3))
        self._locked_investor = np.zeros((self.batch, n, m))

        event_u = np.empty((self.batch, t_max, 3))
        normals = np.empty((self.batch, t_max, m, 3)) if cfg.gaussian_damage else None
        realdata_u = None
        seeded = 0
        if cfg.real_data_seeding:
            seeded = math.ceil(m / 2)
            realdata_u = np.empty((self.batch, t_max, seeded))
        for b, (climate_ent, policy_ent) in enumerate(self.seed_pairs):
            cg = np.random.default_rng(np.random.SeedSequence(list(climate_ent)))
            event_u[b] = cg.random((t_max, 3))
            if normals is not None:
                normals[b] = cg.standard_normal((t_max, m, 3))
            if realdata_u is not None:
                _, realdata_seq = np.random.SeedSequence(list(policy_ent)).spawn(2)
                rg = np.random.default_rng(realdata_seq)
                # mitigation fractions in [0.005, 0.01] for the seeded half
                realdata_u[b] = 0.005 + 0.005 * rg.random((t_max, seeded))
        self._event_uniforms = event_u
        self._damage_normals = normals
        self._realdata_fracs = realdata_u
        self._n_seeded = seeded
        self._policy_uniforms_company = None
        self._policy_uniforms_investor = None
        self.done = t_max == 0
        return market.build_observations(self.state, self.dynamics)

    def prepare_policy_uniforms(self) -> None:
        """Pre-draw per-period sampling uniforms for stochastic policies."""
        cfg = self.config
        t_max, m, n = cfg.horizon, cfg.n_companies, cfg.n_investors
        uc = np.empty((self.batch, t_max, m, 3))
        ui = np.empty((self.batch, t_max, n, m))
        for b, (_, policy_ent) in enumerate(self.seed_pairs):
            root = np.random.SeedSequence(list(policy_ent))
            sampling_seq, _ = root.spawn(2)
            g = np.random.default_rng(sampling_seq)
            uc[b] = g.random((t_max, m, 3))
            ui[b] = g.random((t_max, n, m))
        self._policy_uniforms_company = uc
        self._policy_uniforms_investor = ui

    @property
    def t(self) -> int:
        return self.state.t

    def policy_uniforms(self, t: int):
        if self._policy_uniforms_company is None:
            return None, None
        return self._policy_uniforms_company[:, t], self._policy_uniforms_investor[:, t]

    def step(self, company_actions: np.ndarray, investor_actions: np.ndarray) -> market.StepOutput:
        if self.done:
            raise EpisodeCompleteError("episode is complete; reset before stepping again")
        t = self.state.t
        cfg = self.config

        comp = np.asarray(company_actions, dtype=np.float64)
        inv = np.asarray(investor_actions, dtype=np.float64)
        if cfg.lock_in_years > 0:
            if t % cfg.lock_in_years == 0:
                self._locked_company = comp.copy()
                self._locked_investor = inv.copy()
            else:  # intermediate submissions are ignored
                comp = self._locked_company
                inv = self._locked_investor
        if cfg.real_data_seeding and t < cfg.real_data_periods and self._n_seeded:
            comp = comp.copy()
            comp[..., : self._n_seeded, 0] = self._realdata_fracs[:, t]

        normals_t = None if self._damage_normals is None else self._damage_normals[:, t]
        out = market.step(
            self.state, comp, inv, self._event_uniforms[:, t], self.dynamics, normals_t
        )
        self.state = out.state

        trace = self._trace
        trace["risks"].append(out.state.risks)
        trace["events"].append(out.events)
        trace["capital"].append(out.state.capital)
        trace["esg"].append(out.state.esg)
        trace["vuln"].append(out.state.vulnerability)
        trace["actions"].append(out.actions)
        trace["crew"].append(out.company_rewards)
        trace["bankrupt"].append(out.state.bankrupt)
        trace["holdings"].append(out.state.holdings)
        trace["cash"].append(out.state.cash)
        trace["irew"].append(out.investor_rewards)
        trace["cum_mit"].append(out.state.cumulative_mitigation)
        self.done = out.state.t >= cfg.horizon
        return out

    def records(self) -> list[EpisodeRecord]:
        if not self.done:
            raise RuntimeError("episode still running; records available once done")
        cfg = self.config
        m, n, t_max = cfg.n_companies, cfg.n_investors, cfg.horizon

        def stacked(name: str, shape: tuple[int, ...], dtype=np.float64) -> np.ndarray:
            rows = self._trace[name]
            if not rows:
                return np.zeros((self.batch, 0) + shape, dtype=dtype)
            return np.stack(rows, axis=1).astype(dtype, copy=False)

        risks = stacked("risks", (3,))
        events = stacked("events", (3,), np.int8)
        capital = stacked("capital", (m,))
        esg = stacked("esg", (m,))
        vuln = stacked("vuln", (m,))
        actions = stacked("actions", (m, 3))
        crew = stacked("crew", (m,))
        bankrupt = stacked("bankrupt", (m,), np.int8)
        holdings = stacked("holdings", (n, m))
        cash = stacked("cash", (n,))
        irew = stacked("irew", (n,))
        cum_mit = stacked("cum_mit", ())

        out = []
        for b in range(self.batch):
            if t_max > 0:
                p_end = float(overall_risk(risks[b, -1]))
                w_end = float(capital[b, -1].sum() + cash[b, -1].sum())
                bankruptcies = int(bankrupt[b, -1].sum())
                mitigation_total = float(cum_mit[b, -1])
            else:
                p_end = float(overall_risk(self.state.risks[b]))
                w_end = float(self.state.capital[b].sum() + self.state.cash[b].sum())
                bankruptcies = int(self.state.bankrupt[b].sum())
                mitigation_total = float(self.state.cumulative_mitigation[b])
            summary = EpisodeSummary(
                p_end=p_end,
                w_end=w_end,
                events_total=int(events[b].sum()),
                bankruptcies=bankruptcies,
                mitigation_total=mitigation_total,
            )
            out.append(
                EpisodeRecord(
                    n_companies=m,
                    n_investors=n,
                    seed_pair=self.seed_pairs[b],
                    risks=risks[b],
                    overall=1.0 - np.prod(1.0 - risks[b], axis=-1),
                    events=events[b],
                    capital=capital[b],
                    esg=esg[b],
                    vulnerability=vuln[b],
                    actions=actions[b],
                    company_rewards=crew[b],
                    bankrupt=bankrupt[b],
                    holdings=holdings[b],
                    cash=cash[b],
                    investor_rewards=irew[b],
                    cumulative_mitigation=cum_mit[b],
                    summary=summary,
                )
            )
        return out


# -- runners ------------------------------------------------------------------

def _drive(driver: EpisodeDriver, assignment: PolicyAssignment) -> list[EpisodeRecord]:
    if assignment.stochastic:
        driver.prepare_policy_uniforms()
    while not driver.done:
        t = driver.t
        uc, ui = driver.policy_uniforms(t)
        comp = assignment.company_actions(t, driver.state, uc)
        inv = assignment.investor_actions(t, driver.state, ui)
        driver.step(comp, inv)
    return driver.records()


def run_episode(config: ScenarioConfig, assignment: PolicyAssignment, seed_pair) -> EpisodeRecord:
    """Advance one full episode and return its record."""
    driver = EpisodeDriver(config, [seed_pair])
    return _drive(driver, assignment)[0]


def run_batch(config: ScenarioConfig, assignment: PolicyAssignment, seeds: list) -> BatchResult:
    """Run independent episodes vectorized; equals sequential runs bitwise."""
    if not list(seeds):
        raise ConfigError("seeds: need a non-empty seed list")
    driver = EpisodeDriver(config, list(seeds))
    return BatchResult(records=_drive(driver, assignment), seeds=list(seeds))


# -- persistence ---------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_episode_csv(record: EpisodeRecord, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        with open(path, "w") as f:
            f.write(",".join(record.header()) + "\n")
            for row in record.rows():
                f.write(",".join(_fmt(v) for v in row) + "\n")
    except OSError as exc:
        raise OSError(f"failed writing episode table to {path}: {exc}") from exc
    return path


def write_summary(summary_dict: dict, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        with open(path, "w") as f:
            json.dump(summary_dict, f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as exc:
        raise OSError(f"failed writing summary to {path}: {exc}") from exc
    return path


def write_outputs(result: EpisodeRecord | BatchResult, out_dir: Path | str) -> list[Path]:
    """Write per-period tables and summaries under `out_dir`."""
    out_dir = Path(out_dir)
    written: list[Path] = []
    if isinstance(result, EpisodeRecord):
        written.append(write_episode_csv(result, out_dir / "episode.csv"))
        written.append(write_summary(result.summary.to_dict(), out_dir / "summary.json"))
        return written
    for idx, record in enumerate(result.records):
        written.append(write_episode_csv(record, out_dir / f"episode_{idx:03d}.csv"))
        written.append(
            write_summary(record.summary.to_dict(), out_dir / f"summary_{idx:03d}.json")
        )
    batch_doc = result.aggregate()
    batch_doc["per_episode"] = [s.to_dict() for s in result.summaries]
    written.append(write_summary(batch_doc, out_dir / "batch_summary.json"))
    return written
