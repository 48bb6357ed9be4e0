"""Multi-agent climate-investment market simulation toolkit."""

from .climate import (
    ClimateParams,
    ClimateRisks,
    EventOutcome,
    calibrate_elasticity,
    derive_growth_rates,
    overall_risk,
    risk_at,
    sample_events,
)
from .engine import (
    BatchResult,
    ConfigError,
    EpisodeDriver,
    EpisodeRecord,
    PolicyAssignment,
    ScenarioConfig,
    derive_seed_pair,
    run_batch,
    run_episode,
    scenario_preset,
    scripted_assignment,
    write_outputs,
)
from .market import CompanyAction, Dynamics, InvestorAction, MarketState, step
from .policies import ScriptedCompanyPolicy, ScriptedInvestorPolicy
from .schelling import SchellingCurve, is_social_dilemma, schelling_curve, write_curve

__all__ = [
    "BatchResult",
    "ClimateParams",
    "ClimateRisks",
    "CompanyAction",
    "ConfigError",
    "Dynamics",
    "EpisodeDriver",
    "EpisodeRecord",
    "EventOutcome",
    "InvestorAction",
    "MarketState",
    "PolicyAssignment",
    "ScenarioConfig",
    "SchellingCurve",
    "ScriptedCompanyPolicy",
    "ScriptedInvestorPolicy",
    "calibrate_elasticity",
    "derive_growth_rates",
    "derive_seed_pair",
    "is_social_dilemma",
    "overall_risk",
    "risk_at",
    "run_batch",
    "run_episode",
    "sample_events",
    "scenario_preset",
    "schelling_curve",
    "scripted_assignment",
    "step",
    "write_outputs",
]

__version__ = "0.1.0"
