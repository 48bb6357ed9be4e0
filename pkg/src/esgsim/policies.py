"""Scripted policy library and action-masking utilities.

The scripted company kinds are constant-fraction spenders used for payoff
analysis and baseline scenarios: a cooperator puts 0.5% of capital into
mitigation every year, a defector spends nothing, a resilience defector
puts 0.5% into resilience, and a greenwasher 0.3% into greenwashing.

Scripted investors are either profit-driven (invest in every active
company) or infinitely ESG-conscious (invest only in the active companies
whose last disclosed score attains the maximum; ties select all argmax
companies, which splits capital equally through the redistribution rule).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .market import CompanyAction, InvestorAction, MarketState


class CompanyPolicyKind(str, Enum):
    COOPERATOR = "cooperator"
    DEFECTOR = "defector"
    RESILIENCE_DEFECTOR = "resilience_defector"
    GREENWASHER = "greenwasher"
    CUSTOM = "custom"


class InvestorPolicyKind(str, Enum):
    PROFIT_DRIVEN = "profit_driven"
    INFINITELY_CONSCIOUS = "infinitely_conscious"


SCRIPTED_FRACTIONS: dict[CompanyPolicyKind, tuple[float, float, float]] = {
    CompanyPolicyKind.COOPERATOR: (0.005, 0.0, 0.0),
    CompanyPolicyKind.DEFECTOR: (0.0, 0.0, 0.0),
    CompanyPolicyKind.RESILIENCE_DEFECTOR: (0.0, 0.0, 0.005),
    CompanyPolicyKind.GREENWASHER: (0.0, 0.003, 0.0),
}


@dataclass(frozen=True)
class ScriptedCompanyPolicy:
    """Constant-fraction company policy; observations are ignored."""

    kind: CompanyPolicyKind
    mitigation_frac: float = 0.0
    greenwash_frac: float = 0.0
    resilience_frac: float = 0.0

    @classmethod
    def of(cls, kind: CompanyPolicyKind | str) -> "ScriptedCompanyPolicy":
        kind = CompanyPolicyKind(kind)
        if kind is CompanyPolicyKind.CUSTOM:
            raise ValueError("custom policies need explicit fractions; use custom()")
        return cls(kind, *SCRIPTED_FRACTIONS[kind])

    @classmethod
    def custom(cls, mitigation: float, greenwash: float, resilience: float) -> "ScriptedCompanyPolicy":
        return cls(CompanyPolicyKind.CUSTOM, mitigation, greenwash, resilience)

    def fractions(self) -> np.ndarray:
        return np.array([self.mitigation_frac, self.greenwash_frac, self.resilience_frac])

    # engine protocol: per-period batched action for this company's slot
    def company_batch_actions(
        self, t: int, state: MarketState, index: int, uniforms: np.ndarray | None
    ) -> np.ndarray:
        return np.broadcast_to(self.fractions(), state.batch_shape + (3,))


@dataclass(frozen=True)
class ScriptedInvestorPolicy:
    """Scripted investor; `alpha` is the preference used for reward bookkeeping.

    The infinitely conscious kind acts lexicographically on ESG scores no
    matter what `alpha` says; the numeric value only enters the logged
    reward.  It defaults to the highest consciousness level used in the
    learning scenarios so logged rewards stay finite.
    """

    kind: InvestorPolicyKind
    alpha: float = 0.0

    @classmethod
    def profit_driven(cls) -> "ScriptedInvestorPolicy":
        return cls(InvestorPolicyKind.PROFIT_DRIVEN, alpha=0.0)

    @classmethod
    def infinitely_conscious(cls, alpha: float = 10.0) -> "ScriptedInvestorPolicy":
        return cls(InvestorPolicyKind.INFINITELY_CONSCIOUS, alpha=alpha)

    def investor_batch_actions(
        self, t: int, state: MarketState, index: int, uniforms: np.ndarray | None
    ) -> np.ndarray:
        active = state.active.astype(np.float64)
        if self.kind is InvestorPolicyKind.PROFIT_DRIVEN:
            return active.copy()
        return conscious_flags(state.esg, state.active)


def conscious_flags(esg: np.ndarray, active: np.ndarray) -> np.ndarray:
    """Flags on the active companies whose score attains the active maximum.

    All-bankrupt rows yield all-zero flags (the investor holds cash).
    Scores enter as observed at decision time, i.e. the previous period's
    disclosure.
    """
    esg = np.asarray(esg, dtype=np.float64)
    masked = np.where(active, esg, -np.inf)
    best = masked.max(axis=-1, keepdims=True)
    any_active = np.isfinite(best)
    flags = (masked == best) & active & any_active
    return flags.astype(np.float64)


def company_action(policy: ScriptedCompanyPolicy, obs=None, active: bool = True) -> CompanyAction:
    """Single-agent view of a scripted company decision."""
    if not active:
        return CompanyAction()
    f = policy.fractions()
    return CompanyAction(float(f[0]), float(f[1]), float(f[2]))


def investor_action(
    policy: ScriptedInvestorPolicy, esg_scores: np.ndarray, active_mask: np.ndarray
) -> InvestorAction:
    """Single-agent view of a scripted investor decision."""
    active = np.asarray(active_mask, dtype=bool)
    if policy.kind is InvestorPolicyKind.PROFIT_DRIVEN:
        flags = active.astype(np.float64)
    else:
        flags = conscious_flags(np.asarray(esg_scores), active)
    return InvestorAction(tuple(int(x) for x in flags))


def mask_actions(
    company_actions: np.ndarray, investor_flags: np.ndarray, bankrupt: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Zero bankrupt companies' actions and flags pointed at them."""
    active = ~np.asarray(bankrupt, dtype=bool)
    masked_company = np.asarray(company_actions, dtype=np.float64) * active[..., None]
    masked_flags = np.asarray(investor_flags, dtype=np.float64) * active[..., None, :]
    return masked_company, masked_flags
