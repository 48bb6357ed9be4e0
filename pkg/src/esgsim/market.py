"""Market state transition: capital redistribution, spending, settlement.

One period runs, in order: investor capital redistribution, company
climate spending, system risk update, vulnerability and ESG updates, event
sampling, profit margins, settlement, rewards, bankruptcy resolution, and
observation building.

State is laid out struct-of-arrays so the same code path serves a single
episode and a vectorized batch: every array carries optional leading batch
axes, with companies on the last axis and investor holdings on the last two
axes (investor, company).  All operations are pure functions of their
inputs; randomness enters only through explicit pre-drawn uniforms/normals.

Monetary quantities are trillions of USD.  Total wealth is company capital
net of investor claims plus investor capital, which reduces to
sum(capital) + sum(cash) because holdings are embedded in company capital
between settlement and the next redistribution.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .climate import ClimateParams, risk_components

STRICT_MARGIN_THRESHOLD = -0.10
STRICT_MARGIN_YEARS = 3


class EpisodeCompleteError(RuntimeError):
    """Raised when stepping a state already at its horizon."""


@dataclass(frozen=True)
class CompanyAction:
    """Fractions of interim capital spent on mitigation/greenwash/resilience.

    Components are individually in [0, 1]; feasibility of the sum is checked
    when the action is applied, and overspending bankrupts the company.
    """

    mitigation_frac: float = 0.0
    greenwash_frac: float = 0.0
    resilience_frac: float = 0.0

    def __post_init__(self) -> None:
        for v in (self.mitigation_frac, self.greenwash_frac, self.resilience_frac):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"action components must lie in [0, 1], got {v}")

    def as_array(self) -> np.ndarray:
        return np.array([self.mitigation_frac, self.greenwash_frac, self.resilience_frac])


@dataclass(frozen=True)
class InvestorAction:
    """Binary invest/skip flags, one per company."""

    invest_flags: tuple[int, ...]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.invest_flags, dtype=np.float64)


@dataclass(frozen=True)
class CompanyState:
    """Value view of one company's slice of the market state."""

    capital: float
    esg_score: float
    vulnerability: float
    cumulative_resilience_spend: float
    initial_vulnerability: float
    resilience_efficiency: float
    bankrupt: bool
    margin_history: tuple[float, float, float]


@dataclass(frozen=True)
class InvestorState:
    """Value view of one investor's slice of the market state."""

    holdings: tuple[float, ...]
    cash: float
    esg_preference: float

    @property
    def total_capital(self) -> float:
        return float(sum(self.holdings) + self.cash)


@dataclass(frozen=True)
class Dynamics:
    """Per-scenario transition parameters consumed by :func:`step`."""

    climate: ClimateParams = field(default_factory=ClimateParams)
    growth_rate: float = 0.10
    greenwash_coefficient: float = 2.0
    disclosure: bool = True
    greenwash_enabled: bool = False
    resilience_enabled: bool = False
    more_info_obs: bool = False
    strict_bankruptcy: bool = False
    gaussian_damage: bool = False
    gaussian_sigma_scale: float = 0.5
    horizon: int = 100

    def __post_init__(self) -> None:
        if self.greenwash_enabled and self.greenwash_coefficient <= 1.0:
            raise ValueError("greenwash coefficient must exceed 1 when greenwashing is enabled")


@dataclass
class MarketState:
    """Full system state: climate, M companies, N investors.

    Leading axes of every per-episode array (if any) are batch axes shared
    by all fields; `t` is common to the batch because episodes advance in
    lockstep.  Per-agent constants (initial vulnerability, efficiency,
    preference) are unbatched.
    """

    t: int
    risks: np.ndarray  # (..., 3)
    cumulative_mitigation: np.ndarray  # (...,)
    capital: np.ndarray  # (..., M)
    esg: np.ndarray  # (..., M)
    vulnerability: np.ndarray  # (..., M)
    resilience_spend: np.ndarray  # (..., M)
    bankrupt: np.ndarray  # (..., M) bool
    margin_history: np.ndarray  # (..., M, 3) most recent last
    holdings: np.ndarray  # (..., N, M)
    cash: np.ndarray  # (..., N)
    initial_vulnerability: np.ndarray  # (M,)
    resilience_efficiency: np.ndarray  # (M,)
    esg_preference: np.ndarray  # (N,)

    @property
    def n_companies(self) -> int:
        return self.capital.shape[-1]

    @property
    def n_investors(self) -> int:
        return self.cash.shape[-1]

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.capital.shape[:-1]

    @property
    def active(self) -> np.ndarray:
        return ~self.bankrupt

    def investor_capital(self) -> np.ndarray:
        """Total capital per investor: holdings plus cash, shape (..., N)."""
        return self.holdings.sum(axis=-1) + self.cash

    def wealth(self) -> np.ndarray | float:
        """Total market wealth without double counting investor claims."""
        w = self.capital.sum(axis=-1) + self.cash.sum(axis=-1)
        return float(w) if w.ndim == 0 else w

    def company(self, i: int) -> CompanyState:
        if self.batch_shape:
            raise ValueError("per-agent views require an unbatched state")
        return CompanyState(
            capital=float(self.capital[i]),
            esg_score=float(self.esg[i]),
            vulnerability=float(self.vulnerability[i]),
            cumulative_resilience_spend=float(self.resilience_spend[i]),
            initial_vulnerability=float(self.initial_vulnerability[i]),
            resilience_efficiency=float(self.resilience_efficiency[i]),
            bankrupt=bool(self.bankrupt[i]),
            margin_history=tuple(float(x) for x in self.margin_history[i]),
        )

    def investor(self, j: int) -> InvestorState:
        if self.batch_shape:
            raise ValueError("per-agent views require an unbatched state")
        return InvestorState(
            holdings=tuple(float(x) for x in self.holdings[j]),
            cash=float(self.cash[j]),
            esg_preference=float(self.esg_preference[j]),
        )

    @property
    def companies(self) -> list[CompanyState]:
        return [self.company(i) for i in range(self.n_companies)]

    @property
    def investors(self) -> list[InvestorState]:
        return [self.investor(j) for j in range(self.n_investors)]


def initial_state(
    company_capital: np.ndarray,
    investor_capital: np.ndarray,
    initial_vulnerability: np.ndarray,
    resilience_efficiency: np.ndarray,
    esg_preference: np.ndarray,
    climate: ClimateParams,
    batch_shape: tuple[int, ...] = (),
) -> MarketState:
    """Fresh t=0 state; investors start all-cash, holdings zero."""
    m = len(company_capital)
    n = len(investor_capital)
    bs = tuple(batch_shape)

    def tile(values, trailing: tuple[int, ...]) -> np.ndarray:
        return np.broadcast_to(np.asarray(values, dtype=np.float64), bs + trailing).copy()

    return MarketState(
        t=0,
        risks=tile(climate.base, (3,)),
        cumulative_mitigation=np.zeros(bs),
        capital=tile(company_capital, (m,)),
        esg=np.zeros(bs + (m,)),
        vulnerability=tile(initial_vulnerability, (m,)),
        resilience_spend=np.zeros(bs + (m,)),
        bankrupt=np.zeros(bs + (m,), dtype=bool),
        margin_history=np.zeros(bs + (m, 3)),
        holdings=np.zeros(bs + (n, m)),
        cash=tile(investor_capital, (n,)),
        initial_vulnerability=np.asarray(initial_vulnerability, dtype=np.float64),
        resilience_efficiency=np.asarray(resilience_efficiency, dtype=np.float64),
        esg_preference=np.asarray(esg_preference, dtype=np.float64),
    )


def mask_invest_flags(invest_flags: np.ndarray, active: np.ndarray) -> np.ndarray:
    """Zero out flags pointed at bankrupt companies."""
    return np.asarray(invest_flags, dtype=np.float64) * active[..., None, :]


def redistribute(
    capital: np.ndarray,
    holdings: np.ndarray,
    cash: np.ndarray,
    invest_flags: np.ndarray,
    active: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Collect old holdings and redeploy investor capital equally over picks.

    Returns (interim capital (..., M), allocation table (..., N, M), cash
    held out this period (..., N), investor totals (..., N)).  Flags are
    masked against bankrupt companies here; an investor with no surviving
    flags holds everything as cash.  Conserves wealth exactly:
    sum(interim) + sum(cash held) equals sum(capital) + sum(cash in).
    """
    flags = mask_invest_flags(invest_flags, active)
    return _redistribute_masked(capital, holdings, cash, flags)


def _redistribute_masked(
    capital: np.ndarray, holdings: np.ndarray, cash: np.ndarray, flags: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    investor_total = holdings.sum(axis=-1) + cash
    n_picked = flags.sum(axis=-1)
    invests = n_picked > 0
    per_pick = np.where(invests, investor_total / np.where(invests, n_picked, 1.0), 0.0)
    alloc = flags * per_pick[..., None]
    interim = capital - holdings.sum(axis=-2) + alloc.sum(axis=-2)
    cash_held = np.where(invests, 0.0, investor_total)
    return interim, alloc, cash_held, investor_total


def apply_spending(
    interim: np.ndarray,
    actions: np.ndarray,
    prior_mitigation: np.ndarray,
    prior_resilience: np.ndarray,
    active: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Book mitigation and resilience spending against interim capital.

    Companies whose action components sum past 1 are overspending and are
    flagged bankrupt before anything is booked.  Returns (new cumulative
    mitigation (...,), new per-company cumulative resilience (..., M),
    overspent flags, booked flags).
    """
    spend_frac = actions.sum(axis=-1)
    overspent = active & (spend_frac > 1.0)
    booked = active & ~overspent & (interim > 0.0)
    delta_m = np.where(booked, actions[..., 0] * interim, 0.0).sum(axis=-1)
    new_resilience = np.where(
        booked, prior_resilience + actions[..., 2] * interim, prior_resilience
    )
    return prior_mitigation + delta_m, new_resilience, overspent, booked


def compute_esg(
    actions: np.ndarray, greenwash_coefficient: float, disclosure_enabled: bool
) -> np.ndarray:
    """ESG score u_m + beta * u_g; fixed at 0 when disclosure is off."""
    if not disclosure_enabled:
        return np.zeros(np.asarray(actions).shape[:-1])
    return actions[..., 0] + greenwash_coefficient * actions[..., 1]


def update_vulnerability(
    initial_vulnerability: np.ndarray,
    resilience_efficiency: np.ndarray,
    cumulative_resilience: np.ndarray,
    interim: np.ndarray,
) -> np.ndarray:
    """Diminishing-returns damage reduction from cumulative resilience spend.

    `cumulative_resilience` must already include this period's spend; the
    exponent is -eta * cumulative / interim.  Callers guard interim > 0.
    """
    return initial_vulnerability * np.exp(
        -resilience_efficiency * cumulative_resilience / interim
    )


def profit_margin(actions: np.ndarray, growth_rate: float, loss_factor: np.ndarray) -> np.ndarray:
    """Margin (1 - total spend)(1 + growth)(1 - loss) - 1; may fall below -1."""
    spend = np.asarray(actions).sum(axis=-1)
    return (1.0 - spend) * (1.0 + growth_rate) * (1.0 - np.asarray(loss_factor)) - 1.0


def settle(
    interim: np.ndarray,
    margins: np.ndarray,
    alloc: np.ndarray,
    cash_held: np.ndarray,
    booked: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Scale interim capital and allocations by margins.

    Companies whose settled capital is non-positive fail; their capital is
    clamped to zero and investor holdings in them are written off.  Returns
    (next capital, next holdings, next cash, failed flags).
    """
    capital_next = np.where(booked, (1.0 + margins) * interim, 0.0)
    failed = booked & (capital_next <= 0.0)
    survived = booked & ~failed
    capital_next = np.where(survived, capital_next, 0.0)
    holdings_next = alloc * (1.0 + margins[..., None, :]) * survived[..., None, :]
    return capital_next, holdings_next, cash_held, failed


def company_reward(capital_next: np.ndarray, interim: np.ndarray) -> np.ndarray:
    """Absolute profit in trillions: settled capital minus interim."""
    return capital_next - interim


def investor_reward(
    capital_before: np.ndarray,
    capital_after: np.ndarray,
    holdings_after: np.ndarray,
    esg_after: np.ndarray,
    esg_preference: np.ndarray,
) -> np.ndarray:
    """Portfolio return ratio plus preference-weighted average portfolio ESG.

    Cash contributes zero ESG; the weighting denominator is the investor's
    post-settlement capital.  Investors with no capital are inert (0), and
    an infinite preference with a zero ESG term still scores 0.
    """
    has_capital = capital_before > 0.0
    ret = np.where(
        has_capital,
        (capital_after - capital_before) / np.where(has_capital, capital_before, 1.0),
        0.0,
    )
    weighted = (holdings_after * esg_after[..., None, :]).sum(axis=-1)
    esg_term = np.where(
        capital_after > 0.0, weighted / np.where(capital_after > 0.0, capital_after, 1.0), 0.0
    )
    # an infinite preference must not produce inf*0 when the term is zero
    preference = np.where(esg_term == 0.0, 0.0, esg_preference)
    return np.where(has_capital, ret + preference * esg_term, 0.0)


def check_strict_bankruptcy(margin_history: np.ndarray, periods_elapsed: int) -> np.ndarray:
    """True where the last three recorded margins are each below -10%."""
    if periods_elapsed < STRICT_MARGIN_YEARS:
        return np.zeros(np.asarray(margin_history).shape[:-1], dtype=bool)
    return np.all(np.asarray(margin_history) < STRICT_MARGIN_THRESHOLD, axis=-1)


def build_observations(
    state: MarketState, dynamics: Dynamics, last_events: np.ndarray | None = None
) -> np.ndarray:
    """Flat shared observation vector.

    Layout: per company (capital, esg, vulnerability), then per investor
    (holdings over companies, cash); bankrupt company rows are zeroed.
    With `more_info_obs` the current risk triple and last event triple are
    appended.
    """
    alive = state.active.astype(np.float64)
    comp = np.stack(
        [state.capital * alive, state.esg * alive, state.vulnerability * alive], axis=-1
    )
    parts = [comp.reshape(state.batch_shape + (-1,))]
    if state.n_investors:
        inv = np.concatenate([state.holdings, state.cash[..., None]], axis=-1)
        parts.append(inv.reshape(state.batch_shape + (-1,)))
    if dynamics.more_info_obs:
        events = (
            np.zeros(state.batch_shape + (3,))
            if last_events is None
            else last_events.astype(np.float64)
        )
        parts.append(state.risks)
        parts.append(events)
    return np.concatenate(parts, axis=-1)


def observation_size(n_companies: int, n_investors: int, more_info: bool) -> int:
    return 3 * n_companies + (n_companies + 1) * n_investors + (6 if more_info else 0)


@dataclass
class StepOutput:
    """Everything produced by one transition.

    Observations are built lazily: the in-process runner reads the state
    directly, so the shared vector is only materialized for callers that
    ask for it.
    """

    state: MarketState
    company_rewards: np.ndarray  # (..., M)
    investor_rewards: np.ndarray  # (..., N)
    events: np.ndarray  # (..., 3) bool
    interim: np.ndarray  # (..., M)
    margins: np.ndarray  # (..., M)
    actions: np.ndarray  # (..., M, 3) actions actually applied
    invest_flags: np.ndarray  # (..., N, M) flags actually applied
    _dynamics: Dynamics

    @property
    def observations(self) -> np.ndarray:
        return build_observations(self.state, self._dynamics, self.events)


def step(
    state: MarketState,
    company_actions: np.ndarray,
    investor_actions: np.ndarray,
    event_uniforms: np.ndarray,
    dynamics: Dynamics,
    damage_normals: np.ndarray | None = None,
) -> StepOutput:
    """Advance one period.

    `company_actions` is (..., M, 3), `investor_actions` (..., N, M), and
    `event_uniforms` (..., 3) from the episode's climate stream.  In
    gaussian-damage mode `damage_normals` (..., M, 3) supplies standard
    normals for the per-event loss draws.
    """
    if state.t >= dynamics.horizon:
        raise EpisodeCompleteError(f"episode already finished at t={state.t}")

    active = state.active
    actions = np.asarray(company_actions, dtype=np.float64) * active[..., None]
    if not dynamics.greenwash_enabled or not dynamics.resilience_enabled:
        if not dynamics.greenwash_enabled:
            actions[..., 1] = 0.0
        if not dynamics.resilience_enabled:
            actions[..., 2] = 0.0

    flags = mask_invest_flags(investor_actions, active)
    interim, alloc, cash_held, investor_total = _redistribute_masked(
        state.capital, state.holdings, state.cash, flags
    )

    spend_frac = actions.sum(axis=-1)
    overspent = active & (spend_frac > 1.0)
    positive_interim = interim > 0.0
    booked = active & ~overspent & positive_interim
    booked_interim = interim * booked
    cumulative_mitigation = state.cumulative_mitigation + (
        actions[..., 0] * booked_interim
    ).sum(axis=-1)

    if dynamics.resilience_enabled:
        resilience_spend = state.resilience_spend + actions[..., 2] * booked_interim
        vulnerability = np.where(
            booked,
            update_vulnerability(
                state.initial_vulnerability,
                state.resilience_efficiency,
                resilience_spend,
                np.where(booked, interim, 1.0),
            ),
            state.vulnerability,
        )
    else:
        resilience_spend = state.resilience_spend
        vulnerability = state.vulnerability

    # System risks respond to the new cumulative mitigation, then events fire.
    risks = risk_components(float(state.t + 1), cumulative_mitigation, dynamics.climate)

    if dynamics.disclosure:
        esg = np.where(
            booked,
            actions[..., 0] + dynamics.greenwash_coefficient * actions[..., 1],
            state.esg,
        )
    else:
        esg = state.esg  # scores stay at their zero initialization

    occurred = event_uniforms < risks
    if dynamics.gaussian_damage:
        if damage_normals is None:
            raise ValueError("gaussian damage mode requires damage normals")
        sigma = dynamics.gaussian_sigma_scale * state.initial_vulnerability
        draws = np.clip(vulnerability[..., None] + sigma[..., None] * damage_normals, 0.0, 1.0)
        loss_factor = (draws * occurred[..., None, :]).sum(axis=-1)
    else:
        event_count = occurred.sum(axis=-1)
        loss_factor = event_count[..., None] * vulnerability

    margins = (1.0 - spend_frac) * (1.0 + dynamics.growth_rate) * (1.0 - loss_factor) - 1.0

    capital_next = (1.0 + margins) * booked_interim
    failed = booked & (capital_next <= 0.0)
    survived = booked & ~failed
    capital_next *= survived

    if dynamics.strict_bankruptcy:
        margin_history = np.empty_like(state.margin_history)
        margin_history[..., :-1] = state.margin_history[..., 1:]
        margin_history[..., -1] = margins * booked
        margin_history = np.where(booked[..., None], margin_history, state.margin_history)
        distressed = survived & check_strict_bankruptcy(margin_history, state.t + 1)
        capital_next = np.where(distressed, 0.0, capital_next)
    else:
        # the history is only consumed by the strict rule, skip maintaining it
        margin_history = state.margin_history
        distressed = False

    stranded = active & ~overspent & ~positive_interim
    bankrupt_next = state.bankrupt | overspent | stranded | failed | distressed
    alive_next = ~bankrupt_next

    holdings_next = alloc * ((1.0 + margins) * alive_next)[..., None, :]
    cash_next = cash_held

    company_rewards = (capital_next - np.maximum(interim, 0.0)) * active
    if state.n_investors:
        investor_capital_next = holdings_next.sum(axis=-1) + cash_next
        investor_rewards = investor_reward(
            investor_total, investor_capital_next, holdings_next, esg, state.esg_preference
        )
    else:
        investor_rewards = cash_next

    next_state = MarketState(
        t=state.t + 1,
        risks=risks,
        cumulative_mitigation=cumulative_mitigation,
        capital=capital_next,
        esg=esg,
        vulnerability=vulnerability,
        resilience_spend=resilience_spend,
        bankrupt=bankrupt_next,
        margin_history=margin_history,
        holdings=holdings_next,
        cash=cash_next,
        initial_vulnerability=state.initial_vulnerability,
        resilience_efficiency=state.resilience_efficiency,
        esg_preference=state.esg_preference,
    )
    return StepOutput(
        state=next_state,
        company_rewards=company_rewards,
        investor_rewards=investor_rewards,
        events=occurred,
        interim=interim,
        margins=margins,
        actions=actions,
        invest_flags=flags,
        _dynamics=dynamics,
    )
