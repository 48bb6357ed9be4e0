"""Desk-scale independent learners: episodic score-function gradients.

Every agent owns its parameters and treats the other agents as part of the
environment.  Company policies are categorical distributions over a
discretized spending grid {0, 0.001, ..., 0.01} per enabled action
dimension.  Investor policies are independent per-company Bernoulli flags
whose logits combine a per-company bias with a single learned sensitivity
to the company's last disclosed ESG score (centered across companies), the
minimal state-conditioning that lets investors chase disclosed scores and
thereby reward corporate mitigation.

Updates are plain likelihood-ratio (REINFORCE) steps on each agent's own
episode return against a moving-average baseline, with running-std
advantage normalization for scale robustness.  No surrogate objectives,
no critics, no neural networks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine import BatchResult, EpisodeDriver, PolicyAssignment, ScenarioConfig, run_batch

GRID_MAX = 0.01
GRID_POINTS = 11


def company_grid() -> np.ndarray:
    return np.linspace(0.0, GRID_MAX, GRID_POINTS)


class TrainingDivergedError(RuntimeError):
    """Parameters went non-finite; carries the failing iteration index."""

    def __init__(self, iteration: int) -> None:
        super().__init__(f"non-finite policy parameters at iteration {iteration}")
        self.iteration = iteration


@dataclass(frozen=True)
class LearnerSettings:
    iterations: int = 300
    episodes_per_iter: int = 4
    learning_rate: float = 0.05
    baseline_momentum: float = 0.9
    window: int = 50
    advantage_clip: float = 5.0
    esg_feature_scale: float = GRID_MAX  # divisor for the centered score feature

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if self.episodes_per_iter < 1:
            raise ValueError("episodes_per_iter must be positive")
        if not 0.0 <= self.baseline_momentum < 1.0:
            raise ValueError("baseline momentum must lie in [0, 1)")
        if self.window < 1:
            raise ValueError("window must be positive")


def settings_from_config(config: ScenarioConfig, **overrides) -> LearnerSettings:
    """Build settings from the scenario's learner block plus explicit overrides."""
    from .engine import LEARNER_BLOCK_DEFAULTS

    merged = {
        **LEARNER_BLOCK_DEFAULTS,
        **config.learner,
        **{k: v for k, v in overrides.items() if v is not None},
    }
    return LearnerSettings(
        iterations=int(merged["iterations"]),
        episodes_per_iter=int(merged["episodes_per_iter"]),
        learning_rate=float(merged["learning_rate"]),
        baseline_momentum=float(merged["baseline_momentum"]),
        window=int(merged["window"]),
    )


@dataclass
class CompanyParams:
    """Categorical logits per action dimension, shape (3, grid points)."""

    logits: np.ndarray


@dataclass
class InvestorParams:
    """Per-company flag logits plus one disclosed-score sensitivity weight."""

    logits: np.ndarray  # (M,)
    esg_weight: float = 0.0


@dataclass
class PolicyParams:
    """All agents' parameters; rows are strictly per-agent (no sharing)."""

    companies: list[CompanyParams]
    investors: list[InvestorParams]
    grid: np.ndarray = field(default_factory=company_grid)
    enabled: np.ndarray = field(default_factory=lambda: np.array([True, False, False]))


def enabled_dims(config: ScenarioConfig) -> np.ndarray:
    return np.array([True, config.greenwash_enabled, config.resilience_enabled])


def init_params(config: ScenarioConfig) -> PolicyParams:
    m, n = config.n_companies, config.n_investors
    return PolicyParams(
        companies=[CompanyParams(np.zeros((3, GRID_POINTS))) for _ in range(m)],
        investors=[InvestorParams(np.zeros(m)) for _ in range(n)],
        grid=company_grid(),
        enabled=enabled_dims(config),
    )


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    z = x - x.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def sample_categorical(cum_probs: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Inverse-CDF sampling; index i has mass cum[i] - cum[i-1]."""
    idx = (uniforms[..., None] >= cum_probs).sum(axis=-1)
    return np.minimum(idx, cum_probs.shape[-1] - 1)


def score_feature(esg: np.ndarray, scale: float) -> np.ndarray:
    """Centered, scaled disclosed scores: zero whenever scores are tied."""
    return (esg - esg.mean(axis=-1, keepdims=True)) / scale


def episode_grad_categorical(counts: np.ndarray, probs: np.ndarray, periods: int) -> np.ndarray:
    """Sum over periods of grad log pi for a categorical: counts - T*p."""
    return counts - periods * probs


# -- policy objects for greedy evaluation --------------------------------------

@dataclass
class LearnedCompanyPolicy:
    params: CompanyParams
    grid: np.ndarray
    enabled: np.ndarray
    greedy: bool = True
    stochastic: bool = False

    def __post_init__(self) -> None:
        self.stochastic = not self.greedy

    def company_batch_actions(self, t, state, index, uniforms) -> np.ndarray:
        probs = softmax(self.params.logits, axis=-1)
        if self.greedy:
            idx = probs.argmax(axis=-1)  # ties resolve to the lowest index
        else:
            idx = sample_categorical(np.cumsum(probs, axis=-1), uniforms)
        actions = self.grid[idx] * self.enabled
        return np.broadcast_to(actions, state.batch_shape + (3,)).copy()


@dataclass
class LearnedInvestorPolicy:
    params: InvestorParams
    feature_scale: float = GRID_MAX
    greedy: bool = True
    stochastic: bool = False

    def __post_init__(self) -> None:
        self.stochastic = not self.greedy

    def flag_probs(self, state) -> np.ndarray:
        f = score_feature(state.esg, self.feature_scale)
        return sigmoid(self.params.logits + self.params.esg_weight * f)

    def investor_batch_actions(self, t, state, index, uniforms) -> np.ndarray:
        p = self.flag_probs(state)
        if self.greedy:
            flags = p >= 0.5
        else:
            flags = uniforms < p
        return flags.astype(np.float64)


def greedy_assignment(params: PolicyParams) -> PolicyAssignment:
    return PolicyAssignment(
        companies=[
            LearnedCompanyPolicy(c, params.grid, params.enabled) for c in params.companies
        ],
        investors=[LearnedInvestorPolicy(v) for v in params.investors],
    )


# -- training -------------------------------------------------------------------

@dataclass
class TrainReport:
    """Per-iteration training curves plus trailing-window summaries."""

    iterations: int
    window: int
    mitigation_series: np.ndarray  # (iters,) mean total mitigation per episode
    p_end_series: np.ndarray
    w_end_series: np.ndarray
    agent_reward_curves: np.ndarray  # (iters, M + N) mean episode returns

    def __post_init__(self) -> None:
        if self.window > self.iterations:
            raise ValueError("window must not exceed iteration count")

    @property
    def trailing_mitigation(self) -> float:
        return float(self.mitigation_series[-self.window :].mean())

    @property
    def trailing_p_end(self) -> float:
        return float(self.p_end_series[-self.window :].mean())

    @property
    def trailing_w_end(self) -> float:
        return float(self.w_end_series[-self.window :].mean())

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "window": self.window,
            "trailing_mitigation": self.trailing_mitigation,
            "trailing_P_end": self.trailing_p_end,
            "trailing_W_end": self.trailing_w_end,
            "mitigation_series": [float(x) for x in self.mitigation_series],
            "p_end_series": [float(x) for x in self.p_end_series],
            "w_end_series": [float(x) for x in self.w_end_series],
        }


class _RunningStat:
    """EMA mean/std per agent, initialized from the first batch."""

    def __init__(self, size: int, momentum: float) -> None:
        self.mean = np.zeros(size)
        self.var = np.ones(size)
        self.momentum = momentum
        self._primed = False

    def advantage(self, returns: np.ndarray, clip: float) -> np.ndarray:
        if not self._primed:
            self.mean = returns.mean(axis=0)
            batch_var = returns.var(axis=0)
            self.var = np.where(batch_var > 0, batch_var, 1.0)
            self._primed = True
        adv = (returns - self.mean) / (np.sqrt(self.var) + 1e-8)
        return np.clip(adv, -clip, clip)

    def update(self, returns: np.ndarray) -> None:
        m = self.momentum
        batch_mean = returns.mean(axis=0)
        batch_var = returns.var(axis=0)
        self.mean = m * self.mean + (1 - m) * batch_mean
        self.var = m * self.var + (1 - m) * np.where(batch_var > 0, batch_var, self.var)


def train_independent(
    config: ScenarioConfig, settings: LearnerSettings, seeds: list[int]
) -> tuple[PolicyParams, TrainReport]:
    """Train every agent's policy on its own reward, others held as environment."""
    config.validate()
    if not list(seeds):
        raise ValueError("seeds: need at least one training seed")
    m, n = config.n_companies, config.n_investors
    horizon = config.horizon
    grid = company_grid()
    g = GRID_POINTS
    enabled = enabled_dims(config)
    params = init_params(config)

    rng = np.random.default_rng(np.random.SeedSequence([config.policy_seed, *map(int, seeds)]))
    batch = settings.episodes_per_iter
    lr = settings.learning_rate

    comp_stat = _RunningStat(m, settings.baseline_momentum)
    inv_stat = _RunningStat(n, settings.baseline_momentum) if n else None

    mitigation_series = np.zeros(settings.iterations)
    p_series = np.zeros(settings.iterations)
    w_series = np.zeros(settings.iterations)
    reward_curves = np.zeros((settings.iterations, m + n))

    bb, mm, dd = np.meshgrid(
        np.arange(batch), np.arange(m), np.arange(3), indexing="ij"
    )

    for it in range(settings.iterations):
        comp_logits = np.stack([c.logits for c in params.companies])  # (M, 3, G)
        comp_probs = softmax(comp_logits, axis=-1)
        comp_cum = np.cumsum(comp_probs, axis=-1)
        if n:
            inv_base = np.stack([v.logits for v in params.investors])  # (N, M)
            inv_w = np.array([v.esg_weight for v in params.investors])  # (N,)

        episode_seeds = [it * batch + e for e in range(batch)]
        driver = EpisodeDriver(config, episode_seeds)

        counts = np.zeros((batch, m, 3, g))
        inv_glog_base = np.zeros((batch, n, m))
        inv_glog_w = np.zeros((batch, n))

        while not driver.done:
            u_c = rng.random((batch, m, 3))
            idx = sample_categorical(comp_cum, u_c)  # (B, M, 3)
            actions = grid[idx] * enabled
            np.add.at(counts, (bb, mm, dd, idx), 1.0)

            if n:
                f = score_feature(driver.state.esg, settings.esg_feature_scale)  # (B, M)
                logits_t = inv_base + inv_w[:, None] * f[:, None, :]
                p = sigmoid(logits_t)
                flags = (rng.random((batch, n, m)) < p).astype(np.float64)
                centered = flags - p
                inv_glog_base += centered
                inv_glog_w += (centered * f[:, None, :]).sum(axis=-1)
            else:
                flags = np.zeros((batch, 0, m))
            driver.step(actions, flags)

        records = driver.records()
        comp_returns = np.stack([r.company_rewards.sum(axis=0) for r in records])  # (B, M)
        inv_returns = np.stack([r.investor_rewards.sum(axis=0) for r in records])  # (B, N)

        comp_adv = comp_stat.advantage(comp_returns, settings.advantage_clip)
        comp_glog = episode_grad_categorical(counts, comp_probs, horizon)
        comp_grad = (comp_adv[..., None, None] * comp_glog).mean(axis=0)
        comp_grad *= enabled[:, None]
        for i, c in enumerate(params.companies):
            c.logits = c.logits + lr * comp_grad[i]
        comp_stat.update(comp_returns)

        if n:
            inv_adv = inv_stat.advantage(inv_returns, settings.advantage_clip)
            base_grad = (inv_adv[..., None] * inv_glog_base).mean(axis=0)
            w_grad = (inv_adv * inv_glog_w).mean(axis=0)
            for j, v in enumerate(params.investors):
                v.logits = v.logits + lr * base_grad[j]
                v.esg_weight = float(v.esg_weight + lr * w_grad[j])
            inv_stat.update(inv_returns)

        finite = all(np.all(np.isfinite(c.logits)) for c in params.companies) and all(
            np.all(np.isfinite(v.logits)) and np.isfinite(v.esg_weight)
            for v in params.investors
        )
        if not finite:
            raise TrainingDivergedError(it)

        mitigation_series[it] = np.mean([r.summary.mitigation_total for r in records])
        p_series[it] = np.mean([r.summary.p_end for r in records])
        w_series[it] = np.mean([r.summary.w_end for r in records])
        reward_curves[it, :m] = comp_returns.mean(axis=0)
        if n:
            reward_curves[it, m:] = inv_returns.mean(axis=0)

    report = TrainReport(
        iterations=settings.iterations,
        window=min(settings.window, settings.iterations),
        mitigation_series=mitigation_series,
        p_end_series=p_series,
        w_end_series=w_series,
        agent_reward_curves=reward_curves,
    )
    return params, report


def evaluate(params: PolicyParams, config: ScenarioConfig, seeds: list[int]) -> BatchResult:
    """Greedy (mode-action) rollouts of trained parameters."""
    return run_batch(config, greedy_assignment(params), list(seeds))
