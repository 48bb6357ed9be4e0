"""Climate risk evolution, calibration, and stochastic event sampling.

Three annual hazard probabilities (extreme heat, heavy precipitation,
drought) grow linearly with time and are damped by cumulative mitigation
spending:

    p_e(t, U) = clamp( mu_e * t / (1 + lambda_e * U) + p0_e, 0, 1 )

where U is cumulative mitigation in trillions of USD.  Events are
independent Bernoulli draws against the current component risks, so up to
three events can occur in one year.

All functions here are pure: event sampling takes explicit uniforms so the
caller owns the random stream.  Scalar and batched inputs are both accepted;
component arrays use the last axis for the (heat, precip, drought) triple.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

EVENT_NAMES = ("heat", "precipitation", "drought")

# IPCC-anchored defaults: annual hazard probabilities at the start year and,
# absent mitigation, at year 80 (the 4-degree trajectory endpoint).
DEFAULT_BASE_RISKS = (0.28, 0.13, 0.17)
DEFAULT_RISKS_AT_80 = (0.94, 0.27, 0.41)
CALIBRATION_YEARS = 80

# Annual mitigation budget (trillions USD/yr) that should bend the curve to
# the low-warming target used for fitting the damping elasticities.
DEFAULT_MITIGATION_BUDGET = 2.3

# The low-warming target triple is a free knob (the source estimates do not
# pin it).  The default keeps 80% of the unmitigated growth at year 80 under
# the reference budget; weaker damping than this lets a lone constant
# mitigator profit from its own spending once capital has compounded, which
# destroys the defection-dominant payoff structure the scripted analyses
# reproduce.
DEFAULT_TARGET_FACTOR = 0.8


class InvalidCalibrationError(ValueError):
    """Raised when calibration targets are outside the feasible range."""


@dataclass(frozen=True)
class ClimateRisks:
    """Per-event annual probabilities (heat, precipitation, drought)."""

    p_heat: float
    p_precip: float
    p_drought: float

    def as_array(self) -> np.ndarray:
        return np.array([self.p_heat, self.p_precip, self.p_drought])

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "ClimateRisks":
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))


@dataclass(frozen=True)
class EventOutcome:
    """Result of one period's event sampling."""

    occurred_heat: bool
    occurred_precip: bool
    occurred_drought: bool

    @property
    def count(self) -> int:
        return int(self.occurred_heat) + int(self.occurred_precip) + int(self.occurred_drought)

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.occurred_heat, self.occurred_precip, self.occurred_drought], dtype=bool
        )


@dataclass(frozen=True)
class ClimateParams:
    """Hazard growth model parameters.

    Growth rates are probability per year; elasticities are inverse
    trillions of USD (how strongly cumulative mitigation damps growth).
    Defaults reproduce the 4-degree no-mitigation trajectory and fit the
    elasticities so a constant 2.3 T/yr spend halves the risk growth by
    year 80.
    """

    base_risk_heat: float = DEFAULT_BASE_RISKS[0]
    base_risk_precip: float = DEFAULT_BASE_RISKS[1]
    base_risk_drought: float = DEFAULT_BASE_RISKS[2]
    growth_rate_heat: float = (DEFAULT_RISKS_AT_80[0] - DEFAULT_BASE_RISKS[0]) / CALIBRATION_YEARS
    growth_rate_precip: float = (DEFAULT_RISKS_AT_80[1] - DEFAULT_BASE_RISKS[1]) / CALIBRATION_YEARS
    growth_rate_drought: float = (DEFAULT_RISKS_AT_80[2] - DEFAULT_BASE_RISKS[2]) / CALIBRATION_YEARS
    elasticity_heat: float = (1.0 / DEFAULT_TARGET_FACTOR - 1.0) / (
        CALIBRATION_YEARS * DEFAULT_MITIGATION_BUDGET
    )
    elasticity_precip: float = (1.0 / DEFAULT_TARGET_FACTOR - 1.0) / (
        CALIBRATION_YEARS * DEFAULT_MITIGATION_BUDGET
    )
    elasticity_drought: float = (1.0 / DEFAULT_TARGET_FACTOR - 1.0) / (
        CALIBRATION_YEARS * DEFAULT_MITIGATION_BUDGET
    )
    horizon: int = 100

    def __post_init__(self) -> None:
        base = self.base
        if np.any(base < 0.0) or np.any(base > 1.0):
            raise ValueError(f"base risks must lie in [0, 1], got {tuple(base)}")
        if np.any(self.growth < 0.0):
            raise ValueError("growth rates must be non-negative")
        if np.any(self.elasticity < 0.0):
            raise ValueError("elasticities must be non-negative")
        if self.horizon < 0:
            raise ValueError("horizon must be non-negative")

    # cached arrays keep the per-step risk update allocation-free
    @cached_property
    def base(self) -> np.ndarray:
        return np.array([self.base_risk_heat, self.base_risk_precip, self.base_risk_drought])

    @cached_property
    def growth(self) -> np.ndarray:
        return np.array([self.growth_rate_heat, self.growth_rate_precip, self.growth_rate_drought])

    @cached_property
    def elasticity(self) -> np.ndarray:
        return np.array([self.elasticity_heat, self.elasticity_precip, self.elasticity_drought])


def derive_growth_rates(
    base: ClimateRisks, target_at_80: ClimateRisks, years: int = CALIBRATION_YEARS
) -> tuple[float, float, float]:
    """Fit linear growth rates so unmitigated risks hit the target at `years`."""
    b = base.as_array()
    tgt = target_at_80.as_array()
    if np.any(tgt < b):
        raise InvalidCalibrationError(
            f"target risks {tuple(tgt)} must not be below base risks {tuple(b)}"
        )
    mu = (tgt - b) / years
    return (float(mu[0]), float(mu[1]), float(mu[2]))


def risk_components(
    t: np.ndarray | float, cumulative_mitigation: np.ndarray | float, params: ClimateParams
) -> np.ndarray:
    """Component risks at year `t` given cumulative mitigation spend.

    Broadcasts over leading axes; the last output axis is the event triple.
    Values are clamped to [0, 1] since the linear trend is extrapolated past
    the calibration window and would otherwise exceed 1.
    """
    t = np.asarray(t, dtype=np.float64)[..., None]
    u = np.asarray(cumulative_mitigation, dtype=np.float64)[..., None]
    raw = params.growth * t / (1.0 + params.elasticity * u) + params.base
    return np.clip(raw, 0.0, 1.0)


def risk_at(t: float, cumulative_mitigation: float, params: ClimateParams) -> ClimateRisks:
    """Scalar convenience wrapper around :func:`risk_components`."""
    if t < 0:
        raise ValueError("t must be non-negative")
    if cumulative_mitigation < 0:
        raise ValueError("cumulative mitigation must be non-negative")
    return ClimateRisks.from_array(risk_components(float(t), float(cumulative_mitigation), params))


def overall_risk(risks: ClimateRisks | np.ndarray) -> float | np.ndarray:
    """Probability of at least one event: 1 - prod(1 - p_e).

    Accepts a ClimateRisks value or an array whose last axis is the event
    triple; reduces over that axis.
    """
    arr = risks.as_array() if isinstance(risks, ClimateRisks) else np.asarray(risks)
    out = 1.0 - np.prod(1.0 - arr, axis=-1)
    return float(out) if out.ndim == 0 else out


def sample_events_array(risks: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Boolean occurrence flags: event e occurs iff uniform_e < risk_e."""
    return np.asarray(uniforms) < np.asarray(risks)


def sample_events(risks: ClimateRisks, uniforms: np.ndarray) -> EventOutcome:
    """Sample one period's events from explicit uniform draws in [0, 1)."""
    occ = sample_events_array(risks.as_array(), np.asarray(uniforms, dtype=np.float64))
    return EventOutcome(bool(occ[0]), bool(occ[1]), bool(occ[2]))


def calibrate_elasticity(
    annual_budget: float,
    target_at_80: ClimateRisks,
    params: ClimateParams,
    years: int = CALIBRATION_YEARS,
) -> tuple[float, float, float]:
    """Fit damping elasticities so a constant annual spend hits a risk target.

    Solves, per event, p(years, years*budget) = target for lambda_e in closed
    form.  Feasible targets lie strictly above the base risk and at or below
    the unmitigated value at `years`; the upper endpoint maps to lambda = 0.
    """
    if annual_budget <= 0:
        raise InvalidCalibrationError("annual budget must be positive")
    base = params.base
    mu = params.growth
    tgt = target_at_80.as_array()
    unmitigated = base + mu * years
    if np.any(tgt <= base) or np.any(tgt > unmitigated):
        raise InvalidCalibrationError(
            f"targets {tuple(tgt)} must lie in (base, unmitigated-at-{years}] "
            f"= ({tuple(base)}, {tuple(unmitigated)}]"
        )
    total_spend = years * annual_budget
    lam = (mu * years / (tgt - base) - 1.0) / total_spend
    return (float(lam[0]), float(lam[1]), float(lam[2]))


def default_elasticity_target(params: ClimateParams | None = None) -> ClimateRisks:
    """Default elasticity-calibration target at year 80.

    Keeps DEFAULT_TARGET_FACTOR of the unmitigated growth; see the note on
    that constant for why the default damping is this weak.
    """
    p = params if params is not None else ClimateParams()
    tgt = p.base + DEFAULT_TARGET_FACTOR * p.growth * CALIBRATION_YEARS
    return ClimateRisks.from_array(tgt)
