import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esgsim.climate import (
    CALIBRATION_YEARS,
    ClimateParams,
    ClimateRisks,
    EventOutcome,
    InvalidCalibrationError,
    calibrate_elasticity,
    default_elasticity_target,
    derive_growth_rates,
    overall_risk,
    risk_at,
    risk_components,
    sample_events,
    sample_events_array,
)

BASE = ClimateRisks(0.28, 0.13, 0.17)
AT_80 = ClimateRisks(0.94, 0.27, 0.41)


class TestDeriveGrowthRates:
    def test_heat_rate_solves_linear_trend(self):
        # independent oracle: solve p = mu*t + p0 at t=80 for mu
        expected = (0.94 - 0.28) / 80
        mu = derive_growth_rates(BASE, AT_80)
        assert mu[0] == pytest.approx(expected, rel=1e-15)
        assert mu[0] == pytest.approx(0.00825, rel=1e-12)

    def test_zero_growth_when_target_equals_base(self):
        mu = derive_growth_rates(BASE, ClimateRisks(0.28, 0.13, 0.17))
        assert mu == (0.0, 0.0, 0.0)

    def test_drought_rate(self):
        assert derive_growth_rates(BASE, AT_80)[2] == pytest.approx((0.41 - 0.17) / 80, rel=1e-15)

    def test_negative_numerator_rejected(self):
        with pytest.raises(InvalidCalibrationError):
            derive_growth_rates(BASE, ClimateRisks(0.10, 0.13, 0.17))

    def test_defaults_match_derivation(self):
        p = ClimateParams()
        assert tuple(p.growth) == derive_growth_rates(BASE, AT_80)


class TestRiskAt:
    def test_at_time_zero_returns_base(self):
        assert risk_at(0, 0.0, ClimateParams()) == ClimateRisks(0.28, 0.13, 0.17)

    def test_unmitigated_endpoint(self):
        r = risk_at(80, 0.0, ClimateParams())
        assert r.p_heat == pytest.approx(0.94, abs=1e-12)
        assert r.p_precip == pytest.approx(0.27, abs=1e-12)
        assert r.p_drought == pytest.approx(0.41, abs=1e-12)

    def test_unit_damping_halves_growth(self):
        # lambda*U = 1 makes the denominator 2: p = 0.28 + 0.66/2
        p = ClimateParams()
        u = 1.0 / p.elasticity_heat
        r = risk_at(80, u, p)
        assert r.p_heat == pytest.approx(0.28 + 0.66 / 2, abs=1e-12)

    def test_clamps_to_one_at_horizon(self):
        # 0.28 + 0.00825*100 = 1.105 before the clamp
        r = risk_at(100, 0.0, ClimateParams())
        assert r.p_heat == 1.0
        assert r.p_precip == pytest.approx(0.13 + 0.00175 * 100, abs=1e-12)

    def test_rejects_negative_inputs(self):
        with pytest.raises(ValueError):
            risk_at(-1, 0.0, ClimateParams())
        with pytest.raises(ValueError):
            risk_at(1, -0.5, ClimateParams())

    @given(
        t1=st.floats(min_value=0, max_value=100),
        t2=st.floats(min_value=0, max_value=100),
        u=st.floats(min_value=0, max_value=1e4),
    )
    def test_monotone_in_time(self, t1, t2, u):
        lo, hi = sorted((t1, t2))
        p = ClimateParams()
        r1 = risk_components(lo, u, p)
        r2 = risk_components(hi, u, p)
        assert np.all(r1 <= r2)

    @given(
        t=st.floats(min_value=0.1, max_value=100),
        u1=st.floats(min_value=0, max_value=1e4),
        u2=st.floats(min_value=0, max_value=1e4),
    )
    def test_weakly_decreasing_in_mitigation(self, t, u1, u2):
        lo, hi = sorted((u1, u2))
        p = ClimateParams()
        assert np.all(risk_components(t, hi, p) <= risk_components(t, lo, p))

    @given(
        t=st.floats(min_value=0, max_value=100),
        u=st.floats(min_value=0, max_value=1e6),
    )
    def test_clamp_safety(self, t, u):
        r = risk_components(t, u, ClimateParams())
        assert np.all(r >= 0.0) and np.all(r <= 1.0)

    def test_strictly_decreasing_before_clamp(self):
        p = ClimateParams()
        t = 50.0
        raw = lambda u: p.growth * t / (1.0 + p.elasticity * u) + p.base
        assert np.all(raw(10.0) > raw(20.0))

    def test_round_trip_calibration(self):
        base = ClimateRisks(0.05, 0.2, 0.33)
        target = ClimateRisks(0.51, 0.2, 0.75)
        mu = derive_growth_rates(base, target)
        p = ClimateParams(
            base_risk_heat=0.05,
            base_risk_precip=0.2,
            base_risk_drought=0.33,
            growth_rate_heat=mu[0],
            growth_rate_precip=mu[1],
            growth_rate_drought=mu[2],
        )
        got = risk_at(80, 0.0, p).as_array()
        np.testing.assert_allclose(got, target.as_array(), rtol=1e-12)


class TestOverallRisk:
    def test_initial_overall(self):
        # oracle: 1 - (1-0.28)(1-0.13)(1-0.17)
        expected = 1.0 - (1 - 0.28) * (1 - 0.13) * (1 - 0.17)
        got = overall_risk(BASE)
        assert got == pytest.approx(expected, abs=1e-15)
        assert round(got, 2) == 0.48

    def test_zero_risks(self):
        assert overall_risk(ClimateRisks(0, 0, 0)) == 0.0

    def test_endpoint_overall(self):
        expected = 1.0 - (1 - 0.94) * (1 - 0.27) * (1 - 0.41)
        got = overall_risk(AT_80)
        assert got == pytest.approx(expected, abs=1e-15)
        assert round(got, 4) == 0.9742

    def test_batched(self):
        arr = np.array([[0.0, 0.0, 0.0], [1.0, 0.2, 0.3]])
        np.testing.assert_allclose(overall_risk(arr), [0.0, 1.0])


class TestSampleEvents:
    def test_zero_risks_never_fire(self):
        out = sample_events(ClimateRisks(0, 0, 0), np.array([0.0, 0.5, 0.999]))
        assert out.count == 0

    def test_certain_risks_always_fire(self):
        out = sample_events(ClimateRisks(1, 1, 1), np.array([0.0, 0.5, 0.999]))
        assert out.count == 3
        assert out == EventOutcome(True, True, True)

    def test_threshold_semantics(self):
        out = sample_events(ClimateRisks(0.5, 0.5, 0.5), np.array([0.4999, 0.5, 0.51]))
        assert (out.occurred_heat, out.occurred_precip, out.occurred_drought) == (
            True,
            False,
            False,
        )

    def test_mean_count_matches_binomial_law(self):
        # oracle: E[X] = sum(p), var = sum(p(1-p)); 3-sigma bound on the mean
        risks = np.array([0.28, 0.13, 0.17])
        n = 100_000
        rng = np.random.default_rng(7)
        occ = sample_events_array(risks, rng.random((n, 3)))
        mean_count = occ.sum(axis=1).mean()
        sigma = np.sqrt(np.sum(risks * (1 - risks)) / n)
        assert abs(mean_count - risks.sum()) <= 3 * sigma


class TestCalibrateElasticity:
    def test_closed_form_example(self):
        # oracle: lambda = (mu*80/(target-base) - 1) / (80*budget)
        p = ClimateParams()
        target = ClimateRisks(0.61, 0.20, 0.29)
        lam = calibrate_elasticity(2.3, target, p)
        assert lam[0] == pytest.approx((0.66 / 0.33 - 1) / 184.0, rel=1e-12)
        assert lam[0] == pytest.approx(1.0 / 184.0, rel=1e-12)

    def test_no_reduction_target_gives_zero(self):
        p = ClimateParams()
        tgt = ClimateRisks.from_array(p.base + p.growth * 80)
        lam = calibrate_elasticity(2.3, tgt, p)
        assert lam == pytest.approx((0.0, 0.0, 0.0), abs=1e-15)

    def test_target_below_base_rejected(self):
        with pytest.raises(InvalidCalibrationError):
            calibrate_elasticity(2.3, ClimateRisks(0.2, 0.2, 0.29), ClimateParams())

    def test_target_above_unmitigated_rejected(self):
        with pytest.raises(InvalidCalibrationError):
            calibrate_elasticity(2.3, ClimateRisks(0.99, 0.2, 0.29), ClimateParams())

    def test_nonpositive_budget_rejected(self):
        with pytest.raises(InvalidCalibrationError):
            calibrate_elasticity(0.0, ClimateRisks(0.61, 0.2, 0.29), ClimateParams())

    def test_default_params_consistent_with_calibration(self):
        # the half-growth default target reproduces the baked-in 1/184
        p = ClimateParams()
        lam = calibrate_elasticity(2.3, default_elasticity_target(p), p)
        np.testing.assert_allclose(lam, p.elasticity, rtol=1e-12)

    @given(
        budget=st.floats(min_value=0.1, max_value=50),
        frac=st.floats(min_value=0.05, max_value=1.0),
    )
    @settings(max_examples=50)
    def test_round_trip(self, budget, frac):
        # calibrated elasticities must reproduce the target at t=80
        p0 = ClimateParams()
        tgt = p0.base + frac * p0.growth * CALIBRATION_YEARS
        lam = calibrate_elasticity(budget, ClimateRisks.from_array(tgt), p0)
        p = ClimateParams(
            elasticity_heat=lam[0], elasticity_precip=lam[1], elasticity_drought=lam[2]
        )
        got = risk_at(80, 80 * budget, p).as_array()
        np.testing.assert_allclose(got, tgt, rtol=1e-12)


class TestParamsValidation:
    def test_bad_base_rejected(self):
        with pytest.raises(ValueError):
            ClimateParams(base_risk_heat=1.5)

    def test_negative_growth_rejected(self):
        with pytest.raises(ValueError):
            ClimateParams(growth_rate_precip=-0.1)

    def test_negative_elasticity_rejected(self):
        with pytest.raises(ValueError):
            ClimateParams(elasticity_drought=-1.0)
