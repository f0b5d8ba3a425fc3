"""Tests for empirical CDFs, Weibull-scale transforms and diagnostics."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from fishnet.mc import SampleRecord
from fishnet.models import CdfCurve, ModelParams, two_term_cdf, weakest_link_cdf
from fishnet.stats import (
    EmpiricalDistribution,
    convergence_check,
    empirical_cdf,
    histogram,
    tail_slope,
    weibull_coords,
)


class TestEmpiricalDistribution:
    def test_sorts_input(self):
        e = EmpiricalDistribution([3.0, 1.0, 2.0])
        assert list(e.strengths) == [1.0, 2.0, 3.0]
        assert e.count == 3

    def test_plotting_positions(self):
        e = EmpiricalDistribution([5.0, 1.0, 4.0, 2.0])
        assert_allclose(e.plotting_positions(), [0.125, 0.375, 0.625, 0.875])

    def test_from_records(self):
        records = [SampleRecord(2.0, 0, 1, None, 0),
                   SampleRecord(1.5, 0, 1, None, 0)]
        e = EmpiricalDistribution.from_records(records)
        assert list(e.strengths) == [1.5, 2.0]

    def test_rejects_empty_and_nonfinite(self):
        with pytest.raises(ValueError, match="empty"):
            EmpiricalDistribution([])
        with pytest.raises(ValueError, match="finite"):
            EmpiricalDistribution([1.0, np.nan])


class TestEmpiricalCdf:
    E = EmpiricalDistribution([1.0, 2.0, 3.0])

    def test_order_statistic_values(self):
        # at the i-th order statistic the step convention gives (i - 1/2)/n
        assert empirical_cdf(self.E, 2.0) == 0.5
        assert_allclose(empirical_cdf(self.E, [1.0, 2.0, 3.0]),
                        [1 / 6, 3 / 6, 5 / 6])

    def test_outside_sample(self):
        assert empirical_cdf(self.E, 0.5) == 0.0
        assert empirical_cdf(self.E, 99.0) == 1.0 - 0.5 / 3

    def test_scalar_passthrough(self):
        out = empirical_cdf(self.E, 1.5)
        assert isinstance(out, float)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0.1, 100.0), min_size=1, max_size=40),
           st.lists(st.floats(0.0, 120.0), min_size=2, max_size=20))
    def test_monotone_and_bounded(self, sample, queries):
        e = EmpiricalDistribution(sample)
        q = np.sort(np.asarray(queries))
        p = empirical_cdf(e, q)
        assert np.all(np.diff(p) >= 0)
        assert np.all((p >= 0.0) & (p <= 1.0 - 0.5 / e.count))


class TestWeibullCoords:
    def test_unit_points(self):
        x, y = weibull_coords(math.e, -math.expm1(-1.0))
        assert (x, y) == pytest.approx((1.0, 0.0), abs=1e-12)
        x, y = weibull_coords(1.0, -math.expm1(-math.e))
        assert (x, y) == pytest.approx((0.0, 1.0), abs=1e-12)

    def test_weibull_law_is_a_line(self):
        # exact Weibull CDF with modulus 5, scale 3 -> slope 5 through
        # (ln 3, 0); stay below pf ~ 0.99, where pf-space still resolves
        # the survival probability
        sig = np.geomspace(0.5, 4.0, 50)
        pf = -np.expm1(-((sig / 3.0) ** 5))
        x, y = weibull_coords(sig, pf)
        slope, intercept = np.polyfit(x, y, 1)
        assert slope == pytest.approx(5.0, abs=1e-9)
        assert intercept == pytest.approx(-5.0 * np.log(3.0), abs=1e-9)

    def test_rejects_degenerate_probabilities(self):
        with pytest.raises(ValueError, match="undefined"):
            weibull_coords(1.0, 0.0)
        with pytest.raises(ValueError, match="undefined"):
            weibull_coords(1.0, 1.0)
        with pytest.raises(ValueError, match="positive"):
            weibull_coords(-1.0, 0.5)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-20.0, 1.0), st.floats(0.01, 50.0))
    def test_round_trip_through_probability(self, t, sigma):
        # pf built from a target Y* of t comes back as t: the expm1/log1p
        # pair cancels exactly even at Y* ~ -20 (pf ~ 1e-9 of 1e-9)
        pf = -math.expm1(-math.exp(t))
        x, y = weibull_coords(sigma, pf)
        assert y == pytest.approx(t, abs=1e-9)
        assert x == pytest.approx(math.log(sigma), abs=1e-12)


class TestTailSlope:
    def test_weibull_sample(self):
        rng = np.random.default_rng(2026)
        e = EmpiricalDistribution(3.0 * rng.weibull(5.0, 100_000))
        assert tail_slope(e, (1e-3, 0.1)) == pytest.approx(5.0, abs=0.3)

    def test_weakest_link_curve_recovers_tail_exponent(self, pg):
        # chain of 512: deep-tail Weibull slope equals the strength law's
        # power-tail exponent
        sig = np.geomspace(pg.inverse_cdf(1e-12 / 512),
                           pg.inverse_cdf(1e-8 / 512), 40)
        pf = weakest_link_cdf(pg, 512, sig)
        curve = CdfCurve(sig, pf, tag="chain")
        assert tail_slope(curve, (pf[0], pf[-1])) == pytest.approx(38.0, abs=1e-6)

    def test_two_term_curve_doubles_slope(self, pg):
        params = ModelParams(512, 6, 1.36)
        sig = np.geomspace(pg.inverse_cdf(1e-14), pg.inverse_cdf(1e-10), 30)
        pf = two_term_cdf(pg, params, sig)
        curve = CdfCurve(sig, pf, tag="two-term")
        assert tail_slope(curve, (pf[0], pf[-1])) == pytest.approx(76.0, abs=0.01)

    def test_needs_ten_points(self):
        e = EmpiricalDistribution(np.linspace(1.0, 2.0, 20))
        with pytest.raises(ValueError, match="need 10"):
            tail_slope(e, (1e-6, 1e-4))


class TestConvergenceCheck:
    def test_identical_samples_agree_exactly(self):
        full = EmpiricalDistribution(np.random.default_rng(77).normal(10, 1, 5000))
        interval, disc = convergence_check(full, full, -6.0)
        assert disc == 0.0
        assert interval is not None

    def test_half_versus_full(self):
        rng = np.random.default_rng(77)
        values = rng.normal(10.0, 1.0, 20_000)
        half = EmpiricalDistribution(values[:10_000])
        full = EmpiricalDistribution(values)
        interval, disc = convergence_check(half, full, -6.0)
        # same population: discrepancy stays at sampling-noise level and the
        # agreeing stretch covers the bulk of the strength range
        assert disc < 0.15
        assert interval is not None
        lo, hi = interval
        assert lo < 8.0 and hi > 12.0

    def test_floor_above_everything(self):
        e = EmpiricalDistribution([1.0, 2.0, 3.0, 4.0])
        interval, disc = convergence_check(e, e, 10.0)
        assert interval is None
        assert math.isnan(disc)


class TestHistogram:
    def test_uniform_density(self):
        e = EmpiricalDistribution(np.random.default_rng(5).uniform(2, 4, 100_000))
        centers, density = histogram(e, 20)
        assert centers.shape == density.shape == (20,)
        assert np.all(np.diff(centers) > 0)
        assert_allclose(density, 0.5, rtol=0.06)

    def test_density_integrates_to_one(self):
        e = EmpiricalDistribution(np.random.default_rng(6).normal(0, 1, 1000))
        centers, density = histogram(e, 13)
        width = centers[1] - centers[0]
        assert np.sum(density) * width == pytest.approx(1.0, abs=1e-12)

    def test_degenerate_sample_is_a_spike(self):
        e = EmpiricalDistribution([2.5, 2.5, 2.5])
        centers, density = histogram(e, 10)
        assert list(centers) == [2.5]
        assert density[0] == np.inf

    def test_rejects_single_bin(self):
        e = EmpiricalDistribution([1.0, 2.0])
        with pytest.raises(ValueError, match="at least 2"):
            histogram(e, 1)
