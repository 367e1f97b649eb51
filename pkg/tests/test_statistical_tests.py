"""
Tests for the statistical helpers
"""

import math
import warnings

import numpy as np
import pytest

from heislat.statistical_tests import (
    ZETA2, below_bound, binomial_se, chisquare_uniformity, combined_se,
    fit_inverse_measure_constant, is_non_increasing, mean_and_se, second_moment_about, sqrt_se,
    within_se, z_score,
)


class TestStandardErrors:

    def test_zeta2(self):
        assert math.isclose(ZETA2, math.pi ** 2 / 6, rel_tol=1e-12)

    def test_mean_and_se(self):
        mean, se = mean_and_se([1.0, 2.0, 3.0, 4.0])
        assert mean == 2.5
        assert math.isclose(se, np.std([1, 2, 3, 4], ddof=1) / 2.0)

    def test_degenerate_inputs(self):
        assert all(math.isnan(x) for x in mean_and_se([]))
        mean, se = mean_and_se([5.0])
        assert mean == 5.0 and math.isnan(se)

    def test_second_moment(self):
        mean, _ = second_moment_about([0.0, 2.0], 1.0)
        assert mean == 1.0

    def test_se_arithmetic(self):
        assert binomial_se(0.5, 100) == 0.05
        assert math.isnan(binomial_se(0.5, 0))
        assert combined_se(3.0, 4.0) == 5.0
        assert sqrt_se(4.0, 0.4) == 0.1
        assert math.isnan(sqrt_se(0.0, 0.1))
        assert z_score(1.3, 1.0, 0.1) == pytest.approx(3.0)
        assert z_score(1.0, 1.0, 0.0) == 0.0


class TestVerdicts:

    def test_within_se(self):
        ok, tol = within_se(1.25, 1.0, 0.1)
        assert ok and tol == pytest.approx(0.3)
        ok, _ = within_se(1.5, 1.0, 0.1)
        assert not ok
        ok, tol = within_se(1.5, 10.0, 0.0, rel=0.05)
        assert not ok and tol == 0.5
        ok, tol = within_se(1.001, 1.0, 0.0, abs_tol=2e-3)
        assert ok and tol == 2e-3

    def test_below_bound(self):
        assert below_bound(1.2, 1.0, 0.1) == (True, pytest.approx(0.3))
        assert not below_bound(1.5, 1.0, 0.1)[0]

    def test_non_increasing(self):
        assert is_non_increasing([0.5, 0.3, 0.31], [0.01, 0.01, 0.01])
        assert not is_non_increasing([0.1, 0.5], [0.01, 0.01])


class TestChiSquare:

    def test_uniform_points_pass(self):
        rng = np.random.default_rng(0)
        result = chisquare_uniformity(rng.random((20_000, 2)))
        assert result["p_value"] > 1e-4
        assert result["n"] == 20_000 and result["bins"] == 10

    def test_clustered_points_fail(self):
        rng = np.random.default_rng(1)
        result = chisquare_uniformity(0.5 * rng.random((20_000, 2)))
        assert result["p_value"] < 1e-6

    def test_small_sample_warns(self):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            chisquare_uniformity(np.random.default_rng(2).random((50, 2)))
        assert any("below 5" in str(w.message) for w in caught)


class TestInverseMeasureFit:

    def test_exact_inverse_law(self):
        m = np.array([5.0, 10.0, 20.0, 40.0])
        fit = fit_inverse_measure_constant(m, 2.0 / m)
        assert fit["C"] == pytest.approx(2.0)
        np.testing.assert_allclose(fit["products"], 2.0)

    def test_weighted_fit(self):
        m = np.array([5.0, 10.0, 20.0])
        rates = 3.0 / m
        fit = fit_inverse_measure_constant(m, rates, ses=[0.01, 0.0, 0.02])
        assert fit["C"] == pytest.approx(3.0)
