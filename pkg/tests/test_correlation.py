"""
Tests for exact and quasi-Monte Carlo pair correlations
"""

import math

import pytest

from heislat.correlation import cor_antipodal, cor_direct, cor_exact, cor_numeric
from heislat.orbits import PrimPair, apply
from heislat.statistical_tests import combined_se
from heislat.utils import DomainError, PreconditionError

SAMPLES = 2 ** 17


class TestExactCorrelation:

    def test_same_vector(self):
        assert cor_exact((1, 0), (1, 0), 0.3, 0.1) == 0.3

    def test_generic_pair(self):
        assert math.isclose(cor_exact((1, 0), (0, 1), 0.3, 0.0), 0.09)
        assert math.isclose(cor_exact((1, 0), (2, 5), 0.25, 0.7), 0.0625)

    def test_opposite_vector(self):
        assert cor_exact((1, 0), (-1, 0), 0.3, 0.0) == 0.0

    def test_non_primitive_rejected(self):
        with pytest.raises(DomainError):
            cor_exact((2, 0), (1, 0), 0.3, 0.0)

    def test_eps_validated(self):
        with pytest.raises(ValueError):
            cor_exact((1, 0), (0, 1), 1.0, 0.0)


class TestAntipodal:

    @pytest.mark.parametrize("eps", [0.1, 0.25, 0.4, 0.5])
    def test_vanishes_at_level_zero_for_thin_plates(self, eps):
        assert cor_antipodal(eps, 0.0) == pytest.approx(0.0, abs=1e-12)

    def test_thick_plate_at_level_zero(self):
        assert cor_antipodal(0.7, 0.0) == pytest.approx(0.4)

    def test_arcs_coincide_at_half_eps(self):
        assert cor_antipodal(0.3, 0.15) == pytest.approx(0.3)

    def test_bounded_by_eps(self):
        for i in range(50):
            assert 0.0 <= cor_antipodal(0.3, i / 50) <= 0.3 + 1e-12

    def test_direct_uses_arc_overlap(self):
        assert cor_direct((1, 0), (-1, 0), 0.3, 0.15) == pytest.approx(0.3)
        assert cor_direct((1, 0), (1, 0), 0.3, 0.15) == 0.3
        assert cor_direct((1, 0), (3, 1), 0.3, 0.15) == pytest.approx(0.09)


class TestNumericCorrelation:

    @pytest.mark.parametrize("m,n,eps,z", [
        ((1, 0), (1, 0), 0.3, 0.0),
        ((1, 0), (3, 1), 0.25, 0.4),
        ((1, 0), (-1, 0), 0.25, 0.0),
        ((1, 0), (2, 5), 0.1, 0.0),
        ((2, 1), (1, 1), 0.4, 0.0),
    ])
    def test_agrees_with_exact(self, m, n, eps, z):
        est, se = cor_numeric(m, n, eps, z, samples=SAMPLES, seed=3)
        assert abs(est - cor_exact(m, n, eps, z)) <= max(3 * se, 2e-3)

    def test_antipodal_at_half_eps_matches_arc_overlap(self):
        est, se = cor_numeric((1, 0), (-1, 0), 0.3, 0.15, samples=SAMPLES, seed=4)
        assert abs(est - cor_antipodal(0.3, 0.15)) <= max(3 * se, 2e-3)

    def test_symmetric(self):
        a, sa = cor_numeric((1, 0), (2, 3), 0.25, 0.3, samples=SAMPLES, seed=5)
        b, sb = cor_numeric((2, 3), (1, 0), 0.25, 0.3, samples=SAMPLES, seed=6)
        assert abs(a - b) <= max(3 * combined_se(sa, sb), 2e-3)

    def test_diagonal_action_invariance(self):
        gamma = ((2, 1), (1, 1))
        p = PrimPair((1, 0), (1, 2))
        q = apply(gamma, p)
        a, sa = cor_numeric(p.m, p.n, 0.3, 0.2, samples=SAMPLES, seed=7)
        b, sb = cor_numeric(q.m, q.n, 0.3, 0.2, samples=SAMPLES, seed=8)
        assert abs(a - b) <= max(3 * combined_se(sa, sb), 2e-3)

    def test_reproducible(self):
        assert cor_numeric((1, 0), (0, 1), 0.2, 0.0, samples=20_000, seed=9) == \
            cor_numeric((1, 0), (0, 1), 0.2, 0.0, samples=20_000, seed=9)

    def test_preconditions(self):
        with pytest.raises(PreconditionError):
            cor_numeric((1, 0), (0, 1), 0.2, 0.0, samples=100)
        with pytest.raises(PreconditionError):
            cor_numeric((1, 0), (0, 1), 0.2, 0.0, replicates=1)
