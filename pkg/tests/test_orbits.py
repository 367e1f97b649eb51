"""
Tests for SL(2,Z) orbit classification of primitive pairs
"""

import math

import pytest
import numpy as np

from heislat.orbits import (
    GENERATORS, OrbitClass, PrimPair, S_GEN, T_GEN, apply, canonicalize, checked_census,
    det_pair, egcd, mat_mul, mat_vec, orbit_census, orbit_closure, orbit_count_bruteforce,
    random_prim_pair, random_sl2z, reducing_matrix, same_orbit, totient,
    verify_classes_by_closure, word_to_matrix,
)
from heislat.utils import DomainError, InvariantViolation, PreconditionError


class TestArithmetic:

    @pytest.mark.parametrize("a,b", [(2, 1), (0, 1), (1, 0), (-3, 7), (12, -5), (0, -1)])
    def test_egcd(self, a, b):
        g, x, y = egcd(a, b)
        assert g == math.gcd(a, b)
        assert a * x + b * y == g

    @pytest.mark.parametrize("m", [(1, 0), (0, 1), (3, 5), (-4, 7), (0, -1), (-1, 0)])
    def test_reducing_matrix(self, m):
        gamma = reducing_matrix(m)
        (a, b), (c, d) = gamma
        assert a * d - b * c == 1
        assert mat_vec(gamma, m) == (1, 0)

    def test_reducing_matrix_rejects_non_primitive(self):
        with pytest.raises(DomainError):
            reducing_matrix((2, 4))

    def test_generators_have_determinant_one(self):
        for gen in GENERATORS:
            (a, b), (c, d) = gen
            assert a * d - b * c == 1
        assert mat_mul(S_GEN, S_GEN) == ((-1, 0), (0, -1))
        assert word_to_matrix([T_GEN, T_GEN]) == ((1, 2), (0, 1))

    def test_totient(self):
        assert [totient(n) for n in range(1, 13)] == [1, 1, 2, 2, 4, 2, 6, 4, 6, 4, 10, 4]
        assert totient(-5) == 4


class TestCanonicalize:

    @pytest.mark.parametrize("m,n,D", [((1, 0), (0, 1), 1), ((1, 0), (1, 0), 0), ((1, 0), (2, 5), 5)])
    def test_det_pair(self, m, n, D):
        assert det_pair(PrimPair(m, n)) == D

    def test_primitive_pairs_only(self):
        with pytest.raises(DomainError):
            PrimPair((2, 4), (1, 0))
        with pytest.raises(DomainError):
            PrimPair((1, 0), (0, 0))

    def test_identity_pair(self):
        c = canonicalize(PrimPair((1, 0), (0, 1)))
        assert c.D == 1
        assert c.rep == PrimPair((1, 0), (0, 1))

    def test_degenerate_positive(self):
        c = canonicalize(PrimPair((1, 0), (1, 0)))
        assert c.D == 0 and c.sign_tag == 1
        assert c.label() == "0+"

    def test_degenerate_negative(self):
        c = canonicalize(PrimPair((3, -2), (-3, 2)))
        assert c.D == 0 and c.sign_tag == -1
        assert c.rep == PrimPair((1, 0), (-1, 0))

    def test_unit_determinant_pair(self):
        assert canonicalize(PrimPair((2, 1), (1, 1))).rep == PrimPair((1, 0), (0, 1))
        assert canonicalize(PrimPair((1, 0), (7, -1))).rep == PrimPair((1, 0), (0, -1))

    def test_accepts_tuples(self):
        assert canonicalize(((1, 0), (2, 5))).label() == "D=5,k=2"

    def test_distinct_residues(self):
        assert not same_orbit(PrimPair((1, 0), (1, 5)), PrimPair((1, 0), (2, 5)))
        assert not same_orbit(PrimPair((1, 0), (0, 1)), PrimPair((1, 0), (1, 0)))
        assert same_orbit(PrimPair((1, 0), (1, 5)), PrimPair((1, 0), (6, 5)))

    def test_representative_is_fixed(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            c = canonicalize(random_prim_pair(rng))
            assert canonicalize(c.rep) == c
            assert det_pair(c.rep) == c.D

    def test_invariance_under_random_words(self):
        rng = np.random.default_rng(8)
        for _ in range(10_000):
            p = random_prim_pair(rng)
            gamma = random_sl2z(rng, max_length=12)
            assert canonicalize(apply(gamma, p)) == canonicalize(p)

    def test_residues_are_coprime(self):
        rng = np.random.default_rng(9)
        for _ in range(500):
            c = canonicalize(random_prim_pair(rng, bound=20))
            if abs(c.D) > 1:
                assert 0 <= c.residue < abs(c.D)
                assert math.gcd(c.residue, c.D) == 1


class TestCensus:

    @pytest.mark.parametrize("D,expected", [(1, 1), (-1, 1), (5, 4), (4, 2), (0, 2)])
    def test_orbit_counts(self, D, expected):
        assert orbit_count_bruteforce(D, 50) == expected

    @pytest.mark.parametrize("D", [2, 3, 4, 5, 6, -6, -5, -4, -3, -2])
    def test_counts_match_totient(self, D):
        census = checked_census(D, 50, verify=False)
        assert len(census["classes"]) == totient(D)
        assert all(math.gcd(k, D) == 1 for k in census["residues"])

    def test_degenerate_census_signs(self):
        assert orbit_census(0, 50)["residues"] == [-1, 1]

    def test_preconditions(self):
        with pytest.raises(PreconditionError):
            orbit_count_bruteforce(13, 60)
        with pytest.raises(PreconditionError):
            orbit_count_bruteforce(5, 49)

    def test_closure_stays_in_orbit(self):
        p = PrimPair((1, 0), (2, 5))
        closure = orbit_closure(p, bound=8)
        assert p.as_tuple() in closure
        assert len(closure) > 1
        assert all(canonicalize(PrimPair(*q)) == canonicalize(p) for q in closure)

    def test_merged_classes_detected(self):
        a = OrbitClass(5, PrimPair((1, 0), (1, 5)))
        fake = OrbitClass(5, PrimPair((1, 0), (6, 5)))
        with pytest.raises(InvariantViolation):
            verify_classes_by_closure({a, fake})
