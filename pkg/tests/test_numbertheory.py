import cmath
from fractions import Fraction
from math import gcd, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from talbot_lab import numbertheory as nt
from talbot_lab.guards import CostGuardError

odd_q = st.integers(0, 99).map(lambda k: 2 * k + 1)


@st.composite
def unit_mod(draw, q_strategy=odd_q):
    q = draw(q_strategy)
    a = draw(st.integers(1, max(q - 1, 1)).filter(lambda a: gcd(a, q) == 1))
    return q, a


def naive_sum(a, b, q):
    return sum(cmath.exp(2j * cmath.pi * (a * n * n + b * n) / q) for n in range(q))


class TestArithmetic:
    def test_examples(self):
        assert nt.totient(9) == 6
        assert nt.mobius(1) == 1
        assert nt.mobius(12) == 0
        assert nt.mobius(30) == -1

    def test_sieve_matches_factorisation(self):
        tables = nt.sieve(2000)
        for q in range(1, 2001):
            assert tables.phi[q] == nt.totient(q)
            assert tables.mu[q] == nt.mobius(q)
        assert list(tables.primes[:6]) == [2, 3, 5, 7, 11, 13]

    def test_totient_identity_up_to_ten_thousand(self):
        tables = nt.sieve(10_000)
        for q in range(1, 10_001):
            assert nt.totient_via_mobius(q) == tables.phi[q]

    @given(st.integers(1, 3000))
    def test_totient_counts_units(self, q):
        assert nt.totient(q) == sum(1 for k in range(1, q + 1) if gcd(k, q) == 1)

    def test_sieve_limit(self):
        with pytest.raises(ValueError):
            nt.sieve(0)


class TestGaussSums:
    def test_examples(self):
        assert abs(abs(nt.gauss_sum_1d(1, 0, 3)) - sqrt(3)) < 1e-12
        assert nt.gauss_sum_1d(1, 0, 1) == pytest.approx(1)

    @given(unit_mod(), st.integers(-50, 50))
    def test_magnitude(self, qa, b):
        q, a = qa
        assert abs(abs(nt.gauss_sum_1d(a, b, q)) - sqrt(q)) <= 1e-9 * sqrt(q)

    @given(unit_mod(st.integers(0, 30).map(lambda k: 2 * k + 1)), st.integers(0, 60))
    def test_matches_naive_summation(self, qa, b):
        q, a = qa
        assert abs(nt.gauss_sum_1d(a, b, q) - naive_sum(a, b, q)) < 1e-9 * q

    @given(odd_q, st.integers(-20, 20))
    def test_vectorised_over_units(self, q, b):
        units, sums = nt.gauss_sums_over_units(q, b)
        assert len(units) == nt.totient(q)
        for a, g in list(zip(units, sums))[:5]:
            assert abs(g - nt.gauss_sum_1d(int(a), b, q)) < 1e-9 * sqrt(q)

    def test_product_example(self):
        spec = nt.GaussSumSpec(5, 2, (0, 0))
        assert abs(abs(nt.gauss_sum_multi(spec)) - 5) < 1e-12
        assert abs(nt.gauss_sum_multi(spec) - nt.gauss_sum_direct(spec)) < 1e-10

    @settings(max_examples=40, deadline=None)
    @given(unit_mod(st.integers(0, 15).map(lambda k: 2 * k + 1)),
           st.lists(st.integers(-40, 40), min_size=1, max_size=3))
    def test_product_equals_direct(self, qa, b):
        q, a = qa
        spec = nt.GaussSumSpec(q, a, tuple(b))
        multi, direct = nt.gauss_sum_multi(spec), nt.gauss_sum_direct(spec)
        assert abs(multi - direct) <= 1e-10 * max(1.0, abs(direct))
        assert abs(abs(multi) - q ** (spec.d / 2)) <= 1e-9 * q ** (spec.d / 2)

    def test_one_dimension_reduces(self):
        assert nt.gauss_sum_multi(nt.GaussSumSpec(7, 3, (2,))) == nt.gauss_sum_1d(3, 2, 7)

    def test_bad_specs(self):
        with pytest.raises(ValueError):
            nt.GaussSumSpec(4, 1, (0,))
        with pytest.raises(ValueError):
            nt.GaussSumSpec(9, 3, (0,))
        with pytest.raises(CostGuardError):
            nt.gauss_sum_direct(nt.GaussSumSpec(199, 1, (0, 0, 0, 0)))


class TestCounting:
    def test_examples(self):
        assert nt.count_index_set(8, 1).count == 10
        assert nt.count_index_set(8, 1).normalized == 10 / 64
        assert nt.count_index_set(4, 1).count == 2

    @given(st.integers(4, 300), st.integers(1, 3))
    def test_sieve_and_gcd_routes_agree(self, Q, N):
        assert nt.count_index_set(Q, N).count == nt.count_index_set_by_gcd(Q, N).count

    @pytest.mark.parametrize("N", [1, 2, 3])
    def test_normalized_stable(self, N):
        values = [nt.count_index_set(2 ** k, N).normalized for k in range(8, 12)]
        for x, y in zip(values, values[1:]):
            assert abs(y / x - 1) < 0.1

    def test_pairs_contain_diagonal(self):
        for Q, N, t in ((16, 1, 2), (16, 2, Fraction(3, 2))):
            pairs = nt.count_intersecting_pairs(Q, t, t, N).count
            assert pairs >= nt.count_index_set(Q, N).count

    def test_pair_ratio_bounded(self):
        report = nt.count_intersecting_pairs(16, 2, 2, 1)
        assert report.count / 16 ** 2 <= 20

    @pytest.mark.parametrize("Q,N,t", [(8, 1, 2), (16, 1, 2), (8, 2, Fraction(3, 2)),
                                       (16, 2, Fraction(3, 2))])
    def test_factorised_pairs_match_bruteforce(self, Q, N, t):
        assert (nt.count_intersecting_pairs(Q, t, t, N).count
                == nt.count_intersecting_pairs_bruteforce(Q, t, t, N).count)

    def test_pair_ratio_across_scales(self):
        for N, t in ((1, 2), (2, Fraction(3, 2))):
            ratios = [nt.count_intersecting_pairs(Q, t, t, N).count / Q ** (N + 1) for Q in (16, 32, 64)]
            assert max(ratios) / min(ratios) < 2

    def test_pair_guards(self):
        with pytest.raises(CostGuardError):
            nt.count_intersecting_pairs(128, 2, 2, 1)
        with pytest.raises(ValueError):
            nt.count_intersecting_pairs(16, 1, 1, 1)


class TestPerturbation:
    def test_full_periods_are_exact(self):
        q = 7
        box = lambda x: np.where((np.asarray(x) >= -1) & (np.asarray(x) < 1), 1.0, 0.0)
        r = nt.perturbation_check(q, 3, (2,), float(q), 1, cutoff=box)
        assert abs(r.lhs - r.main_term) < 1e-9

    def test_relative_error_one_dimension(self):
        r = nt.perturbation_check(31, 1, (3,), 31.0 ** 2, 1)
        assert r.relative_error <= 0.1

    @pytest.mark.parametrize("q,p_prime,N", [(31, (3,), 1), (7, (1, 2), 2)])
    def test_decay_rate(self, q, p_prime, N):
        Ls = [float(q * q) * 2 ** i for i in range(3)]
        sweep = nt.perturbation_sweep(q, 1, p_prime, Ls, N)
        assert abs(sweep.slope - sweep.expected_slope) <= 0.5
        assert sweep.bound_holds

    def test_argument_checks(self):
        with pytest.raises(ValueError):
            nt.perturbation_check(8, 1, (1,), 64.0, 1)
        with pytest.raises(ValueError):
            nt.perturbation_check(7, 1, (1, 1), 49.0, 1)
        with pytest.raises(CostGuardError):
            nt.perturbation_check(7, 1, (1, 1, 1), 1e4, 2)

    def test_cutoffs(self):
        x = np.linspace(-1.5, 1.5, 31)
        w = nt.power_cutoff(3)(x)
        assert w[15] == 1.0 and np.all(w[np.abs(x) >= 1] == 0)
        s = nt.smooth_cutoff(x)
        assert s[15] == pytest.approx(1.0) and np.all(s >= 0)
