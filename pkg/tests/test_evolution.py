from fractions import Fraction as F
from math import sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from talbot_lab import evolution as ev
from talbot_lab import numbertheory as nt
from talbot_lab.exponents import DomainError, ParamVector, ProblemDims
from talbot_lab.guards import CostGuardError

BUMP = ev.BumpSpec()
U_21 = ParamVector.of("1/2", "3/4", "1/4")
U_20 = ParamVector.of("3/8", "5/6", "1/4")
DYADIC = [2.0 ** k for k in range(10, 17)]


def scale(n, m, R, u):
    return ev.CounterexampleScale(ProblemDims(n, m), R, u)


def dense_reference(bump, a, b, count=200_001):
    xi = np.linspace(-bump.c, bump.c, count)
    vals = bump(xi) * np.exp(2j * np.pi * (a * xi + b * xi * xi))
    return complex(np.trapezoid(vals, xi) if hasattr(np, "trapezoid") else np.trapz(vals, xi))


class TestQuadrature:
    def test_bump_validation(self):
        with pytest.raises(ValueError):
            ev.BumpSpec(c=0.5)
        with pytest.raises(ValueError):
            ev.BumpSpec(lattice=0)

    def test_profile_support(self):
        xi = np.array([-0.02, -0.01, 0.0, 0.01, 0.02])
        w = BUMP(xi)
        assert w[2] == pytest.approx(1.0) and w[0] == w[1] == w[3] == w[4] == 0

    def test_integral_and_norm_scale_with_radius(self):
        wide = ev.BumpSpec(c=0.1)
        assert wide.integral / BUMP.integral == pytest.approx(10, rel=1e-9)
        assert wide.l2_norm / BUMP.l2_norm == pytest.approx(sqrt(10), rel=1e-9)

    @settings(max_examples=25, deadline=None)
    @given(st.floats(-500, 500), st.floats(-200, 200))
    def test_against_dense_trapezoid(self, a, b):
        got = ev.oscillatory_integral(BUMP, np.array([a]), b)[0]
        ref = dense_reference(BUMP, a, b)
        assert abs(got - ref) <= 1e-7 * BUMP.integral

    def test_node_floor(self):
        with pytest.raises(ValueError):
            ev.oscillatory_integral(BUMP, np.zeros(1), 0.0, nodes=16)

    def test_halving_the_step_is_invisible(self):
        sc = scale(2, 1, 2.0 ** 12, U_21)
        point = ev.slab_point(sc)
        coarse = ev.evolve_g(sc, point.x[0], point.t, BUMP)
        fine = ev.evolve_g(sc, point.x[0], point.t, BUMP, nodes=4 * ev.MIN_NODES)
        assert abs(coarse - fine) <= 1e-6 * abs(fine)


class TestScale:
    def test_derived_quantities(self):
        sc = scale(2, 1, 2.0 ** 12, U_21)
        assert sc.D1 == pytest.approx(2.0 ** 9)
        assert sc.D2 == pytest.approx(2.0 ** 3)
        assert sc.Q == pytest.approx(1.0)
        assert sc.s == F(3, 8)

    def test_moduli(self):
        assert ev.moduli(scale(2, 1, 2.0 ** 12, U_21)) == [1]
        sc = scale(2, 0, 2.0 ** 12, U_20)
        qs = ev.moduli(sc)
        assert all(q % 2 == 1 and sc.Q / 2 <= q < sc.Q for q in qs)
        assert ev.select_modulus(sc) == qs[-1]
        with pytest.raises(DomainError):
            ev.moduli(scale(2, 1, 2.0 ** 10, ParamVector.of("1/4", "11/16", "1/4")))

    def test_small_R_rejected(self):
        with pytest.raises(DomainError):
            scale(2, 1, 1.0, U_21)

    @given(st.sampled_from([(2, 0, U_20), (2, 1, U_21), (3, 1, U_20)]), st.integers(10, 16),
           st.floats(0.1, 1.0))
    def test_slab_point_time_window(self, case, k, target):
        n, m, u = case
        point = ev.slab_point(scale(n, m, 2.0 ** k, u), target)
        travel = -2 * point.t * point.scale.R
        if 0.1 <= abs(point.x[0]) <= 1:
            assert 1 / 20 <= abs(travel) <= 2
            assert abs(travel - point.x[0]) < point.scale.R ** -0.5

    def test_slab_point_validation(self):
        sc = scale(2, 0, 2.0 ** 12, U_20)
        good = ev.slab_point(sc)
        with pytest.raises(DomainError):
            ev.SlabPoint(sc, good.q, good.p1, good.p_mid, good.p_last, (good.x[0] + 1, *good.x[1:]))
        with pytest.raises(DomainError):
            ev.SlabPoint(sc, good.q, good.p1, (), good.p_last, good.x)


class TestFactors:
    @settings(max_examples=20, deadline=None)
    @given(st.floats(-1, 1), st.floats(-1e-3, 1e-3))
    def test_conjugate_symmetry(self, x1, t):
        sc = scale(2, 1, 2.0 ** 11, U_21)
        plus = ev.evolve_g(sc, x1, t, BUMP)
        minus = ev.evolve_g(sc, -x1, -t, BUMP)
        assert abs(plus - minus.conjugate()) <= 1e-9 * max(1.0, abs(plus))

    @pytest.mark.parametrize("k", [10, 13, 16])
    def test_packet_on_its_path(self, k):
        R = 2.0 ** k
        sc = scale(2, 1, R, U_21)
        for x1 in (0.2, 0.5, 1.0):
            t = -x1 / (2 * R)
            assert abs(ev.evolve_g(sc, x1, t, BUMP)) >= 0.9 * sqrt(R) * BUMP.integral

    @pytest.mark.parametrize("k", [12, 14, 16])
    def test_packet_away_from_its_path(self, k):
        # only a wide bump sees |x1 + 2tR| = 1 as far away at these scales
        wide = ev.BumpSpec(c=0.1)
        R = 2.0 ** k
        sc = scale(2, 1, R, U_21)
        t = -0.5 / (2 * R)
        x1 = -2 * t * R + 1
        assert abs(ev.evolve_g(sc, x1, t, wide)) <= sqrt(R) * 1e-4

    def test_h2_at_centres(self):
        sc = scale(2, 1, 2.0 ** 12, U_21)
        count = ev._last_lattice(sc, BUMP).size
        assert ev.evolve_h2(sc, (0.0,), 0.0, BUMP) == pytest.approx(count * BUMP.integral, rel=1e-12)
        shifted = ev.evolve_h2(sc, (1 / sc.D2,), 0.0, BUMP)
        assert abs(shifted) == pytest.approx(count * BUMP.integral, rel=1e-2)

    def test_separable_product(self):
        point = ev.slab_point(scale(3, 1, 2.0 ** 12, U_20))
        value = ev.solution_at(point, BUMP)
        assert value.product == value.g_part * value.h1_part * value.h2_part

    def test_h1_matches_gauss_main_term(self):
        u = ParamVector.of("1/3", "3/4", "1/4")
        sc = scale(2, 0, 2.0 ** 10, u)
        point = ev.slab_point(sc)
        q = point.q
        assert q > 1
        ell, env = ev._middle_lattice(sc, BUMP)
        gauss = abs(nt.gauss_sum_1d(point.p1, point.p_mid[0], q))
        main = BUMP.integral * env.sum() / q * gauss
        got = abs(ev.evolve_h1(sc, point.x_mid, point.t, BUMP))
        assert got == pytest.approx(main, rel=0.15)


class TestNorm:
    def test_last_block_only(self):
        sc = scale(3, 2, 2.0 ** 12, U_21)
        count = ev._last_lattice(sc, BUMP).size
        expected = sc.R ** 0.25 * BUMP.l2_norm * (sqrt(count) * BUMP.l2_norm) ** 2
        assert ev.datum_norm(sc, BUMP) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("n,m,u", [(2, 0, U_20), (2, 1, U_21), (3, 1, U_20)])
    def test_norm_growth(self, n, m, u):
        norms = [ev.datum_norm(scale(n, m, R, u), BUMP) for R in DYADIC]
        expected = 0.25 + (n - m - 1) * float(u.u2 - u.u1) / 2 + m * float(F(1, 2) - u.u3) / 2
        assert ev.fitted_exponent(DYADIC, norms) == pytest.approx(expected, abs=0.05)
        heuristic = [R ** 0.25 * scale(n, m, R, u).middle_radius ** ((n - m - 1) / 2)
                     * scale(n, m, R, u).last_radius ** (m / 2) for R in DYADIC]
        ratios = [a / b for a, b in zip(norms, heuristic)]
        assert max(ratios) / min(ratios) <= 4

    def test_hs_ratio(self):
        sc = scale(2, 1, 2.0 ** 12, U_21)
        assert ev.hs_norm_ratio(sc, 0, BUMP) == 1.0
        r12 = ev.hs_norm_ratio(sc, 0.5, BUMP)
        r13 = ev.hs_norm_ratio(scale(2, 1, 2.0 ** 13, U_21), 0.5, BUMP)
        assert 0.5 <= r12 <= 2
        assert abs(r13 / r12 - 1) <= 0.1


class TestScaling:
    @pytest.mark.parametrize("n,m,u,tol", [(2, 1, U_21, 0.05), (2, 0, U_20, 0.05),
                                           (3, 1, U_20, 0.07)])
    def test_slope(self, n, m, u, tol):
        fit = ev.slope_fit(ProblemDims(n, m), u, DYADIC, BUMP)
        assert fit.deviation <= tol
        assert fit.spread < 4

    def test_needs_four_scales(self):
        with pytest.raises(ValueError):
            ev.slope_fit(ProblemDims(2, 1), U_21, DYADIC[:3])

    def test_calibrated_size_is_stable(self):
        ratios = []
        for R in DYADIC:
            point = ev.slab_point(scale(2, 0, R, U_20))
            value = ev.solution_at(point, BUMP)
            ratios.append(value.normalized_magnitude / ev.heuristic_size(point.scale, point.q))
        assert max(ratios) / min(ratios) <= 16

    def test_off_scale_at_own_scale(self):
        sc = scale(2, 1, 2.0 ** 12, U_21)
        point = ev.slab_point(sc)
        value = ev.solution_at(point, BUMP)
        direct = value.normalized_magnitude / sc.R ** float(sc.s)
        assert ev.off_scale_decay(sc, point, BUMP) == pytest.approx(direct, rel=1e-12)

    def test_off_scale_point_window(self):
        sc = scale(2, 1, 2.0 ** 12, U_21)
        with pytest.raises(DomainError):
            ev.off_scale_decay(sc, ev.slab_point(sc, 0.05), BUMP)

    def test_single_term_partial_sum(self):
        dims = ProblemDims(2, 1)
        sc = scale(2, 1, 2.0 ** 12, U_21)
        point = ev.slab_point(sc)
        value = ev.solution_at(point, BUMP)
        expected = 12 * value.product / (sc.R ** float(sc.s) * value.norm)
        got = ev.dyadic_partial(point.x, point.t, 12, 12, dims, U_21, BUMP)
        assert got == pytest.approx(expected, rel=1e-12)

    def test_partial_sum_guard(self):
        with pytest.raises(CostGuardError):
            ev.dyadic_partial((0.5, 0.0), 0.0, 10, 20, ProblemDims(2, 1), U_21, BUMP)

    def test_partial_sums_grow(self):
        dims = ProblemDims(2, 1)
        reports = [ev.dyadic_report(k, 10, 16, dims, U_21, BUMP, 0.95) for k in (11, 12, 13)]
        assert all(r.lower_bound > 0 for r in reports)
        unit = abs(ev.dyadic_report(10, 10, 16, dims, U_21, BUMP, 0.95).on_scale) / 10
        assert abs(reports[1].total) >= 0.25 * 12 * unit
