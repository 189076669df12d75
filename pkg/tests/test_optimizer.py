from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from talbot_lab import optimizer as opt
from talbot_lab.exponents import (DomainError, ProblemDims, all_breakpoints, alpha_dims, curve_m, s3, s4,
                                  s_from_params, s_m_of_alpha, s_of_alpha, theorem1_case)


@st.composite
def slice_st(draw, n_max=12, max_den=24):
    n = draw(st.integers(2, n_max))
    dims = ProblemDims(n, draw(st.integers(0, n - 1)))
    curve = curve_m(dims)
    d = draw(st.integers(1, max_den))
    k = draw(st.integers(-(-curve.lo * d // 1), int(curve.hi * d)))
    return dims, F(k, d)


class TestSlice:
    def test_examples(self):
        res = opt.exact_max_on_slice(ProblemDims(15, 4), 10)
        # m = 4 is in the small regime for n = 15, so s3 is the live piece at alpha = 10
        assert res.s_star == s_m_of_alpha(ProblemDims(15, 4), 10) == F(65, 24)
        res = opt.exact_max_on_slice(ProblemDims(4, 1), 2)
        assert (res.s_star, res.u2, res.u3) == (1, F(1, 2), 0)

    @given(st.integers(2, 20), st.integers(0, 64))
    def test_last_block_slice(self, n, k):
        alpha = 1 + F(k * (n - 1), 64)
        res = opt.exact_max_on_slice(ProblemDims(n, n - 1), alpha)
        assert res.s_star == (1 + n - alpha) / 4

    def test_argmax_attains_value(self):
        dims = ProblemDims(9, 2)
        for alpha in (F(9, 2), 6, F(15, 2), 9):
            res = opt.exact_max_on_slice(dims, alpha)
            assert s_from_params(dims, res.u2, res.u3) == res.s_star
            assert min(alpha_dims(dims, res.u2, res.u3)) == alpha

    def test_bad_step(self):
        with pytest.raises(DomainError):
            opt.exact_max_on_slice(ProblemDims(4, 1), 3, F(1, 10**7))
        with pytest.raises(DomainError):
            opt.exact_max_on_slice(ProblemDims(4, 1), 3, 0)

    def test_empty_slice(self):
        with pytest.raises(opt.EmptySliceError):
            opt.exact_max_on_slice(ProblemDims(6, 0), 2)

    @settings(max_examples=60, deadline=None)
    @given(slice_st())
    def test_grid_route_matches_fraction_route(self, case):
        dims, alpha = case
        step = F(1, 40)
        fast = opt.exact_max_on_slice(dims, alpha, step)
        slow = opt.exact_max_on_slice_reference(dims, alpha, step)
        assert (fast.s_star, fast.u2, fast.u3) == (slow.s_star, slow.u2, slow.u3)

    @settings(max_examples=80, deadline=None)
    @given(slice_st())
    def test_oracle_equals_closed_form(self, case):
        dims, alpha = case
        assert opt.exact_max_on_slice(dims, alpha).s_star == s_m_of_alpha(dims, alpha)

    @settings(max_examples=60, deadline=None)
    @given(slice_st())
    def test_grid_only_sound_and_close(self, case):
        dims, alpha = case
        step = F(1, 100)
        try:
            found = opt.exact_max_on_slice(dims, alpha, step, include_vertices=False).s_star
        except opt.EmptySliceError:
            return
        exact = s_m_of_alpha(dims, alpha)
        assert found <= exact
        assert exact - found <= F(dims.n, 2) * step


class TestPiecewise:
    def test_aligned_grid_is_exact(self):
        dims = ProblemDims(15, 4)
        grid = [F(15, 2) + k * F(1, 8) for k in range(61)]
        report = opt.verify_piecewise(dims, grid)
        assert report.max_deviation == 0 and report.points == 61 and report.ok

    def test_breakpoints(self):
        dims = ProblemDims(8, 3)
        report = opt.verify_piecewise(dims, curve_m(dims).breakpoints)
        assert report.max_deviation == 0

    def test_degenerate_family(self):
        dims = ProblemDims(6, 5)
        assert opt.verify_piecewise(dims, opt.alpha_grid(dims, F(1, 4))).max_deviation == 0

    @pytest.mark.parametrize("n", [7, 10, 15])
    def test_branch_labels_follow_thresholds(self, n):
        for m in range(n):
            dims = ProblemDims(n, m)
            for alpha in opt.alpha_grid(dims, F(1, 4)):
                expected = opt.expected_active(dims, alpha)
                if expected is None:
                    continue
                active = opt.exact_max_on_slice(dims, alpha).active
                high, low = expected
                if high:
                    assert opt.ALPHA2_HIGH in active
                if low:
                    assert opt.ALPHA2_LOW in active or opt.ALPHA2_HIGH in active


class TestGrandMax:
    def test_examples(self):
        value, winners = opt.grand_max_oracle(15, 14)
        dims0, dims1 = ProblemDims(15, 0), ProblemDims(15, 1)
        assert value == max(s3(dims0, 14), s4(dims1, 14))
        assert set(theorem1_case(15, 14).active_m) & set(winners)
        value, winners = opt.grand_max_oracle(6, 3)
        assert value == s3(ProblemDims(6, 1), 3) and 1 in winners

    @settings(max_examples=40, deadline=None)
    @given(st.integers(2, 16), st.data())
    def test_matches_envelope(self, n, data):
        d = data.draw(st.integers(1, 16))
        alpha = F(data.draw(st.integers(n * d // 2 + (n * d) % 2, n * d)), d)
        oracle, oracle_m = opt.grand_max_oracle(n, alpha)
        env, env_m = s_of_alpha(n, alpha)
        assert oracle == env
        assert oracle_m[0] == env_m[0]

    def test_winner_changes_only_at_breakpoints(self):
        n = 13
        alphas = [F(13, 2) + k * F(1, 16) for k in range(105)]
        winners = [s_of_alpha(n, a)[1][0] for a in alphas]
        edges = set(all_breakpoints(n))
        for (a, wa), (b, wb) in zip(zip(alphas, winners), zip(alphas[1:], winners[1:])):
            if wa != wb:
                assert any(a <= e <= b for e in edges)
