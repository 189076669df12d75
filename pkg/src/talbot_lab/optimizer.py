"""Brute-force maximisation of the regularity over the constraint slice.

For a target dimension ``alpha`` the admissible ``(u2, u3)`` satisfy
``min(alpha1, alpha2) = alpha``. Along a grid in ``u2`` each branch equation is
solved exactly for ``u3``; every candidate is re-checked against the closed
parameter region and against the min-consistency condition. The vertices of
the slice (where the level line meets an edge of the region or the
``alpha1 = alpha2`` crease) are added to the grid, so the result is the exact
maximum of a linear function over a polygonal path.

The grid sweep runs on scaled integers with numpy; the vertices and a slow
reference sweep use :class:`fractions.Fraction` only.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exponents import (
    HALF,
    DomainError,
    ParamVector,
    ProblemDims,
    alpha1,
    alpha2_high,
    alpha2_low,
    as_fraction,
    beta1,
    beta2,
    check_params,
    curve_m,
    regime,
    s_from_params,
    s_of_alpha,
    u2_upper,
)

THREE_QUARTERS = Fraction(3, 4)
DEFAULT_STEP = Fraction(1, 1000)

ALPHA1 = "alpha1-active"
ALPHA2_LOW = "alpha2-low"
ALPHA2_HIGH = "alpha2-high"
DEGENERATE = "degenerate-u3"
# when several branch equations hold at the maximiser, report the first listed
_LABEL_PRIORITY = (ALPHA2_HIGH, ALPHA2_LOW, ALPHA1)


class EmptySliceError(DomainError):
    """No admissible (u2, u3) attains the requested dimension."""


@dataclass(frozen=True)
class OracleResult:
    s_star: Fraction
    u2: Fraction
    u3: Fraction
    branch: str
    step: Fraction
    active: frozenset = frozenset()


def default_u1(u2: Fraction) -> Fraction:
    return min(HALF, 2 * u2 - 1)


def _branch_u3(dims: ProblemDims, alpha: Fraction, u2: Fraction, branch: str):
    """Solve the branch equation for u3; ``None`` when it has no unique answer."""
    n, m = dims.n, dims.m
    if m == 0:
        # u3 plays no role: the equation must hold on its own
        lhs = {ALPHA1: alpha1, ALPHA2_LOW: alpha2_low}.get(branch)
        value = lhs(dims, u2, 0) if lhs else alpha2_high(dims, 0)
        return Fraction(0) if value == alpha else None
    if branch == ALPHA1:
        return (alpha - Fraction(m - 1, 2) - (n - m + 1) * u2) / m
    if branch == ALPHA2_LOW:
        return (alpha - (n - m - 3) - 4 * u2) / (2 * m)
    return (alpha - (n - m)) / (2 * m)


def _admissible(dims: ProblemDims, alpha: Fraction, u2: Fraction, u3: Fraction, branch: str) -> bool:
    if not (0 <= u3 <= HALF):
        return False
    if branch == ALPHA2_LOW and u2 > THREE_QUARTERS:
        return False
    if branch == ALPHA2_HIGH and u2 < THREE_QUARTERS:
        return False
    if not (HALF <= u2 <= u2_upper(dims)):
        return False
    a1 = alpha1(dims, u2, u3)
    a2 = alpha2_low(dims, u2, u3) if u2 <= THREE_QUARTERS else alpha2_high(dims, u3)
    if min(a1, a2) != alpha:
        return False
    u = ParamVector(default_u1(u2), u2, u3)
    return check_params(dims, u).boundary_feasible


def candidates_at(dims: ProblemDims, alpha, u2) -> list[tuple[Fraction, Fraction, Fraction, str]]:
    """All admissible ``(s, u2, u3, branch)`` on the vertical line through ``u2``."""
    alpha, u2 = as_fraction(alpha), as_fraction(u2)
    out = []
    for branch in (ALPHA1, ALPHA2_LOW, ALPHA2_HIGH):
        u3 = _branch_u3(dims, alpha, u2, branch)
        if u3 is None or not _admissible(dims, alpha, u2, u3, branch):
            continue
        out.append((s_from_params(dims, u2, u3), u2, u3, branch))
    return out


def _solve2(a11, a12, b1, a21, a22, b2):
    det = a11 * a22 - a12 * a21
    if det == 0:
        return None
    return (b1 * a22 - a12 * b2) / det, (a11 * b2 - b1 * a21) / det


def slice_vertices(dims: ProblemDims, alpha) -> set[Fraction]:
    """u2 coordinates where the level set can bend or leave the region."""
    n, m = dims.n, dims.m
    alpha = as_fraction(alpha)
    pts = {HALF, THREE_QUARTERS, u2_upper(dims)}
    for u3 in (Fraction(0), HALF):
        # alpha1 = alpha and alpha2-low = alpha along the two horizontal edges
        pts.add((alpha - Fraction(m - 1, 2) - m * u3) / (n - m + 1))
        pts.add((alpha - (n - m - 3) - 2 * m * u3) / 4)
    # crease alpha1 = alpha2 intersected with the level alpha
    if m > 0:
        low = _solve2(n - m + 1, m, alpha - Fraction(m - 1, 2), 4, 2 * m, alpha - (n - m - 3))
        if low:
            pts.add(low[0])
        u3_high = (alpha - (n - m)) / (2 * m)
        pts.add((alpha - Fraction(m - 1, 2) - m * u3_high) / (n - m + 1))
    lo, hi = HALF, u2_upper(dims)
    return {p for p in pts if lo <= p <= hi}


def _grid_count(dims: ProblemDims, step: Fraction) -> int:
    return int((u2_upper(dims) - HALF) / step) + 1


def _pick(best, cand):
    """Keep the larger s; on ties prefer smaller u2, then the higher-priority label."""
    if best is None:
        return cand
    if cand[0] != best[0]:
        return cand if cand[0] > best[0] else best
    if cand[1] != best[1]:
        return cand if cand[1] < best[1] else best
    rank = _LABEL_PRIORITY.index
    return cand if rank(cand[3]) < rank(best[3]) else best


def active_branches(dims: ProblemDims, alpha, u2, u3) -> frozenset:
    """Every branch equation that holds at ``(u2, u3)`` within its u2 range."""
    alpha, u2, u3 = as_fraction(alpha), as_fraction(u2), as_fraction(u3)
    out = set()
    if alpha1(dims, u2, u3) == alpha:
        out.add(ALPHA1)
    if u2 <= THREE_QUARTERS and alpha2_low(dims, u2, u3) == alpha:
        out.add(ALPHA2_LOW)
    if u2 >= THREE_QUARTERS and alpha2_high(dims, u3) == alpha:
        out.add(ALPHA2_HIGH)
    return frozenset(out)


def _result(dims, alpha, best, step) -> OracleResult:
    s, u2, u3, label = best
    return OracleResult(s, u2, u3, label, step, active_branches(dims, alpha, u2, u3))


def _check_step(step) -> Fraction:
    step = as_fraction(step)
    if step <= 0 or step.denominator > 10**6:
        raise DomainError("grid step must be positive with denominator at most 10^6")
    return step


def _degenerate_slice(dims: ProblemDims, alpha: Fraction, step: Fraction) -> OracleResult:
    n = dims.n
    u3 = (alpha - 1) / (2 * (n - 1))
    if not 0 <= u3 <= HALF:
        raise EmptySliceError(f"alpha={alpha} not reachable for m=n-1")
    s = Fraction(n, 4) - Fraction(n - 1, 2) * u3
    return OracleResult(s, HALF, u3, DEGENERATE, step, frozenset({DEGENERATE}))


def exact_max_on_slice_reference(dims: ProblemDims, alpha, step=DEFAULT_STEP) -> OracleResult:
    """Pure-Fraction sweep; slow, used as the second route in tests."""
    alpha, step = as_fraction(alpha), _check_step(step)
    if dims.m == dims.n - 1:
        return _degenerate_slice(dims, alpha, step)
    grid = {HALF + k * step for k in range(_grid_count(dims, step))}
    grid |= slice_vertices(dims, alpha)
    best = None
    for u2 in sorted(grid):
        for cand in candidates_at(dims, alpha, u2):
            best = _pick(best, cand)
    if best is None:
        raise EmptySliceError(f"empty slice for {dims}, alpha={alpha}")
    return _result(dims, alpha, best, step)


def _grid_best(dims: ProblemDims, alpha: Fraction, step: Fraction, include_vertices: bool):
    """Vectorised sweep on scaled integers over the plain grid."""
    n, m = dims.n, dims.m
    mm = max(m, 1)
    d = alpha.denominator
    A = alpha.numerator
    # u2 = K / W with K = G + 2 p j where step = p / G
    p, G = step.numerator, step.denominator
    W = 2 * G
    K = G + 2 * p * np.arange(_grid_count(dims, step), dtype=np.int64)
    E = 2 * d * W * mm  # common denominator of u3
    ew = E // W
    branches = []
    if m > 0:
        t1 = 2 * W * A - d * W * (m - 1) - 2 * d * (n - m + 1) * K
        t2 = W * A - d * W * (n - m - 3) - 4 * d * K
        t3 = np.full_like(K, W * (A - d * (n - m)))
        branches = [(ALPHA1, t1), (ALPHA2_LOW, t2), (ALPHA2_HIGH, t3)]
    else:
        zero = np.zeros_like(K)
        branches = [(ALPHA1, zero), (ALPHA2_LOW, zero), (ALPHA2_HIGH, zero)]
    alpha_e = A * (E // d)
    in_box = (2 * K >= W) & (2 * (n - m + 1) * K <= W * (2 * (n - m + 1) - 1))
    below = 4 * K <= 3 * W
    above = 4 * K >= 3 * W
    best = None
    for label, T in branches:
        a1 = (m - 1) * (E // 2) + (n - m + 1) * K * ew + m * T
        a2 = np.where(below, (n - m - 3) * E + 4 * K * ew + 2 * m * T, (n - m) * E + 2 * m * T)
        ok = in_box & (T >= 0) & (2 * T <= E) & (np.minimum(a1, a2) == alpha_e)
        if label == ALPHA1:
            ok &= a1 == alpha_e
        elif label == ALPHA2_LOW:
            ok &= below & (a2 == alpha_e)
        else:
            ok &= above & (a2 == alpha_e)
        if not ok.any():
            continue
        s2e = (2 * n - m - 1) * (E // 2) - (n - m - 1) * K * ew - m * T
        masked = np.where(ok, s2e, np.iinfo(np.int64).min)
        j = int(np.argmax(masked))
        cand = (
            Fraction(int(masked[j]), 2 * E),
            Fraction(int(K[j]), W),
            Fraction(int(T[j]), E),
            label,
        )
        best = _pick(best, cand)
    if include_vertices:
        for u2 in slice_vertices(dims, alpha):
            for cand in candidates_at(dims, alpha, u2):
                best = _pick(best, cand)
    return best


def exact_max_on_slice(dims: ProblemDims, alpha, step=DEFAULT_STEP, *, include_vertices=True) -> OracleResult:
    """Maximum of ``s_m(u2, u3)`` subject to ``min(alpha1, alpha2) = alpha``.

    With ``include_vertices=False`` only the plain grid is searched, which
    exposes the raw grid error bounded by ``(n/2) * step``.
    """
    alpha, step = as_fraction(alpha), _check_step(step)
    if dims.m == dims.n - 1:
        return _degenerate_slice(dims, alpha, step)
    best = _grid_best(dims, alpha, step, include_vertices)
    if best is None:
        raise EmptySliceError(f"empty slice for {dims}, alpha={alpha}")
    return _result(dims, alpha, best, step)


@dataclass(frozen=True)
class PiecewiseReport:
    dims: ProblemDims
    max_deviation: Fraction
    worst_alpha: Fraction | None
    points: int
    tolerance: Fraction

    @property
    def ok(self) -> bool:
        return self.max_deviation <= self.tolerance


def verify_piecewise(dims: ProblemDims, alphas, step=DEFAULT_STEP, *, include_vertices=True) -> PiecewiseReport:
    """Compare the oracle with the closed-form curve on each grid value."""
    step = as_fraction(step)
    worst, worst_alpha, count = Fraction(0), None, 0
    curve = curve_m(dims)
    for alpha in alphas:
        alpha = as_fraction(alpha)
        closed = curve(alpha)
        found = exact_max_on_slice(dims, alpha, step, include_vertices=include_vertices).s_star
        dev = abs(closed - found)
        count += 1
        if worst_alpha is None or dev > worst:
            worst, worst_alpha = dev, alpha
    tolerance = Fraction(dims.n, 2) * step if not include_vertices else Fraction(0)
    return PiecewiseReport(dims, worst, worst_alpha, count, tolerance)


def alpha_grid(dims: ProblemDims, step) -> list[Fraction]:
    """Regular grid over the curve's domain, with its breakpoints added."""
    step = as_fraction(step)
    curve = curve_m(dims)
    pts = set(curve.breakpoints)
    k = 0
    while curve.lo + k * step <= curve.hi:
        pts.add(curve.lo + k * step)
        k += 1
    return sorted(pts)


def grand_max_oracle(n: int, alpha, step=DEFAULT_STEP) -> tuple[Fraction, tuple[int, ...]]:
    """Maximum of the per-m oracle over every m whose slice is non-empty."""
    alpha = as_fraction(alpha)
    best, winners = None, []
    for m in range(n):
        try:
            res = exact_max_on_slice(ProblemDims(n, m), alpha, step)
        except EmptySliceError:
            continue
        if best is None or res.s_star > best:
            best, winners = res.s_star, [m]
        elif res.s_star == best:
            winners.append(m)
    if best is None:
        raise EmptySliceError(f"no m reaches alpha={alpha} for n={n}")
    return best, tuple(winners)


def expected_active(dims: ProblemDims, alpha) -> tuple[bool, bool] | None:
    """Whether the alpha2-high and alpha2-low equations should hold at the maximiser.

    Defined for the medium and large regimes, where ``beta1``/``beta2`` (or
    ``m + 1``/``beta2``) bound the alpha2-low stretch. ``None`` elsewhere.
    """
    alpha = as_fraction(alpha)
    kind = regime(dims)
    if kind not in ("medium", "large"):
        return None
    b2 = beta2(dims)
    if kind == "medium":
        low = beta1(dims) <= alpha <= b2
    else:
        low = alpha <= b2
    return alpha >= b2, low


def check_against_envelope(n: int, alpha, step=DEFAULT_STEP) -> bool:
    return grand_max_oracle(n, alpha, step)[0] == s_of_alpha(n, alpha)[0]
