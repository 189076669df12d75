"""Exact rational exponent algebra for the slab counterexamples.

Every quantity here is a :class:`fractions.Fraction`. The module covers the
regularity formulas ``s3``, ``s4``, ``s5``, the thresholds ``beta1``/``beta2``,
the dimension pair ``(alpha1, alpha2)`` of the limsup set, the rectangle mass
transference bound, the per-``m`` regularity curves and their upper envelope.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

Rational = Fraction
HALF = Fraction(1, 2)


class DomainError(ValueError):
    """An exponent formula was evaluated outside the set where it is defined."""


def as_fraction(value) -> Fraction:
    """Coerce ints, strings like ``"3/4"`` and Fractions to Fraction.

    Floats are refused so that no rounding leaks into the exact layer.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not exponents")
    if isinstance(value, (int, str)):
        return Fraction(value)
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


@dataclass(frozen=True)
class ProblemDims:
    """Ambient dimension ``n`` and intermediate-block dimension ``m``."""

    n: int
    m: int

    def __post_init__(self):
        if self.n < 2:
            raise DomainError(f"n must be at least 2, got {self.n}")
        if not 0 <= self.m <= self.n - 1:
            raise DomainError(f"m must lie in [0, n-1], got m={self.m}, n={self.n}")

    @property
    def m0(self) -> int:
        return (self.n - 1) // 3

    @property
    def m1(self) -> int:
        # floor(n/2 - 1) computed in integers
        return self.n // 2 - 1

    @property
    def free_dims(self) -> int:
        """Number of coordinates in the middle block, ``n - m - 1``."""
        return self.n - self.m - 1


@dataclass(frozen=True)
class ParamVector:
    u1: Fraction
    u2: Fraction
    u3: Fraction

    @classmethod
    def of(cls, u1, u2, u3) -> "ParamVector":
        return cls(as_fraction(u1), as_fraction(u2), as_fraction(u3))


@dataclass(frozen=True)
class DilationVector:
    a1: Fraction
    a2: Fraction
    a3: Fraction


# ---------------------------------------------------------------------------
# closed-form regularity families


def s3(dims: ProblemDims, alpha) -> Fraction:
    n, m = dims.n, dims.m
    alpha = as_fraction(alpha)
    return Fraction(n, 2 * (n - m + 1)) + Fraction(n - m - 1, 2 * (n - m + 1)) * (n - alpha)


def s4(dims: ProblemDims, alpha) -> Fraction:
    n, m = dims.n, dims.m
    alpha = as_fraction(alpha)
    coeff = Fraction(n - m, 2 * (n - m + 1))
    return coeff * (1 + (n - alpha))


def s5(dims: ProblemDims, alpha) -> Fraction:
    n, m = dims.n, dims.m
    if n - m - 1 == 0:
        raise DomainError("s5 needs n - m - 1 > 0")
    alpha = as_fraction(alpha)
    return HALF + Fraction(n - m - 2, 2 * (n - m - 1)) * (n - alpha)


def s_floor(dims: ProblemDims, alpha) -> Fraction:
    """Regularity along the edge ``u2 = 1/2`` where ``alpha2`` is active.

    This is the lowest piece of the curve for ``n/2 - 1 < m <= n - 3``.
    """
    alpha = as_fraction(alpha)
    return Fraction(dims.n - dims.m - 1, 4) + (dims.n - alpha) / 4


def beta1(dims: ProblemDims) -> Fraction:
    n, m = dims.n, dims.m
    if n - m - 3 <= 0:
        raise DomainError("beta1 requires m < n - 3")
    return n - Fraction((m - 1) * (n - m - 1), n - m - 3)


def beta2(dims: ProblemDims) -> Fraction:
    return Fraction(dims.n + dims.m + 1, 2)


# ---------------------------------------------------------------------------
# geometry of the parameter region


def u2_upper(dims: ProblemDims) -> Fraction:
    return 1 - Fraction(1, 2 * (dims.n - dims.m + 1))


def _check_box(dims: ProblemDims, u2: Fraction, u3: Fraction) -> None:
    if not (HALF <= u2 <= u2_upper(dims)) or not (0 <= u3 <= HALF):
        raise DomainError(f"(u2, u3) = ({u2}, {u3}) outside the parameter box")


def alpha1(dims: ProblemDims, u2, u3) -> Fraction:
    n, m = dims.n, dims.m
    return Fraction(m - 1, 2) + (n - m + 1) * as_fraction(u2) + m * as_fraction(u3)


def alpha2_low(dims: ProblemDims, u2, u3) -> Fraction:
    n, m = dims.n, dims.m
    return n - m - 3 + 4 * as_fraction(u2) + 2 * m * as_fraction(u3)


def alpha2_high(dims: ProblemDims, u3) -> Fraction:
    n, m = dims.n, dims.m
    return n - m + 2 * m * as_fraction(u3)


def alpha_dims(dims: ProblemDims, u2, u3) -> tuple[Fraction, Fraction]:
    """Return ``(alpha1, alpha2)`` for a point of the closed parameter box."""
    u2, u3 = as_fraction(u2), as_fraction(u3)
    _check_box(dims, u2, u3)
    a1 = alpha1(dims, u2, u3)
    if u2 == Fraction(3, 4):
        low, high = alpha2_low(dims, u2, u3), alpha2_high(dims, u3)
        assert low == high, "alpha2 branches disagree at u2 = 3/4"
        return a1, low
    a2 = alpha2_low(dims, u2, u3) if u2 < Fraction(3, 4) else alpha2_high(dims, u3)
    return a1, a2


def s_from_params(dims: ProblemDims, u2, u3) -> Fraction:
    n, m = dims.n, dims.m
    u2, u3 = as_fraction(u2), as_fraction(u3)
    return Fraction(2 * n - m - 1, 4) - Fraction(n - m - 1, 2) * u2 - Fraction(m, 2) * u3


@dataclass
class FeasibilityReport:
    violations: list[str] = field(default_factory=list)
    boundary: list[str] = field(default_factory=list)
    dilation_exists: bool = False

    @property
    def feasible(self) -> bool:
        return not self.violations

    @property
    def boundary_feasible(self) -> bool:
        """Feasible once the open constraints ``u3 > 0`` and ``u2 > 1/2`` are closed."""
        return not self.violations or set(self.violations) <= set(self.boundary)


def check_params(dims: ProblemDims, u: ParamVector) -> FeasibilityReport:
    n, m = dims.n, dims.m
    u1, u2, u3 = u.u1, u.u2, u.u3
    report = FeasibilityReport()
    # (name, holds, holds in the closure)
    rules = [
        ("0 < u1", u1 > 0, u1 >= 0),
        ("u1 <= 1/2", u1 <= HALF, u1 <= HALF),
        ("0 < u3", u3 > 0, u3 >= 0),
        ("u3 <= 1/2", u3 <= HALF, u3 <= HALF),
        ("0 < u2", u2 > 0, u2 >= 0),
        ("u2 <= 1", u2 <= 1, u2 <= 1),
        ("2*u2 - u1 >= 1", 2 * u2 - u1 >= 1, 2 * u2 - u1 >= 1),
        ("u2 - u1 < 1/2", u2 - u1 < HALF, u2 - u1 <= HALF),
        ("(n-m+1)*u2 <= n-m+1/2", (n - m + 1) * u2 <= n - m + HALF,
         (n - m + 1) * u2 <= n - m + HALF),
    ]
    report.violations = [name for name, ok, _ in rules if not ok]
    # open constraints that fail only by equality: closure points of the region
    report.boundary = [name for name, ok, closed in rules if closed and not ok]
    report.dilation_exists = report.boundary_feasible and _dilation_ok(dims, u)
    return report


def _dilation_ok(dims: ProblemDims, u: ParamVector) -> bool:
    try:
        a = _dilation(dims, u)
    except (DomainError, ZeroDivisionError):
        return False
    return _dilation_invariants_hold(dims, u, a)


def _dilation(dims: ProblemDims, u: ParamVector) -> DilationVector:
    k = dims.free_dims
    if u.u2 >= Fraction(3, 4) and k > 0:
        a2 = ((dims.n - dims.m + 1) * u.u2 - Fraction(3, 2)) / k
        return DilationVector(HALF, a2, u.u3)
    return DilationVector(2 * u.u2 - 1, u.u2, u.u3)


def _dilation_invariants_hold(dims: ProblemDims, u: ParamVector, a: DilationVector) -> bool:
    k = dims.free_dims
    return (
        u.u1 <= a.a1 <= HALF
        and u.u2 <= a.a2 <= 1
        and a.a3 == u.u3
        and a.a1 + k * a.a2 == (dims.n - dims.m + 1) * u.u2 - 1
    )


def dilation_from_params(dims: ProblemDims, u: ParamVector) -> DilationVector:
    """Largest admissible first dilation exponent, the rest fixed by the volume identity."""
    if not check_params(dims, u).boundary_feasible:
        raise DomainError(f"infeasible parameters {u}")
    a = _dilation(dims, u)
    if not _dilation_invariants_hold(dims, u, a):
        raise DomainError(f"no admissible dilation for {u}")
    return a


def mtp_lower_bound(b: Sequence, a: Sequence) -> Fraction:
    """Rectangle-to-rectangle mass transference dimension bound.

    ``b`` are the shrinking exponents of the limsup rectangles and ``a`` the
    exponents of the locally ubiquitous dilations.
    """
    if len(a) != len(b) or not b:
        raise DomainError("exponent vectors must be non-empty and of equal length")
    # block layouts repeat the same (a_j, b_j) many times
    pairs = Counter()
    for (aj, bj), count in Counter(zip(a, b)).items():
        aj, bj = as_fraction(aj), as_fraction(bj)
        if not (0 <= aj <= bj <= 1) or bj == 0:
            raise DomainError("need 0 <= a_j <= b_j <= 1 and b_j > 0")
        pairs[aj, bj] += count
    best = None
    for B in sorted({bj for _, bj in pairs}):
        total = Fraction(0)
        for (aj, bj), count in pairs.items():
            if aj >= B:
                total += count
            elif bj <= B:
                total += count * (1 - (bj - aj) / B)
            else:
                total += count * aj / B
        best = total if best is None else min(best, total)
    return best


def mtp_exponents(dims: ProblemDims, a: DilationVector) -> tuple[list[Fraction], list[Fraction]]:
    """Shrinking and dilation exponent vectors in the block layout (x1, x', x'')."""
    k, m = dims.free_dims, dims.m
    b = [HALF] + [Fraction(1)] * k + [HALF] * m
    av = [a.a1] + [a.a2] * k + [a.a3] * m
    return b, av


# ---------------------------------------------------------------------------
# per-m regularity curves


@dataclass(frozen=True)
class Segment:
    lo: Fraction
    hi: Fraction
    slope: Fraction
    intercept: Fraction
    label: str
    m: int | None = None

    def __call__(self, alpha) -> Fraction:
        return self.slope * as_fraction(alpha) + self.intercept


@dataclass(frozen=True)
class PiecewiseLinearCurve:
    segments: tuple[Segment, ...]

    def __post_init__(self):
        for left, right in zip(self.segments, self.segments[1:]):
            if left.hi != right.lo:
                raise DomainError("segments are not contiguous")
            if left(left.hi) != right(right.lo):
                raise DomainError(f"curve is discontinuous at {left.hi}")
        for seg in self.segments:
            if seg.lo > seg.hi or seg.slope > 0:
                raise DomainError("segments must be ordered and nonincreasing")

    @property
    def lo(self) -> Fraction:
        return self.segments[0].lo

    @property
    def hi(self) -> Fraction:
        return self.segments[-1].hi

    @property
    def breakpoints(self) -> list[Fraction]:
        return [self.lo] + [seg.hi for seg in self.segments]

    def segment_at(self, alpha) -> Segment:
        alpha = as_fraction(alpha)
        if not self.lo <= alpha <= self.hi:
            raise DomainError(f"alpha={alpha} outside [{self.lo}, {self.hi}]")
        for seg in self.segments:
            # a breakpoint belongs to the segment on its left
            if alpha <= seg.hi:
                return seg
        return self.segments[-1]

    def __call__(self, alpha) -> Fraction:
        return self.segment_at(alpha)(alpha)


def _affine(fn, dims: ProblemDims) -> tuple[Fraction, Fraction]:
    at0, at1 = fn(dims, 0), fn(dims, 1)
    return at1 - at0, at0


def _segment(fn, dims: ProblemDims, lo, hi, label: str) -> Segment:
    slope, intercept = _affine(fn, dims)
    return Segment(as_fraction(lo), as_fraction(hi), slope, intercept, label, dims.m)


def regime(dims: ProblemDims) -> str:
    """Which branch family describes ``s_m``: small, medium, large, n-2 or n-1."""
    n, m = dims.n, dims.m
    if m == n - 1:
        return "n-1"
    if m == 0 or (m <= n - 3 and 3 * m <= n - 1):
        return "small"
    if m == n - 2:
        return "n-2"
    if 2 * m <= n - 2:
        return "medium"
    return "large"


def curve_m(dims: ProblemDims) -> PiecewiseLinearCurve:
    n, m = dims.n, dims.m
    kind = regime(dims)
    half_n = Fraction(n, 2)
    if kind == "small":
        segs = [_segment(s3, dims, half_n, n - m, "s3")]
        if m > 0:
            segs.append(_segment(s4, dims, n - m, n, "s4"))
    elif kind == "medium":
        b1, b2 = beta1(dims), beta2(dims)
        segs = [
            _segment(s3, dims, half_n, b1, "s3"),
            _segment(s5, dims, b1, b2, "s5"),
            _segment(s4, dims, b2, n, "s4"),
        ]
    elif kind == "large":
        b2 = beta2(dims)
        segs = [
            _segment(s_floor, dims, n - m - 1, m + 1, "s_floor"),
            _segment(s5, dims, m + 1, b2, "s5"),
            _segment(s4, dims, b2, n, "s4"),
        ]
        if m == n - 3:
            assert segs[0].slope == segs[1].slope and segs[0].intercept == segs[1].intercept
    elif kind == "n-2":
        # (n+1)/8 + (n-alpha)/8, 3/8 + (n-alpha)/4, 1/3 + (n-alpha)/3
        segs = [
            Segment(Fraction(1), Fraction(2), Fraction(-1, 8), Fraction(2 * n + 1, 8), "n-2:low", m),
            Segment(Fraction(2), n - HALF, Fraction(-1, 4), Fraction(3, 8) + Fraction(n, 4), "n-2:mid", m),
            Segment(n - HALF, Fraction(n), Fraction(-1, 3), Fraction(1, 3) + Fraction(n, 3), "n-2:high", m),
        ]
    else:
        segs = [Segment(Fraction(1), Fraction(n), Fraction(-1, 4), Fraction(1 + n, 4), "n-1", m)]
    return PiecewiseLinearCurve(tuple(segs))


def domain_m(dims: ProblemDims) -> tuple[Fraction, Fraction]:
    curve = curve_m(dims)
    return curve.lo, curve.hi


def s_m_of_alpha(dims: ProblemDims, alpha) -> Fraction:
    return curve_m(dims)(alpha)


def branch_m_of_alpha(dims: ProblemDims, alpha) -> str:
    return curve_m(dims).segment_at(alpha).label


# ---------------------------------------------------------------------------
# grand maximum over m


def s_of_alpha(n: int, alpha) -> tuple[Fraction, tuple[int, ...]]:
    """Maximum of ``s_m(alpha)`` over all ``m`` whose domain contains ``alpha``.

    Returns the value and the full set of maximising ``m`` in ascending order.
    """
    alpha = as_fraction(alpha)
    best, winners = None, []
    for m in range(n):
        dims = ProblemDims(n, m)
        lo, hi = domain_m(dims)
        if not lo <= alpha <= hi:
            continue
        value = s_m_of_alpha(dims, alpha)
        if best is None or value > best:
            best, winners = value, [m]
        elif value == best:
            winners.append(m)
    if best is None:
        raise DomainError(f"alpha={alpha} lies in no admissible domain for n={n}")
    return best, tuple(winners)


@dataclass(frozen=True)
class Theorem1Branch:
    label: str
    lo: Fraction
    hi: Fraction
    formulas: tuple[tuple[str, int], ...]

    @property
    def active_m(self) -> tuple[int, ...]:
        return tuple(sorted({m for _, m in self.formulas}))

    def value(self, n: int, alpha) -> Fraction:
        return max(_FORMULAS[name](ProblemDims(n, m), alpha) for name, m in self.formulas)


_FORMULAS = {"s3": s3, "s4": s4, "s5": s5}


def _staircase(n: int, m0: int) -> list[Theorem1Branch]:
    out = []
    for m in range(m0, 0, -1):
        out.append(Theorem1Branch(
            f"staircase m={m}", Fraction(n - m), Fraction(n - m + 1),
            (("s3", m - 1), ("s4", m)),
        ))
    return out


def theorem1_branches(n: int) -> list[Theorem1Branch]:
    """Ordered list of the closed-form pieces on ``[n/2, n]``."""
    if n < 2:
        raise DomainError("n must be at least 2")
    m0, m1 = (n - 1) // 3, n // 2 - 1
    half_n = Fraction(n, 2)
    if n in (2, 3):
        return [Theorem1Branch("single", half_n, Fraction(n), (("s3", 0),))]
    if n in (4, 5, 6, 7):
        head = [Theorem1Branch("bottom", half_n, Fraction(n - m0), (("s3", m0),))]
        return head + _staircase(n, m0)
    b = {m: beta1(ProblemDims(n, m)) for m in range(max(m0 + 1, 2), m1 + 1)}
    transition = Theorem1Branch(
        "transition", b[m0 + 1], Fraction(n - m0), (("s3", m0), ("s5", m0 + 1)),
    )
    if n in (8, 9, 10, 11, 13):
        head = [Theorem1Branch("bottom", half_n, b[m0 + 1], (("s3", m0 + 1),))]
        return head + [transition] + _staircase(n, m0)
    head = []
    if n % 2 == 1:
        head.append(Theorem1Branch("bottom", half_n, b[m1], (("s3", m1),)))
    for m in range(m1, m0 + 1, -1):
        head.append(Theorem1Branch(
            f"intermediate m={m}", b[m], b[m - 1], (("s3", m - 1), ("s5", m)),
        ))
    return head + [transition] + _staircase(n, m0)


def theorem1_case(n: int, alpha) -> Theorem1Branch:
    alpha = as_fraction(alpha)
    if not Fraction(n, 2) <= alpha <= n:
        raise DomainError(f"alpha={alpha} outside [n/2, n]")
    branches = [br for br in theorem1_branches(n) if br.lo < br.hi]
    for br in branches:
        if alpha <= br.hi:
            return br
    return branches[-1]


def theorem1_value(n: int, alpha) -> Fraction:
    return theorem1_case(n, alpha).value(n, alpha)


def kappa_cross_check(i: int, dims: ProblemDims, alpha) -> Fraction:
    """Evaluate ``(n - alpha + 1)/2 - kappa_i(m + 1; alpha, n + 1)``."""
    alpha = as_fraction(alpha)
    j, d = dims.m + 1, dims.n + 1
    if i == 3:
        kappa = (d - Fraction(j, 2) - alpha) / (d - j + 1)
    elif i == 4:
        kappa = (d - alpha) / (2 * (d - j + 1))
    elif i == 5:
        if d - j - 1 == 0:
            raise DomainError("kappa_5 denominator vanishes")
        kappa = (d - alpha - 1) / (2 * (d - j - 1))
    else:
        raise DomainError(f"no kappa_{i}")
    return (dims.n - alpha + 1) / 2 - kappa


def _crossing(n: int, br: Theorem1Branch) -> Fraction | None:
    """Where the two formulas of a max-piece swap, if strictly inside it."""
    if len(br.formulas) != 2:
        return None
    (f, mf), (g, mg) = br.formulas
    slope_f, icpt_f = _affine(_FORMULAS[f], ProblemDims(n, mf))
    slope_g, icpt_g = _affine(_FORMULAS[g], ProblemDims(n, mg))
    if slope_f == slope_g:
        return None
    x = (icpt_g - icpt_f) / (slope_f - slope_g)
    return x if br.lo < x < br.hi else None


def all_breakpoints(n: int) -> list[Fraction]:
    """Every endpoint of every per-m curve and every theorem piece, inside [n/2, n]."""
    pts = set()
    for m in range(n):
        pts.update(curve_m(ProblemDims(n, m)).breakpoints)
    for br in theorem1_branches(n):
        pts.update((br.lo, br.hi))
        crossing = _crossing(n, br)
        if crossing is not None:
            pts.add(crossing)
    half_n = Fraction(n, 2)
    return sorted(p for p in pts if half_n <= p <= n)


@dataclass(frozen=True)
class CurveRow:
    alpha: Fraction
    s: Fraction
    branch: str
    winners: tuple[int, ...]

    @property
    def winning_m(self) -> int:
        return self.winners[0]


def _row_label(n: int, alpha: Fraction, winners: Iterable[int]) -> str:
    m = min(winners)
    return f"{branch_m_of_alpha(ProblemDims(n, m), alpha)},m={m}"


def emit_curve(n: int, alpha_lo, alpha_hi, step) -> list[CurveRow]:
    """Samples of the envelope on a grid, with every exact breakpoint inserted."""
    lo, hi, step = as_fraction(alpha_lo), as_fraction(alpha_hi), as_fraction(step)
    if step <= 0:
        raise DomainError("step must be positive")
    if lo > hi:
        raise DomainError("empty alpha range")
    grid = set()
    k = 0
    while lo + k * step <= hi:
        grid.add(lo + k * step)
        k += 1
    grid.add(hi)
    grid.update(p for p in all_breakpoints(n) if lo <= p <= hi)
    rows = []
    for alpha in sorted(grid):
        value, winners = s_of_alpha(n, alpha)
        rows.append(CurveRow(alpha, value, _row_label(n, alpha, winners), winners))
    return rows
