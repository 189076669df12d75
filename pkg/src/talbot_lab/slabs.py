"""Geometry of the slab families and their limsup set.

A scale-``R`` family is the union of axis-parallel boxes

    E(p, q) = I(R p1/(D1^2 q), R^-1/2) x I(p'/(D1 q), R^-1)^(n-m-1) x I(p''/D2, R^-1/2)^m

over admissible odd moduli ``q`` and integer vectors ``p`` with
``gcd(p1, q) = 1``. Because ``p''`` is unconstrained the family is a product
``X x Y``, and for a fixed ``q`` the ``X`` part is again a product. Box counts
and measures exploit this: they only ever merge 1-D interval families.
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from math import ceil, floor, gcd, sqrt

import numpy as np

from .evolution import CounterexampleScale, moduli
from .exponents import (DilationVector, DomainError, ParamVector, ProblemDims, alpha_dims,
                        dilation_from_params)
from .guards import CostGuardError

SLAB_LIMIT = 10**7
CELL_LIMIT = 10**7
MC_SEED = 0x5EED
MC_SAMPLES = 10**6

Interval = tuple[float, float]


@dataclass(frozen=True)
class Slab:
    q: int
    p: tuple[int, ...]
    center: tuple[float, ...]
    half_widths: tuple[float, ...]

    def contains(self, x) -> bool:
        return all(abs(xi - c) < h for xi, c, h in zip(x, self.center, self.half_widths))

    def dilated(self, radii) -> "Slab":
        if any(r < h for r, h in zip(radii, self.half_widths)):
            raise DomainError("a dilation may only enlarge the slab")
        return Slab(self.q, self.p, self.center, tuple(radii))


def _unit_cell_window(dims: ProblemDims) -> tuple[Interval, ...]:
    return ((0.0, 1.0),) * dims.n


def _check_window(window, n: int) -> tuple[Interval, ...]:
    window = tuple((float(lo), float(hi)) for lo, hi in window)
    if len(window) != n:
        raise DomainError("window has the wrong dimension")
    for lo, hi in window:
        if not -1 <= lo < hi <= 1:
            raise DomainError(f"window side [{lo}, {hi}] must sit inside [-1, 1]")
    return window


@dataclass(frozen=True)
class _Axis:
    """One coordinate of the family: centres ``k * step`` with half-width ``radius``."""

    step: float
    radius: float

    def index_range(self, lo: float, hi: float) -> range:
        # open intervals meeting [lo, hi]
        first = floor((lo - self.radius) / self.step) + 1
        last = ceil((hi + self.radius) / self.step) - 1
        while first * self.step + self.radius <= lo:
            first += 1
        while last * self.step - self.radius >= hi:
            last -= 1
        return range(first, last + 1)

    def containing(self, x: float) -> range:
        return self.index_range(x, x)


def _axes(scale: CounterexampleScale, q: int, radii=None) -> list[_Axis]:
    dims, R = scale.dims, scale.R
    r1, r2, r3 = radii or (R ** -0.5, 1 / R, R ** -0.5)
    axes = [_Axis(R / (scale.D1 ** 2 * q), r1)]
    axes += [_Axis(1 / (scale.D1 * q), r2)] * dims.free_dims
    axes += [_Axis(1 / scale.D2, r3)] * dims.m
    return axes


def _radii_for(scale: CounterexampleScale, a: DilationVector | None) -> tuple[float, float, float]:
    R = scale.R
    if a is None:
        return R ** -0.5, 1 / R, R ** -0.5
    return R ** -float(a.a1), R ** -float(a.a2), R ** -float(a.a3)


def enumerate_slabs(scale: CounterexampleScale, window=None) -> list[Slab]:
    """All slabs meeting ``window``, ordered by ``q`` then ``p`` lexicographically."""
    dims = scale.dims
    window = _check_window(window or _unit_cell_window(dims), dims.n)
    plan = []
    total = 0
    for q in moduli(scale):
        axes = _axes(scale, q)
        ranges = [ax.index_range(lo, hi) for ax, (lo, hi) in zip(axes, window)]
        first = [p for p in ranges[0] if gcd(p, q) == 1]
        size = len(first) * int(np.prod([len(r) for r in ranges[1:]], dtype=float))
        total += size
        if total > SLAB_LIMIT:
            raise CostGuardError(f"more than {SLAB_LIMIT} slabs in the window")
        plan.append((q, axes, [first, *ranges[1:]]))
    out = []
    for q, axes, ranges in plan:
        widths = tuple(ax.radius for ax in axes)
        for p in itertools.product(*ranges):
            center = tuple(k * ax.step for k, ax in zip(p, axes))
            out.append(Slab(q, tuple(p), center, widths))
    return out


def membership(x, scale: CounterexampleScale) -> tuple[int, tuple[int, ...]] | None:
    """First ``(q, p)`` in enumeration order whose slab contains ``x``.

    Each coordinate is solved on its own by rounding, so no slab list is built.
    """
    x = tuple(float(v) for v in x)
    if len(x) != scale.dims.n:
        raise DomainError("point has the wrong dimension")
    for q in moduli(scale):
        picks = []
        for i, (ax, xi) in enumerate(zip(_axes(scale, q), x)):
            cands = [k for k in ax.containing(xi) if i > 0 or gcd(k, q) == 1]
            if not cands:
                break
            picks.append(cands[0])
        else:
            return q, tuple(picks)
    return None


# ---------------------------------------------------------------------------
# box counting


def _cells_1d(axis: _Axis, lo: float, hi: float, delta: float, keep=None) -> np.ndarray:
    """Indicator over the delta-grid cells of ``[lo, hi]`` met by the open intervals."""
    first_cell = floor(lo / delta)
    count = ceil(hi / delta) - first_cell
    if count > CELL_LIMIT:
        raise CostGuardError(f"{count} grid cells along one axis")
    mask = np.zeros(count, dtype=bool)
    ks = np.array(axis.index_range(lo, hi), dtype=np.int64)
    if keep is not None:
        ks = ks[keep(ks)]
    if ks.size == 0:
        return mask
    a = np.maximum(ks * axis.step - axis.radius, lo)
    b = np.minimum(ks * axis.step + axis.radius, hi)
    ok = a < b
    # cell j covers [j delta, (j+1) delta); the open interval (a, b) meets cells
    # floor(a/delta) .. ceil(b/delta) - 1
    start = np.floor(a[ok] / delta).astype(np.int64) - first_cell
    stop = np.ceil(b[ok] / delta).astype(np.int64) - first_cell
    diff = np.zeros(count + 1, dtype=np.int64)
    np.add.at(diff, np.clip(start, 0, count), 1)
    np.add.at(diff, np.clip(stop, 0, count), -1)
    mask |= np.cumsum(diff[:-1]) > 0
    return mask


def _union_of_products(groups: list[list[np.ndarray]]) -> int:
    """``|U_q prod_i B_{q,i}|`` by inclusion-exclusion over the few overlapping ``q``."""
    if not groups:
        return 0
    if not groups[0]:
        return 1
    if len(groups[0]) == 1:
        return int(np.logical_or.reduce([g[0] for g in groups]).sum())
    if len(groups) > 16:
        raise CostGuardError("too many overlapping moduli for inclusion-exclusion")
    total = 0
    for size in range(1, len(groups) + 1):
        for subset in itertools.combinations(groups, size):
            term = 1
            for axis in range(len(groups[0])):
                inter = np.logical_and.reduce([g[axis] for g in subset])
                term *= int(inter.sum())
                if term == 0:
                    break
            total += (-1) ** (size + 1) * term
    return total


@dataclass(frozen=True)
class WindowBoxCount:
    window: tuple[Interval, ...]
    delta: float
    count: int


def box_count(scale: CounterexampleScale, window=None, delta: float | None = None,
              a: DilationVector | None = None) -> WindowBoxCount:
    """Number of ``delta``-grid cells (anchored at 0) meeting the family inside ``window``."""
    dims = scale.dims
    window = _check_window(window or _unit_cell_window(dims), dims.n)
    delta = float(delta if delta is not None else 1 / scale.R)
    radii = _radii_for(scale, a)
    k = dims.free_dims
    last = 1
    for lo, hi in window[1 + k:]:
        last *= int(_cells_1d(_axes(scale, 1, radii)[-1], lo, hi, delta).sum())
    rows, per_q = [], []
    for q in moduli(scale):
        axes = _axes(scale, q, radii)
        rows.append(_cells_1d(axes[0], *window[0], delta, keep=lambda ks, q=q: np.gcd(ks, q) == 1))
        per_q.append([_cells_1d(ax, lo, hi, delta) for ax, (lo, hi) in zip(axes[1:1 + k], window[1:1 + k])])
    cover = np.array(rows)
    # group x1 cells by the set of moduli covering them
    patterns = Counter(map(bytes, np.packbits(cover.T, axis=1)))
    middle = 0
    for packed, times in patterns.items():
        members = np.unpackbits(np.frombuffer(packed, dtype=np.uint8))[:len(rows)].nonzero()[0]
        middle += times * _union_of_products([per_q[i] for i in members])
    return WindowBoxCount(window, delta, middle * last)


def box_count_bruteforce(scale: CounterexampleScale, window=None, delta: float | None = None) -> int:
    """Mark cells slab by slab on a dense grid; only for tiny scales."""
    dims = scale.dims
    window = _check_window(window or _unit_cell_window(dims), dims.n)
    delta = float(delta if delta is not None else 1 / scale.R)
    offsets = [floor(lo / delta) for lo, _ in window]
    shape = [ceil(hi / delta) - o for (_, hi), o in zip(window, offsets)]
    if np.prod(shape, dtype=float) > 10**7:
        raise CostGuardError("dense grid too large")
    grid = np.zeros(shape, dtype=bool)
    for slab in enumerate_slabs(scale, window):
        idx = []
        for c, h, (lo, hi), o in zip(slab.center, slab.half_widths, window, offsets):
            a, b = max(c - h, lo), min(c + h, hi)
            if a >= b:
                break
            idx.append(slice(floor(a / delta) - o, ceil(b / delta) - o))
        else:
            grid[tuple(idx)] = True
    return int(grid.sum())


@dataclass(frozen=True)
class DimensionFit:
    Rs: tuple[float, ...]
    counts: tuple[int, ...]
    exponent: float
    stderr: float
    target: Fraction

    @property
    def deviation(self) -> float:
        return abs(self.exponent - float(self.target))


def _fit(inv_deltas, counts) -> tuple[float, float]:
    x, y = np.log(inv_deltas), np.log(counts)
    coef, cov = np.polyfit(x, y, 1, cov=True) if len(x) > 3 else (np.polyfit(x, y, 1), None)
    err = float(sqrt(cov[0, 0])) if cov is not None else float("nan")
    return float(coef[0]), err


def dim_fit(dims: ProblemDims, u: ParamVector, Rs, rule: str = "fine", window=None) -> DimensionFit:
    """Slope of ``log count`` against ``log(1/delta)``.

    ``rule="fine"`` uses ``delta = 1/R`` and targets ``alpha1``; ``"coarse"``
    uses ``delta = R^(-1/2)`` and targets ``alpha2``.
    """
    Rs = tuple(float(R) for R in Rs)
    if len(Rs) < 4:
        raise ValueError("need at least four scales")
    power = {"fine": 1.0, "coarse": 0.5}[rule]
    counts = tuple(box_count(CounterexampleScale(dims, R, u), window, R ** -power).count for R in Rs)
    slope, err = _fit([R ** power for R in Rs], counts)
    a1, a2 = alpha_dims(dims, u.u2, u.u3)
    return DimensionFit(Rs, counts, slope, err, a1 if rule == "fine" else a2)


def degenerate_box_count(n: int, u3, R: float) -> int:
    """Cells of side ``R^(-1/2)`` meeting ``[-1, 0] x (R^(-1/2)-balls around p/D2)`` in ``[-1,0] x [0,1]^(n-1)``."""
    delta = R ** -0.5
    axis = _Axis(R ** -float(u3), delta)
    first = ceil(1 / delta)
    per_axis = int(_cells_1d(axis, 0.0, 1.0, delta).sum())
    return first * per_axis ** (n - 1)


def degenerate_dim_check(n: int, u3, Rs) -> DimensionFit:
    u3 = Fraction(u3)
    Rs = tuple(float(R) for R in Rs)
    counts = tuple(degenerate_box_count(n, u3, R) for R in Rs)
    slope, err = _fit([sqrt(R) for R in Rs], counts)
    return DimensionFit(Rs, counts, slope, err, 1 + 2 * (n - 1) * u3)


# ---------------------------------------------------------------------------
# the rescaled unit cell


def _merge(intervals: np.ndarray) -> np.ndarray:
    """Union of closed intervals given as rows ``(a, b)``, sorted and disjoint."""
    if intervals.size == 0:
        return intervals.reshape(0, 2)
    intervals = intervals[np.argsort(intervals[:, 0])]
    ends = np.maximum.accumulate(intervals[:, 1])
    new = np.ones(len(intervals), dtype=bool)
    new[1:] = intervals[1:, 0] > ends[:-1]
    starts = intervals[new, 0]
    group = np.cumsum(new) - 1
    stops = np.zeros(new.sum())
    np.maximum.at(stops, group, ends)
    return np.column_stack([starts, stops])


def _torus_intervals(centers: np.ndarray, r: float) -> np.ndarray:
    """Arcs ``(c - r, c + r)`` on ``[0, 1)`` split at the seam, merged."""
    if r >= 0.5:
        return np.array([[0.0, 1.0]])
    a, b = centers - r, centers + r
    pieces = [np.column_stack([np.clip(a, 0, 1), np.clip(b, 0, 1)])]
    pieces.append(np.column_stack([a[a < 0] + 1, np.ones((a < 0).sum())]))
    pieces.append(np.column_stack([np.zeros((b > 1).sum()), b[b > 1] - 1]))
    return _merge(np.concatenate(pieces))


def _length(intervals: np.ndarray) -> float:
    return float((intervals[:, 1] - intervals[:, 0]).sum())


@dataclass(frozen=True)
class CellFamily:
    """Boxes ``I(p1/q, r1) x I(p'/q, r2)^(N-1)`` on the torus, ``gcd(p1, q) = 1``."""

    qs: tuple[int, ...]
    r1: float
    r2: float
    N: int

    @classmethod
    def balanced(cls, Q: float, t1, t2, N: int) -> "CellFamily":
        lo = ceil(Q / 2)
        lo += 1 - lo % 2
        qs = tuple(range(lo, ceil(Q), 2))
        return cls(qs, Q ** -float(t1), Q ** -float(t2), N)

    def first_axis(self, q: int) -> np.ndarray:
        p = np.array([k for k in range(q) if gcd(k, q) == 1], dtype=float)
        return _torus_intervals(p / q, self.r1)

    def other_axis(self, q: int) -> np.ndarray:
        return _torus_intervals(np.arange(q) / q, self.r2)


def _measure_sweep(family: CellFamily) -> float:
    if family.N > 2:
        raise DomainError("the exact sweep handles N <= 2 only")
    firsts = {q: family.first_axis(q) for q in family.qs}
    others = {q: family.other_axis(q) for q in family.qs} if family.N == 2 else {}
    cuts = np.unique(np.concatenate([[0.0, 1.0], *[iv.ravel() for iv in firsts.values()]]))
    mids = (cuts[:-1] + cuts[1:]) / 2
    widths = np.diff(cuts)
    cover = np.zeros((len(family.qs), mids.size), dtype=bool)
    for row, q in enumerate(family.qs):
        iv = firsts[q]
        slot = np.searchsorted(iv[:, 0], mids, side="right") - 1
        cover[row] = (slot >= 0) & (mids < iv[np.clip(slot, 0, None), 1])
    cache: dict[bytes, float] = {}
    total = 0.0
    for col in range(mids.size):
        members = cover[:, col]
        if not members.any():
            continue
        key = members.tobytes()
        if key not in cache:
            if family.N == 1:
                cache[key] = 1.0
            else:
                chosen = [others[q] for q, hit in zip(family.qs, members) if hit]
                cache[key] = _length(_merge(np.concatenate(chosen)))
        total += widths[col] * cache[key]
    return total


def _near_residue(x: np.ndarray, q: int, r: float) -> tuple[np.ndarray, np.ndarray]:
    # distance from x to the nearest p/q on the torus, and that p mod q
    p = np.rint(x * q)
    return np.abs(x - p / q) < r, p.astype(np.int64) % q


def _measure_montecarlo(family: CellFamily, seed: int, samples: int) -> tuple[float, float]:
    rng = np.random.default_rng(seed)
    hit = np.zeros(samples, dtype=bool)
    points = rng.random((samples, family.N))
    for q in family.qs:
        pending = np.flatnonzero(~hit)
        inside = _near_residue(points[pending, 0], q, family.r1)[0]
        for i in range(1, family.N):
            inside &= _near_residue(points[pending, i], q, family.r2)[0]
        cand = pending[inside]
        p1 = _near_residue(points[cand, 0], q, family.r1)[1]
        hit[cand[np.gcd(p1, q) == 1]] = True
    mean = float(hit.mean())
    return mean, sqrt(mean * (1 - mean) / samples)


@dataclass(frozen=True)
class MeasureReport:
    value: float
    stderr: float
    method: str


def cell_measure(family: CellFamily, method: str = "sweep", seed: int = MC_SEED,
                 samples: int = MC_SAMPLES) -> MeasureReport:
    """Lebesgue measure of the union on the unit torus."""
    if method == "sweep":
        return MeasureReport(float(_measure_sweep(family)), 0.0, method)
    if method == "montecarlo":
        return MeasureReport(*_measure_montecarlo(family, seed, samples), method)
    raise ValueError(f"unknown method {method!r}")


def _check_dilation(dims: ProblemDims, u: ParamVector, a: DilationVector) -> None:
    k = dims.free_dims
    target = (dims.n - dims.m + 1) * u.u2 - 1
    if not (0 <= a.a1 <= Fraction(1, 2) and 0 <= a.a2 <= 1 and 0 <= a.a3 <= Fraction(1, 2)):
        raise DomainError(f"dilation {a} exceeds the slab exponents")
    if a.a1 + k * a.a2 > target:
        raise DomainError(f"dilation {a} is too thin: a1 + (n-m-1) a2 > {target}")


def omega_family(dims: ProblemDims, R: float, u: ParamVector, a: DilationVector) -> CellFamily:
    _check_dilation(dims, u, a)
    scale = CounterexampleScale(dims, R, u)
    r1 = scale.D1 ** 2 / R ** (1 + float(a.a1))
    r2 = scale.D1 / R ** float(a.a2)
    return CellFamily(tuple(moduli(scale)), r1, r2, dims.n - dims.m)


def omega_measure(dims: ProblemDims, R: float, u: ParamVector, a: DilationVector,
                  method: str = "sweep", seed: int = MC_SEED, samples: int = MC_SAMPLES) -> MeasureReport:
    """Measure of the rescaled unit cell of the dilated family, on the torus."""
    return cell_measure(omega_family(dims, R, u, a), method, seed, samples)


# ---------------------------------------------------------------------------
# local ubiquity


@dataclass(frozen=True)
class UbiquityReport:
    """Covered fraction of a cube; ``resolved`` is False below ten cell periods."""

    ratio: float
    stderr: float
    y_density: float
    resolved: bool


def cell_periods(scale: CounterexampleScale) -> tuple[float, float, float]:
    return scale.R / scale.D1 ** 2, 1 / scale.D1, 1 / scale.D2


def ubiquity_check(dims: ProblemDims, R: float, u: ParamVector, center, radius: float,
                   a: DilationVector | None = None, seed: int = MC_SEED,
                   samples: int = MC_SAMPLES) -> UbiquityReport:
    """Monte Carlo estimate of ``|B ∩ F_R^a| / |B|`` for the cube ``B`` of half-side ``radius``."""
    scale = CounterexampleScale(dims, R, u)
    a = a or dilation_from_params(dims, u)
    r1, r2, r3 = _radii_for(scale, a)
    k = dims.free_dims
    periods = cell_periods(scale)
    active = [periods[0]] + [periods[1]] * k + [periods[2]] * dims.m
    resolved = radius >= 10 * max(active)
    rng = np.random.default_rng(seed)
    center = np.asarray(center, dtype=float)
    pts = center + radius * (2 * rng.random((samples, dims.n)) - 1)
    # the last block does not depend on q
    y_hit = np.ones(samples, dtype=bool)
    for i in range(1 + k, dims.n):
        y_hit &= np.abs(pts[:, i] - np.rint(pts[:, i] * scale.D2) / scale.D2) < r3
    x_hit = np.zeros(samples, dtype=bool)
    for q in moduli(scale):
        step1 = R / (scale.D1 ** 2 * q)
        p1 = np.rint(pts[:, 0] / step1)
        inside = (np.abs(pts[:, 0] - p1 * step1) < r1) & (np.gcd(p1.astype(np.int64), q) == 1)
        step2 = 1 / (scale.D1 * q)
        for i in range(1, 1 + k):
            inside &= np.abs(pts[:, i] - np.rint(pts[:, i] / step2) * step2) < r2
        x_hit |= inside
    hit = x_hit & y_hit
    mean = float(hit.mean())
    return UbiquityReport(mean, sqrt(mean * (1 - mean) / samples), float(y_hit.mean()), resolved)
