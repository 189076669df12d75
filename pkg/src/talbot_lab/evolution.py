"""Free Schrödinger evolution of the separable counterexample datum.

The datum at scale ``R`` is a product ``g(x1) h1(x') h2(x'')`` whose Fourier
transform is a bump at frequency ``R`` in the first coordinate, a lattice of
bumps with spacing ``D1`` (smooth envelope of radius ``~R``) in the middle
block, and a lattice with spacing ``D2`` (sharp cutoff of radius ``~R^(1/2)``)
in the last block. Everything is evaluated in frequency space: the lattice
sums are 1-D per coordinate and each lattice term carries a 1-D quadrature of
the bump against a quadratic phase.

Convention: ``e(x) = exp(2 pi i x)`` and the evolution multiplies the Fourier
transform by ``e(t |xi|^2)``. A packet at frequency ``R`` therefore travels to
``x1 = -2 t R``, which is where the slab points of this module sit.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from math import ceil, floor, gcd, log, pi, sqrt

import numpy as np

from .exponents import DomainError, ParamVector, ProblemDims, s_from_params
from .guards import CostGuardError

MIN_NODES = 512
MAX_NODES = 1 << 20
QUAD_RTOL = 1e-8
ROUNDOFF = 1e-13
TERM_LIMIT = 10**8
_CHUNK = 2048


class QuadratureError(RuntimeError):
    """Node doubling did not reach the requested relative tolerance."""


def _profile(y: np.ndarray) -> np.ndarray:
    """``exp(1 - 1/(1 - y^2))`` on ``|y| < 1``, zero outside; equals 1 at 0."""
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    inside = np.abs(y) < 1
    out[inside] = np.exp(1 - 1 / (1 - y[inside] ** 2))
    return out


def _expi(phase: np.ndarray) -> np.ndarray:
    """``e(phase)``, reducing mod 1 first so large phases keep their fractional part."""
    phase = np.asarray(phase, dtype=float)
    return np.exp(2j * pi * (phase - np.floor(phase)))


@dataclass(frozen=True)
class BumpSpec:
    """Frequency profile ``w`` of radius ``c`` plus the lattice envelope radius.

    ``lattice`` is the radius (in units of ``R/D1`` and ``R^(1/2)/D2``) of the
    envelopes that select which lattice translates of ``w`` are present.
    """

    c: float = 0.01
    lattice: float = 0.5

    def __post_init__(self):
        if not 0 < self.c <= 0.1:
            raise ValueError(f"bump radius must lie in (0, 1/10], got {self.c}")
        if not 0 < self.lattice <= 1:
            raise ValueError(f"lattice radius must lie in (0, 1], got {self.lattice}")

    def __call__(self, xi) -> np.ndarray:
        return _profile(np.asarray(xi, dtype=float) / self.c)

    def envelope(self, y) -> np.ndarray:
        """Smooth lattice envelope ``psi``, supported in ``|y| < lattice``."""
        return _profile(np.asarray(y, dtype=float) / self.lattice)

    @cached_property
    def integral(self) -> float:
        return float(oscillatory_integral(self, np.zeros(1), 0.0)[0].real)

    @cached_property
    def l2_norm(self) -> float:
        return sqrt(_trapezoid_adaptive(lambda xi: self(xi) ** 2, self.c))


def _nodes(c: float, count: int) -> tuple[np.ndarray, float]:
    # trapezoid on [-c, c]; the profile and all its derivatives vanish at the ends,
    # so the rule converges faster than any power of the step
    xi = np.linspace(-c, c, count + 1)
    return xi, 2 * c / count


def _trapezoid_adaptive(fn, c: float) -> float:
    count = MIN_NODES
    xi, h = _nodes(c, count)
    prev = float(fn(xi).sum() * h)
    while count < MAX_NODES:
        count *= 2
        xi, h = _nodes(c, count)
        cur = float(fn(xi).sum() * h)
        if abs(cur - prev) <= QUAD_RTOL * abs(cur):
            return cur
        prev = cur
    raise QuadratureError("real quadrature did not converge")


def oscillatory_integral(bump: BumpSpec, a: np.ndarray, b: float, nodes: int = MIN_NODES) -> np.ndarray:
    """``int w(xi) e(a xi + b xi^2) dxi`` for each entry of ``a``.

    Node counts double until every entry changes by less than ``1e-8`` of
    itself, or by less than the roundoff floor when the entry is tiny.
    """
    if nodes < MIN_NODES:
        raise ValueError(f"need at least {MIN_NODES} quadrature nodes")
    a = np.atleast_1d(np.asarray(a, dtype=float))
    out = np.empty(a.shape, dtype=complex)
    for start in range(0, a.size, _CHUNK):
        out[start:start + _CHUNK] = _integral_chunk(bump, a[start:start + _CHUNK], b, nodes)
    return out


def _integral_chunk(bump: BumpSpec, a: np.ndarray, b: float, nodes: int) -> np.ndarray:
    def rule(count):
        xi, h = _nodes(bump.c, count)
        weights = bump(xi) * _expi(b * xi * xi) * h
        return _expi(np.outer(a, xi)) @ weights

    count = nodes
    prev = rule(count)
    while count < MAX_NODES:
        count *= 2
        cur = rule(count)
        # below ~1e-13 of the integrand mass the sum is pure roundoff
        tol = np.maximum(QUAD_RTOL * np.abs(cur), ROUNDOFF * 2 * bump.c)
        if np.all(np.abs(cur - prev) <= tol):
            return cur
        prev = cur
    raise QuadratureError(f"oscillatory quadrature failed to converge at {nodes} nodes")


# ---------------------------------------------------------------------------
# scales and slab points


@dataclass(frozen=True)
class CounterexampleScale:
    dims: ProblemDims
    R: float
    u: ParamVector

    def __post_init__(self):
        if self.R < 2:
            raise DomainError(f"R must be at least 2, got {self.R}")

    @property
    def D1(self) -> float:
        return self.R ** float(1 + self.u.u1 - self.u.u2)

    @property
    def D2(self) -> float:
        return self.R ** float(self.u.u3)

    @property
    def Q(self) -> float:
        return self.R ** float(2 * self.u.u2 - self.u.u1 - 1)

    @property
    def middle_radius(self) -> float:
        """``R / D1``: the lattice envelope scale of the middle block."""
        return self.R / self.D1

    @property
    def last_radius(self) -> float:
        """``R^(1/2) / D2``: the sharp lattice cutoff scale of the last block."""
        return sqrt(self.R) / self.D2

    @property
    def s(self) -> Fraction:
        return s_from_params(self.dims, self.u.u2, self.u.u3)


def _middle_lattice(scale: CounterexampleScale, bump: BumpSpec) -> tuple[np.ndarray, np.ndarray]:
    L = scale.middle_radius
    span = ceil(bump.lattice * L)
    if 2 * span + 1 > TERM_LIMIT:
        raise CostGuardError(f"{2 * span + 1} lattice terms per coordinate")
    ell = np.arange(-span, span + 1, dtype=np.int64)
    weights = bump.envelope(ell / L)
    keep = weights > 0
    return ell[keep], weights[keep]


def _last_lattice(scale: CounterexampleScale, bump: BumpSpec) -> np.ndarray:
    span = floor(bump.lattice * scale.last_radius)
    if 2 * span + 1 > TERM_LIMIT:
        raise CostGuardError(f"{2 * span + 1} lattice terms per coordinate")
    return np.arange(-span, span + 1, dtype=np.int64)


@dataclass(frozen=True)
class SlabPoint:
    """A point of one slab together with the time at which it lights up.

    ``x1`` sits within ``R^(-1/2)`` of ``-2 R p1/(D1^2 q)``, the position of
    the frequency-``R`` packet at time ``t = p1/(D1^2 q)``.
    """

    scale: CounterexampleScale
    q: int
    p1: int
    p_mid: tuple[int, ...]
    p_last: tuple[int, ...]
    x: tuple[float, ...]

    def __post_init__(self):
        dims, sc = self.scale.dims, self.scale
        if len(self.p_mid) != dims.free_dims or len(self.p_last) != dims.m:
            raise DomainError("slab index has the wrong block sizes")
        if len(self.x) != dims.n:
            raise DomainError("point has the wrong dimension")
        if self.q < 1 or self.q % 2 == 0 or gcd(self.p1, self.q) != 1:
            raise DomainError("need q odd and gcd(p1, q) = 1")
        if self.q not in moduli(sc):
            raise DomainError(f"q = {self.q} is not an admissible modulus for Q = {sc.Q:.4g}")
        if abs(self.x[0] - self.center[0]) >= sc.R ** -0.5:
            raise DomainError("x1 is not in the slab")
        mid, last = self.center[1:1 + dims.free_dims], self.center[1 + dims.free_dims:]
        if any(abs(a - b) >= 1 / sc.R for a, b in zip(self.x[1:], mid)):
            raise DomainError("x' is not in the slab")
        if any(abs(a - b) >= sc.R ** -0.5 for a, b in zip(self.x[1 + dims.free_dims:], last)):
            raise DomainError("x'' is not in the slab")

    @property
    def t(self) -> float:
        return self.p1 / (self.scale.D1 ** 2 * self.q)

    @property
    def center(self) -> tuple[float, ...]:
        sc = self.scale
        x1 = -2 * sc.R * self.t
        mid = tuple(p / (sc.D1 * self.q) for p in self.p_mid)
        last = tuple(p / sc.D2 for p in self.p_last)
        return (x1, *mid, *last)

    @property
    def x_mid(self) -> tuple[float, ...]:
        return self.x[1:1 + self.scale.dims.free_dims]

    @property
    def x_last(self) -> tuple[float, ...]:
        return self.x[1 + self.scale.dims.free_dims:]


def moduli(scale: CounterexampleScale) -> list[int]:
    """Odd ``q`` with ``Q/2 <= q < Q``; just ``[1]`` when ``2 u2 - u1 = 1`` makes ``Q = 1``."""
    if 2 * scale.u.u2 - scale.u.u1 == 1:
        return [1]
    Q = scale.Q
    lo = ceil(Q / 2)
    lo += 1 - lo % 2
    out = list(range(lo, ceil(Q), 2))
    if not out:
        raise DomainError(f"no odd modulus in [Q/2, Q) for Q = {Q:.4g}")
    return out


def select_modulus(scale: CounterexampleScale) -> int:
    """The largest admissible modulus."""
    return moduli(scale)[-1]


def slab_point(scale: CounterexampleScale, x1_target: float = 0.5, p_mid=None, p_last=None,
               q: int | None = None) -> SlabPoint:
    """Slab centre whose first coordinate is as close as possible to ``x1_target``."""
    dims = scale.dims
    q = select_modulus(scale) if q is None else q
    # x1 = -2 R p1 / (D1^2 q): pick the nearest p1 coprime to q
    unit = 2 * scale.R / (scale.D1 ** 2 * q)
    guess = -x1_target / unit
    base = round(guess)
    p1 = None
    for offset in range(0, 4 * q + 4):
        for cand in (base + offset, base - offset):
            if cand != 0 and gcd(cand, q) == 1:
                p1 = cand
                break
        if p1 is not None:
            break
    p_mid = tuple(p_mid) if p_mid is not None else (1,) * dims.free_dims
    p_last = tuple(p_last) if p_last is not None else (1,) * dims.m
    x1 = -unit * p1
    mid = tuple(p / (scale.D1 * q) for p in p_mid)
    last = tuple(p / scale.D2 for p in p_last)
    return SlabPoint(scale, q, p1, p_mid, p_last, (x1, *mid, *last))


# ---------------------------------------------------------------------------
# the three factors


def datum_norm(scale: CounterexampleScale, bump: BumpSpec) -> float:
    """``||f_R||_2`` by Plancherel; the bump translates never overlap."""
    w2 = bump.l2_norm
    g = scale.R ** 0.25 * w2
    _, env = _middle_lattice(scale, bump)
    h1 = (float((env ** 2).sum()) ** 0.5 * w2) ** scale.dims.free_dims
    h2 = (sqrt(_last_lattice(scale, bump).size) * w2) ** scale.dims.m
    return g * h1 * h2


def evolve_g(scale: CounterexampleScale, x1: float, t: float, bump: BumpSpec,
             nodes: int = MIN_NODES) -> complex:
    R = scale.R
    inner = oscillatory_integral(bump, np.array([sqrt(R) * (x1 + 2 * t * R)]), t * R, nodes)[0]
    # the unimodular factor e(R x1 + t R^2) matters once scales are summed
    return complex(sqrt(R) * _expi(R * x1 + t * R * R) * inner)


def _lattice_factor(spacing: float, ell: np.ndarray, env: np.ndarray, x: float, t: float,
                    bump: BumpSpec) -> complex:
    freq = spacing * ell.astype(float)
    phase = freq * x + t * freq * freq
    inner = oscillatory_integral(bump, x + 2 * t * freq, t)
    return complex((env * _expi(phase) * inner).sum())


def evolve_h1(scale: CounterexampleScale, x_mid, t: float, bump: BumpSpec) -> complex:
    ell, env = _middle_lattice(scale, bump)
    out = complex(1.0)
    for xi in x_mid:
        out *= _lattice_factor(scale.D1, ell, env, float(xi), t, bump)
    return out


def evolve_h2(scale: CounterexampleScale, x_last, t: float, bump: BumpSpec) -> complex:
    ell = _last_lattice(scale, bump)
    env = np.ones(ell.size)
    out = complex(1.0)
    for xi in x_last:
        out *= _lattice_factor(scale.D2, ell, env, float(xi), t, bump)
    return out


@dataclass(frozen=True)
class EvolutionValue:
    g_part: complex
    h1_part: complex
    h2_part: complex
    product: complex
    norm: float

    @property
    def normalized_magnitude(self) -> float:
        return abs(self.product) / self.norm


def evolve_at(scale: CounterexampleScale, x, t: float, bump: BumpSpec) -> EvolutionValue:
    k = scale.dims.free_dims
    g = evolve_g(scale, float(x[0]), t, bump)
    h1 = evolve_h1(scale, x[1:1 + k], t, bump)
    h2 = evolve_h2(scale, x[1 + k:], t, bump)
    return EvolutionValue(g, h1, h2, g * h1 * h2, datum_norm(scale, bump))


def solution_at(point: SlabPoint, bump: BumpSpec) -> EvolutionValue:
    return evolve_at(point.scale, point.x, point.t, bump)


def heuristic_size(scale: CounterexampleScale, q: int) -> float:
    """``R^(1/4) (R/(D1 q))^((n-m-1)/2) (R^(1/2)/D2)^(m/2)``."""
    dims = scale.dims
    return (scale.R ** 0.25 * (scale.middle_radius / q) ** (dims.free_dims / 2)
            * scale.last_radius ** (dims.m / 2))


# ---------------------------------------------------------------------------
# scale sweeps


@dataclass(frozen=True)
class SlopeFit:
    Rs: tuple[float, ...]
    magnitudes: tuple[float, ...]
    slope: float
    expected: Fraction

    @property
    def deviation(self) -> float:
        return abs(self.slope - float(self.expected))

    @property
    def spread(self) -> float:
        """max/min of ``magnitude / R^s`` over the sweep."""
        ratios = [m / R ** float(self.expected) for m, R in zip(self.magnitudes, self.Rs)]
        return max(ratios) / min(ratios)


def slope_fit(dims: ProblemDims, u: ParamVector, Rs, bump: BumpSpec | None = None,
              selector=slab_point) -> SlopeFit:
    """Least-squares slope of ``log |e^{itD} f_R| / ||f_R||`` against ``log R``."""
    Rs = tuple(float(R) for R in Rs)
    if len(Rs) < 4:
        raise ValueError("need at least four scales")
    bump = bump or BumpSpec()
    mags = tuple(solution_at(selector(CounterexampleScale(dims, R, u)), bump).normalized_magnitude
                 for R in Rs)
    slope = float(np.polyfit(np.log(Rs), np.log(mags), 1)[0])
    return SlopeFit(Rs, mags, slope, s_from_params(dims, u.u2, u.u3))


def _normalized(scale: CounterexampleScale, x, t: float, bump: BumpSpec) -> complex:
    value = evolve_at(scale, x, t, bump)
    return value.product / (scale.R ** float(scale.s) * value.norm)


def off_scale_decay(scale_j: CounterexampleScale, point_k: SlabPoint, bump: BumpSpec) -> float:
    """``|e^{itD} f_{R_j}(x)| / (R_j^s ||f_{R_j}||)`` at a slab point of another scale."""
    if not 0.1 < abs(point_k.x[0]) <= 1:
        raise DomainError("the slab point must satisfy 1/10 < |x1| <= 1")
    return abs(_normalized(scale_j, point_k.x, point_k.t, bump))


@lru_cache(maxsize=256)
def _scale(dims: ProblemDims, j: int, u: ParamVector) -> CounterexampleScale:
    return CounterexampleScale(dims, float(2 ** j), u)


def dyadic_terms(x, t: float, K0: int, Kmax: int, dims: ProblemDims, u: ParamVector,
                 bump: BumpSpec) -> dict[int, complex]:
    """Terms ``j e^{itD} f_{R_j}(x) / (R_j^s ||f_{R_j}||)`` for ``K0 <= j <= Kmax``."""
    if Kmax < K0:
        raise ValueError("empty range of scales")
    if Kmax - K0 > 8:
        raise CostGuardError("at most nine dyadic scales per partial sum")
    return {j: j * _normalized(_scale(dims, j, u), x, t, bump) for j in range(K0, Kmax + 1)}


def dyadic_partial(x, t: float, K0: int, Kmax: int, dims: ProblemDims, u: ParamVector,
                   bump: BumpSpec) -> complex:
    return complex(sum(dyadic_terms(x, t, K0, Kmax, dims, u, bump).values()))


@dataclass(frozen=True)
class DyadicReport:
    k: int
    total: complex
    on_scale: complex
    off_scale: float

    @property
    def lower_bound(self) -> float:
        """``|on-scale term| - sum |off-scale terms|``."""
        return abs(self.on_scale) - self.off_scale


def dyadic_report(k: int, K0: int, Kmax: int, dims: ProblemDims, u: ParamVector,
                  bump: BumpSpec, x1_target: float = 0.5) -> DyadicReport:
    point = slab_point(_scale(dims, k, u), x1_target)
    terms = dyadic_terms(point.x, point.t, K0, Kmax, dims, u, bump)
    off = sum(abs(v) for j, v in terms.items() if j != k)
    return DyadicReport(k, complex(sum(terms.values())), terms[k], off)


def hs_norm_ratio(scale: CounterexampleScale, s: float, bump: BumpSpec) -> float:
    """``||f_R||_{H^s} / (R^s ||f_R||_2)`` with weight ``(1 + |xi|^2)^(s/2)``."""
    if s == 0:
        return 1.0
    dims = scale.dims
    ell, env = _middle_lattice(scale, bump)
    last = _last_lattice(scale, bump)
    # squared transverse radii of lattice centres with their squared weights;
    # offsets inside each bump are at most c, negligible against |xi| >= R/2
    radii, weights = np.zeros(1), np.ones(1)
    for _ in range(dims.free_dims):
        radii = (radii[:, None] + (scale.D1 * ell) ** 2).ravel()
        weights = (weights[:, None] * env ** 2).ravel()
        if radii.size > 10**7:
            raise CostGuardError("transverse lattice too large")
    for _ in range(dims.m):
        radii = (radii[:, None] + (scale.D2 * last) ** 2).ravel()
        weights = (weights[:, None] * np.ones(last.size)).ravel()
        if radii.size > 10**7:
            raise CostGuardError("transverse lattice too large")
    R = scale.R

    def weighted(eta):
        xi1 = R + sqrt(R) * eta
        w2 = bump(eta) ** 2
        rows = []
        for start in range(0, eta.size, 256):
            block = xi1[start:start + 256, None] ** 2 + radii[None, :]
            rows.append(((1 + block) ** s) @ weights)
        return w2 * np.concatenate(rows)

    top = _trapezoid_adaptive(weighted, bump.c)
    bottom = _trapezoid_adaptive(lambda eta: bump(eta) ** 2, bump.c) * weights.sum()
    return sqrt(top / bottom) / R ** s


def fitted_exponent(xs, ys) -> float:
    """Slope of ``log y`` against ``log x``."""
    return float(np.polyfit([log(v) for v in xs], [log(v) for v in ys], 1)[0])
