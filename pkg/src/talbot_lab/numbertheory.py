"""Integer machinery: arithmetic functions, quadratic Gauss sums, index counts."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt, pi

import numpy as np

from .guards import CostGuardError


@dataclass(frozen=True)
class SieveTables:
    """Arithmetic-function tables on ``0..limit`` from one linear sieve pass.

    Attributes:
        phi: Euler totient, ``phi[0] = 0``.
        mu: Mobius function, ``mu[0] = 0``.
        smallest_prime: least prime factor, 0 for 0 and 1.
        primes: primes up to ``limit`` in increasing order.
    """

    phi: np.ndarray
    mu: np.ndarray
    smallest_prime: np.ndarray
    primes: np.ndarray


def sieve(limit: int) -> SieveTables:
    """Linear (Euler) sieve: every composite is struck exactly once.

    Args:
        limit: largest integer to tabulate, at least 1.

    Returns:
        SieveTables covering ``0..limit``.
    """
    if limit < 1:
        raise ValueError("limit must be at least 1")
    phi = [0] * (limit + 1)
    mu = [0] * (limit + 1)
    spf = [0] * (limit + 1)
    primes: list[int] = []
    phi[1], mu[1] = 1, 1
    for i in range(2, limit + 1):
        if spf[i] == 0:
            spf[i] = i
            primes.append(i)
            phi[i] = i - 1
            mu[i] = -1
        for p in primes:
            ip = i * p
            if p > spf[i] or ip > limit:
                break
            spf[ip] = p
            if p == spf[i]:
                phi[ip] = phi[i] * p
                mu[ip] = 0
            else:
                phi[ip] = phi[i] * (p - 1)
                mu[ip] = -mu[i]
    return SieveTables(
        np.array(phi, dtype=np.int64),
        np.array(mu, dtype=np.int64),
        np.array(spf, dtype=np.int64),
        np.array(primes, dtype=np.int64),
    )


def _factor(q: int) -> dict[int, int]:
    out: dict[int, int] = {}
    d = 2
    while d * d <= q:
        while q % d == 0:
            out[d] = out.get(d, 0) + 1
            q //= d
        d += 1 if d == 2 else 2
    if q > 1:
        out[q] = out.get(q, 0) + 1
    return out


def totient(q: int) -> int:
    """Euler's phi by trial division."""
    if q < 1:
        raise ValueError("totient needs q >= 1")
    result = q
    for p in _factor(q):
        result -= result // p
    return result


def mobius(d: int) -> int:
    if d < 1:
        raise ValueError("mobius needs d >= 1")
    exps = _factor(d)
    if any(e > 1 for e in exps.values()):
        return 0
    return -1 if len(exps) % 2 else 1


def divisors(q: int) -> list[int]:
    small = [d for d in range(1, isqrt(q) + 1) if q % d == 0]
    return sorted(set(small + [q // d for d in small]))


def totient_via_mobius(q: int) -> Fraction:
    """``q * sum_{d | q} mu(d)/d`` in exact arithmetic."""
    return q * sum((Fraction(mobius(d), d) for d in divisors(q)), Fraction(0))


# ---------------------------------------------------------------------------
# Gauss sums


def _phases(a: int, b: int, q: int, n: np.ndarray) -> np.ndarray:
    # (a n^2 + b n) mod q in integers, never forming a large float angle
    a, b = a % q, b % q
    return ((a * n % q) * n + b * n) % q


def gauss_sum_1d(a: int, b: int, q: int) -> complex:
    """``sum_{n=0}^{q-1} e((a n^2 + b n)/q)`` with integer phase reduction."""
    if q < 1:
        raise ValueError("q must be positive")
    n = np.arange(q, dtype=np.int64)
    r = _phases(a, b, q, n)
    return complex(np.exp(2j * pi * r / q).sum())


def gauss_sums_over_units(q: int, b: int) -> tuple[np.ndarray, np.ndarray]:
    """``G(a, b, q)`` for every unit ``a`` mod ``q`` at once; returns ``(a, sums)``."""
    if q < 1:
        raise ValueError("q must be positive")
    a = np.array([k for k in range(1, q + 1) if gcd(k, q) == 1], dtype=np.int64) % q
    n = np.arange(q, dtype=np.int64)
    sq = n * n % q
    table = np.exp(2j * pi * np.arange(q) / q)
    phases = (a[:, None] * sq[None, :] + (b % q) * n[None, :]) % q
    return a, table[phases].sum(axis=1)


@dataclass(frozen=True)
class GaussSumSpec:
    q: int
    a: int
    b: tuple[int, ...]

    def __post_init__(self):
        if self.q < 1 or self.q % 2 == 0:
            raise ValueError("q must be an odd positive integer")
        if gcd(self.a, self.q) != 1:
            raise ValueError("gcd(a, q) must be 1")

    @property
    def d(self) -> int:
        return len(self.b)


def gauss_sum_multi(spec: GaussSumSpec) -> complex:
    """d-dimensional sum over ``Z_q^d`` as a product of 1-D sums."""
    out = complex(1.0)
    for bi in spec.b:
        out *= gauss_sum_1d(spec.a, bi, spec.q)
    return out


def gauss_sum_direct(spec: GaussSumSpec) -> complex:
    """Literal enumeration of ``Z_q^d``; the cross-check for the product form."""
    q, a = spec.q, spec.a
    if q ** spec.d > 10**7:
        raise CostGuardError(f"direct enumeration of {q}^{spec.d} points")
    grids = np.meshgrid(*[np.arange(q, dtype=np.int64)] * spec.d, indexing="ij")
    phase = np.zeros_like(grids[0]) if spec.d else np.zeros((), dtype=np.int64)
    for g, bi in zip(grids, spec.b):
        phase = (phase + (a % q) * g % q * g + (bi % q) * g) % q
    return complex(np.exp(2j * pi * phase / q).sum())


# ---------------------------------------------------------------------------
# counting the index set of slabs


@dataclass(frozen=True)
class CountReport:
    Q: int
    N: int
    count: int

    @property
    def normalized(self) -> float:
        return self.count / float(self.Q) ** (self.N + 1)


def odd_moduli(Q: int) -> range:
    """Odd q with ``Q/2 <= q < Q``."""
    lo = (Q + 1) // 2
    if lo % 2 == 0:
        lo += 1
    return range(lo, Q, 2)


def count_index_set(Q: int, N: int, tables: SieveTables | None = None) -> CountReport:
    """``|J| = sum_{q odd, Q/2 <= q < Q} phi(q) q^(N-1)`` in big integers."""
    if Q < 4 or N < 1:
        raise ValueError("need Q >= 4 and N >= 1")
    tables = tables if tables is not None and len(tables.phi) > Q else sieve(Q)
    total = sum(int(tables.phi[q]) * q ** (N - 1) for q in odd_moduli(Q))
    return CountReport(Q, N, total)


def count_index_set_by_gcd(Q: int, N: int) -> CountReport:
    """Same count with coprimality tested by ``gcd`` on every residue."""
    total = 0
    for q in odd_moduli(Q):
        units = sum(1 for p1 in range(q) if gcd(p1, q) == 1)
        total += units * q ** (N - 1)
    return CountReport(Q, N, total)


def _strictly_within(delta: int, qq: int, Q: int, t: Fraction) -> bool:
    """Exact test of ``delta / (q q~) < 2 Q^{-t}``, i.e. ``(delta/(2 q q~))^b Q^a < 1``."""
    a, b = t.numerator, t.denominator
    return delta ** b * Q ** a < (2 * qq) ** b


def _axis_pairs(q: int, qt: int, Q: int, t: Fraction, units_only: bool) -> int:
    """Pairs ``(p, p~)`` in ``[0,q) x [0,q~)`` with ``|p/q - p~/q~| < 2 Q^{-t}``."""
    width = 2 * q * qt / float(Q) ** float(t)
    count = 0
    for p in range(q):
        if units_only and gcd(p, q) != 1:
            continue
        centre = p * qt / q
        lo = max(0, int(centre - width / q) - 1)
        hi = min(qt - 1, int(centre + width / q) + 1)
        for pt in range(lo, hi + 1):
            if units_only and gcd(pt, qt) != 1:
                continue
            if _strictly_within(abs(p * qt - pt * q), q * qt, Q, t):
                count += 1
    return count


def _check_pair_params(Q: int, t1, t2, N: int) -> tuple[Fraction, Fraction]:
    t1, t2 = Fraction(t1), Fraction(t2)
    if Q > 64 or N > 2:
        raise CostGuardError(f"pair enumeration capped at Q <= 64, N <= 2 (got Q={Q}, N={N})")
    if N < 1 or Q < 4:
        raise ValueError("need Q >= 4 and N >= 1")
    if t1 < 1 or t2 < 1 or t1 + (N - 1) * t2 != N + 1:
        raise ValueError("need t1, t2 >= 1 and t1 + (N-1) t2 = N + 1")
    return t1, t2


def count_intersecting_pairs(Q: int, t1, t2, N: int) -> CountReport:
    """Ordered pairs of index triples whose open boxes meet.

    The box of ``(p1, p', q)`` is ``B(p1/q, Q^-t1) x B(p'/q, Q^-t2)``. Two boxes
    meet exactly when every coordinate pair does, so for each pair of moduli
    the count is a product of per-axis counts, each decided in exact integer
    arithmetic.
    """
    t1, t2 = _check_pair_params(Q, t1, t2, N)
    moduli = list(odd_moduli(Q))
    total = 0
    for q in moduli:
        for qt in moduli:
            first = _axis_pairs(q, qt, Q, t1, units_only=True)
            if first == 0 or N == 1:
                total += first
                continue
            total += first * _axis_pairs(q, qt, Q, t2, units_only=False) ** (N - 1)
    return CountReport(Q, N, total)


def count_intersecting_pairs_bruteforce(Q: int, t1, t2, N: int) -> CountReport:
    """Literal double loop over all index pairs; only for tiny Q."""
    t1, t2 = _check_pair_params(Q, t1, t2, N)
    boxes = []
    for q in odd_moduli(Q):
        for p in itertools.product(range(q), repeat=N):
            if gcd(p[0], q) == 1:
                boxes.append((q, p))
    if len(boxes) ** 2 > 10**7:
        raise CostGuardError("brute-force pair loop too large")
    total = 0
    for q, p in boxes:
        for qt, pt in boxes:
            ok = _strictly_within(abs(p[0] * qt - pt[0] * q), q * qt, Q, t1)
            for k in range(1, N):
                if not ok:
                    break
                ok = _strictly_within(abs(p[k] * qt - pt[k] * q), q * qt, Q, t2)
            total += ok
    return CountReport(Q, N, total)


# ---------------------------------------------------------------------------
# perturbation of complete Gauss sums by a slowly varying weight


def power_cutoff(order: int):
    """Weight ``x -> (1 - x^2)^order`` on ``|x| < 1``.

    Its ``order``-th derivative jumps at the edge, so the Fourier transform
    decays like ``|xi|^-(order + 1)``.
    """

    def weight(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) < 1, np.clip(1 - x * x, 0, None) ** order, 0.0)

    return weight


def smooth_cutoff(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    out[inside] = np.exp(1 - 1 / (1 - x[inside] ** 2))
    return out


def saturating_cutoff(N: int):
    """Cutoff whose discrete-Laplacian tail makes the error decay like ``L^(d-2N)``."""
    return power_cutoff(2 * N - 1)


@dataclass(frozen=True)
class PerturbationResult:
    lhs: complex
    main_term: complex
    error_bound: float
    L: float
    q: int
    d: int
    N: int

    @property
    def error(self) -> float:
        return abs(self.lhs - self.main_term)

    @property
    def relative_error(self) -> float:
        return self.error / abs(self.main_term)


def perturbation_check(q: int, p1: int, p_prime, L: float, N: int, cutoff=None) -> PerturbationResult:
    """Compare a weighted quadratic exponential sum with its Gauss-sum main term.

    The weight is the tensor product ``prod_j cutoff(m_j / L)``. The left side
    is summed directly over every lattice point of the support.
    """
    p_prime = tuple(int(b) for b in p_prime)
    d = len(p_prime)
    if q % 2 == 0 or gcd(p1, q) != 1:
        raise ValueError("need q odd and gcd(p1, q) = 1")
    if d < 1 or N <= d / 2:
        raise ValueError("need d >= 1 and N > d/2")
    span = int(np.floor(L))
    if (2 * span + 1) ** d > 10**8:
        raise CostGuardError(f"direct sum over {(2 * span + 1)}^{d} points")
    cutoff = cutoff or saturating_cutoff(N)
    axis = np.arange(-span, span + 1, dtype=np.int64)
    w1 = cutoff(axis / L)
    lhs = 0j
    total_weight = 0.0
    # direct summation: iterate over all but the last axis, vectorise the last
    for head in itertools.product(range(len(axis)), repeat=d - 1):
        weight = float(np.prod([w1[i] for i in head])) if head else 1.0
        if weight == 0.0:
            continue
        phase = sum((p1 * int(axis[i]) ** 2 + b * int(axis[i])) for i, b in zip(head, p_prime)) % q
        last = _phases(p1, p_prime[-1], q, axis % q)
        terms = w1 * np.exp(2j * pi * ((last + phase) % q) / q)
        lhs += weight * complex(terms.sum())
        total_weight += weight * float(w1.sum())
    full = gauss_sum_multi(GaussSumSpec(q, p1, p_prime))
    main = total_weight / q ** d * full
    bound = q ** (d / 2) * (L / q) ** (d - 2 * N)
    return PerturbationResult(lhs, main, bound, float(L), q, d, N)


@dataclass(frozen=True)
class PerturbationSweep:
    results: tuple[PerturbationResult, ...]
    constant: float
    slope: float
    expected_slope: int

    @property
    def bound_holds(self) -> bool:
        # constant calibrated at the first scale with a factor 2 of headroom
        return all(r.error <= 2 * self.constant * r.error_bound for r in self.results)


def perturbation_sweep(q: int, p1: int, p_prime, Ls, N: int, cutoff=None) -> PerturbationSweep:
    results = tuple(perturbation_check(q, p1, p_prime, L, N, cutoff) for L in Ls)
    constant = results[0].error / results[0].error_bound
    xs = np.log([r.L for r in results])
    ys = np.log([r.error for r in results])
    slope = float(np.polyfit(xs, ys, 1)[0])
    return PerturbationSweep(results, constant, slope, len(tuple(p_prime)) - 2 * N)


def log_ratio_spread(values) -> float:
    """max/min of a positive sequence, as a multiplicative spread."""
    values = [float(v) for v in values]
    return max(values) / min(values)

