"""Reverse water-filling distortion allocation and Bernoulli flip rules.

For M parallel Bernoulli(p_j) sources under Hamming distortion the optimal
per-class distortion is D_j* = min(nu, p_j) with a common water level nu
meeting the budget sum_j w_j D_j* = D, and the matching test channel flips
class-j bits with probability

    q_j = max(0, (p_j - nu) / (1 - 2 nu)).

Classes below the water (p_j <= nu) get zero rate and zero flips.  The sum
rate is sum_j w_j [H(p_j) - H(D_j*)] bits per symbol and the codebook
(list) size is about 2^(N rate).

The same allocation applies per index on the BI-AWGN channel, with p_j
replaced by the realized crossovers p(l_i); in the long-block limit the
water-level equation turns into an integral against the density of the
absolute channel output, solved here by quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.special import expit, xlogy
from scipy.stats import norm

from .errors import NumericalError, ValidationError

BISECT_TOL = 1e-12
BISECT_MAX_ITER = 200
# 2^(N rate) above 2^62 has no usable integer representation; callers get
# the exponent and a saturation flag instead.
LIST_SATURATION_BITS = 62.0

_LN2 = math.log(2.0)


def binary_entropy(x):
    """Binary entropy H(x) in bits, with H(0) = H(1) = 0.

    Accepts scalars or arrays; raises on arguments outside [0, 1].
    """
    arr = np.asarray(x, dtype=np.float64)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValidationError("binary_entropy needs arguments in [0, 1]")
    h = -(xlogy(arr, arr) + xlogy(1.0 - arr, 1.0 - arr)) / _LN2
    if np.isscalar(x) or arr.ndim == 0:
        return float(h)
    return h


def scalar_flip(p: float, D: float) -> float:
    """Flip probability q = max(0, (p - D) / (1 - 2D)) of the Ber(p) test channel.

    The 0/0 corner p = D = 1/2 returns 0 by continuity from the p <= D
    region (a pure-noise class is never flipped).
    """
    if not 0.0 <= D <= 0.5:
        raise ValidationError("D must lie in [0, 1/2]")
    if not 0.0 <= p <= 0.5:
        raise ValidationError("p must lie in [0, 1/2]")
    if p <= D:
        return 0.0
    return (p - D) / (1.0 - 2.0 * D)


def waterfill(weights, p, D):
    """Water-filling solution for probability weights summing to 1.

    Returns (nu, d_star, q, rate).  If D already covers the average noise
    level (D >= sum_j w_j p_j) no flipping is needed: nu = max(p), all
    q_j = 0 and rate = 0.  Otherwise nu solves

        g(nu) = sum_j w_j min(nu, p_j) - D = 0

    by bisection on [0, max(p)]; g is monotone piecewise-linear, so
    bisection is unconditionally safe.
    """
    w = np.asarray(weights, dtype=np.float64)
    pv = np.asarray(p, dtype=np.float64)
    if w.shape != pv.shape or w.ndim != 1 or w.size == 0:
        raise ValidationError("weights and p must be equal-length 1-D arrays")
    if np.any(w < 0.0) or abs(w.sum() - 1.0) > 1e-9:
        raise ValidationError("weights must be nonnegative and sum to 1")
    if np.any(pv < 0.0) or np.any(pv > 0.5):
        raise ValidationError("p must lie in [0, 1/2]")
    if not 0.0 <= D <= 0.5:
        raise ValidationError("D must lie in [0, 1/2]")

    mean_p = float(w @ pv)
    if D >= mean_p:
        nu = float(pv.max())
        return nu, pv.copy(), np.zeros_like(pv), 0.0

    lo, hi = 0.0, float(pv.max())
    nu = hi
    for _ in range(BISECT_MAX_ITER):
        nu = 0.5 * (lo + hi)
        g = float(w @ np.minimum(nu, pv)) - D
        if abs(g) < BISECT_TOL or hi - lo < 1e-16:
            break
        if g < 0.0:
            lo = nu
        else:
            hi = nu

    d_star = np.minimum(nu, pv)
    q = np.where(pv > nu, (pv - nu) / (1.0 - 2.0 * nu), 0.0)
    rate = float(w @ np.maximum(0.0, binary_entropy(pv) - binary_entropy(d_star)))
    return float(nu), d_star, q, rate


@dataclass(frozen=True)
class ListSize:
    """Codebook size ceil(2^log2) with a saturation flag for huge exponents."""

    count: int | None
    log2: float
    saturated: bool


def list_size(N: int, rate: float) -> ListSize:
    """Number of test patterns L = max(1, ceil(2^(N rate)))."""
    if rate < 0.0:
        raise ValidationError("rate must be nonnegative")
    log2_l = float(N) * float(rate)
    if log2_l > LIST_SATURATION_BITS:
        return ListSize(count=None, log2=log2_l, saturated=True)
    return ListSize(count=max(1, math.ceil(2.0 ** log2_l)), log2=log2_l, saturated=False)


@dataclass(frozen=True)
class WaterFillInput:
    """Discrete water-filling problem: class counts, crossovers and radius t.

    ``block_length`` defaults to the composition total; it is separate so a
    stated block length can define D = t/N even when the composition it is
    quoted with sums to something else (weights always normalize over the
    composition total).
    """

    composition: tuple
    p: tuple
    t: int
    block_length: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "composition", tuple(int(n) for n in self.composition))
        object.__setattr__(self, "p", tuple(float(x) for x in self.p))
        if len(self.composition) == 0 or len(self.composition) != len(self.p):
            raise ValidationError("composition and p must be non-empty and equal length")
        if any(n < 0 for n in self.composition) or sum(self.composition) == 0:
            raise ValidationError("composition must be nonnegative with positive total")
        if any(x < 0.0 or x > 0.5 for x in self.p):
            raise ValidationError("p must lie in [0, 1/2]")
        if self.t < 0:
            raise ValidationError("t must be nonnegative")
        if self.t > self.N:
            raise ValidationError("t must not exceed the block length")

    @property
    def N(self) -> int:
        return self.block_length if self.block_length is not None else sum(self.composition)

    @property
    def D(self) -> float:
        return self.t / self.N


@dataclass(frozen=True)
class WaterFillSolution:
    """Water level, distortion split, flip probabilities, rate and list size."""

    nu: float
    d_star: np.ndarray
    q: np.ndarray
    rate: float
    log2_list_size: float
    list_size: int | None
    saturated: bool


def solve_waterfill(inp: WaterFillInput) -> WaterFillSolution:
    """Solve the discrete water-filling problem for a realized composition."""
    comp = np.asarray(inp.composition, dtype=np.float64)
    weights = comp / comp.sum()
    nu, d_star, q, rate = waterfill(weights, inp.p, inp.D)
    lst = list_size(inp.N, rate)
    return WaterFillSolution(
        nu=nu,
        d_star=d_star,
        q=q,
        rate=rate,
        log2_list_size=lst.log2,
        list_size=lst.count,
        saturated=lst.saturated,
    )


def awgn_waterfill(p_seq, t: int):
    """Per-index water-filling for realized crossovers p(l_i).

    Returns (nu, d_star, q) with (1/N) sum_i min(nu, p_i) = t/N and
    q_i = max(0, (p_i - nu) / (1 - 2 nu)).
    """
    pv = np.asarray(p_seq, dtype=np.float64)
    if pv.ndim != 1 or pv.size == 0:
        raise ValidationError("p_seq must be a non-empty 1-D array")
    if t < 0 or t > pv.size:
        raise ValidationError("t must lie in 0..N")
    weights = np.full(pv.size, 1.0 / pv.size)
    nu, d_star, q, _ = waterfill(weights, pv, t / pv.size)
    return nu, d_star, q


@dataclass(frozen=True)
class AwgnFlipRule:
    """Asymptotic flip rule for a BI-AWGN channel at noise level sigma.

    ``threshold_llr`` is log((1 - nu)/nu): above it p(l) < nu and no
    flipping is performed.  ``q_fn_table`` holds (l, q(l)) samples for
    documentation and plotting.  When the distortion budget already covers
    the channel (D >= Q(1/sigma)) the all-zero rule is returned with the
    sentinel nu = 1/2 and ``no_flip`` set.
    """

    sigma: float
    D: float
    nu: float
    threshold_llr: float
    rate: float
    no_flip: bool
    q_fn_table: np.ndarray

    def q_of_llr(self, llr_mag):
        """Flip probability q(l) = max(0, (p(l) - nu) / (1 - 2 nu))."""
        p = expit(-np.asarray(llr_mag, dtype=np.float64))
        if self.no_flip or self.nu >= 0.5:
            return np.zeros_like(p)
        return np.maximum(0.0, (p - self.nu) / (1.0 - 2.0 * self.nu))


def _abs_output_density(r, sigma):
    """Density of |y| for y = +-1 + N(0, sigma^2)."""
    return (norm.pdf((r - 1.0) / sigma) + norm.pdf((r + 1.0) / sigma)) / sigma


def _awgn_allocation_integral(nu, sigma, quad_tol):
    """Integral of f(r) min(nu, p(2r/sigma^2)) dr over r >= 0."""
    if nu <= 0.0:
        return 0.0
    upper = 1.0 + 10.0 * sigma
    # p(2r/sigma^2) crosses nu at r_nu; splitting there removes the kink.
    r_nu = 0.5 * sigma * sigma * math.log((1.0 - nu) / nu)

    def integrand(r):
        return _abs_output_density(r, sigma) * min(nu, float(expit(-2.0 * r / (sigma * sigma))))

    points = [r_nu] if 0.0 < r_nu < upper else None
    value, _ = quad(integrand, 0.0, upper, points=points, epsabs=quad_tol, limit=200)
    return value


def _awgn_rate_integral(nu, sigma, quad_tol):
    """Integral of f(r) [H(p(l)) - H(min(nu, p(l)))] dr, in bits."""
    upper = 1.0 + 10.0 * sigma

    def integrand(r):
        p = float(expit(-2.0 * r / (sigma * sigma)))
        return _abs_output_density(r, sigma) * max(0.0, binary_entropy(p) - binary_entropy(min(nu, p)))

    value, _ = quad(integrand, 0.0, upper, epsabs=quad_tol, limit=200)
    return value


def awgn_asymptotic_level(sigma: float, D: float, *, quad_tol: float = 1e-10,
                          table_points: int = 257) -> AwgnFlipRule:
    """Long-block water level for the BI-AWGN channel.

    Solves  integral f(r) min(nu, p(2r/sigma^2)) dr = D  by bisection with
    adaptive quadrature (absolute tolerance ``quad_tol``), where f is the
    density of the absolute channel output.
    """
    if sigma <= 0.0:
        raise ValidationError("sigma must be positive")
    if not 0.0 < D < 0.5:
        raise ValidationError("D must lie in (0, 1/2)")

    hd_error = float(norm.sf(1.0 / sigma))  # integral of f(r) p(2r/sigma^2) dr
    if D >= hd_error:
        llr_grid = np.linspace(0.0, 40.0, table_points)
        table = np.column_stack([llr_grid, np.zeros_like(llr_grid)])
        return AwgnFlipRule(sigma=float(sigma), D=float(D), nu=0.5, threshold_llr=0.0,
                            rate=0.0, no_flip=True, q_fn_table=table)

    lo, hi = 0.0, 0.5
    nu = 0.25
    converged = False
    for _ in range(BISECT_MAX_ITER):
        nu = 0.5 * (lo + hi)
        g = _awgn_allocation_integral(nu, sigma, quad_tol) - D
        if abs(g) < 10.0 * quad_tol or hi - lo < 1e-14:
            converged = True
            break
        if g < 0.0:
            lo = nu
        else:
            hi = nu
    if not converged:
        raise NumericalError("water-level bisection did not converge")

    threshold = math.log((1.0 - nu) / nu)
    rate = _awgn_rate_integral(nu, sigma, quad_tol)
    llr_grid = np.linspace(0.0, max(2.0 * threshold, 10.0), table_points)
    q_grid = np.maximum(0.0, (expit(-llr_grid) - nu) / (1.0 - 2.0 * nu))
    table = np.column_stack([llr_grid, q_grid])
    return AwgnFlipRule(sigma=float(sigma), D=float(D), nu=float(nu), threshold_llr=threshold,
                        rate=rate, no_flip=False, q_fn_table=table)
