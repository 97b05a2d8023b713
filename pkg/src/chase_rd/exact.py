"""Exact list-failure probabilities for stochastic flip patterns.

Condition on a block whose class-j sub-block holds N_{e,j} hard-decision
errors and N_{c,j} = N_j - N_{e,j} correct positions.  A Ber(q_j) flip
pattern leaves

    n_{e,j} ~ Binomial(N_{e,j}, 1 - q_j)   surviving errors, plus
    n_{c,j} ~ Binomial(N_{c,j}, q_j)       freshly created ones,

all independent, and a bounded-distance attempt fails when the residual
total exceeds t.  L independent patterns all fail with probability
[Pr(single failure)]^L.  Marginalising the per-class error counts over the
channel gives the list-miss probability for a composition:

    Pr(miss | N) = sum over error splits with N_e > t of
                   prod_k C(N_k, N_{e,k}) p_k^{N_{e,k}} (1-p_k)^{N_{c,k}}
                   * [Pr(single failure | split)]^L.

Splits with N_e <= t contribute zero: the formula conditions on the
beyond-radius regime (a plain attempt with no flips already decodes
there).  The single-trial probability is evaluated by per-class binomial
convolution truncated at t+1 (identical value to the direct sum over flip
patterns at O(M N t) cost instead of exponential), and the truncated sum
over splits is vectorized class by class.

``optimize_flip`` searches the flip probabilities minimizing the L-trial
failure by coordinate descent with golden-section line searches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, xlog1py, xlogy

from .errors import BudgetError, ValidationError
from .waterfill import WaterFillInput, solve_waterfill, waterfill

TERM_GUARD = 10 ** 8
BRUTE_FORCE_MAX_BITS = 22

GOLDEN_RATIO = (np.sqrt(5.0) - 1.0) / 2.0


def binom_pmf(k, n, p):
    """Binomial pmf through log-gamma, stable for large n and tiny p.

    Broadcasts over ``k`` and ``n``; out-of-support k gives 0 and the p = 0
    and p = 1 edges degenerate correctly.
    """
    k = np.asarray(k, dtype=np.float64)
    n = np.asarray(n, dtype=np.float64)
    support = (k >= 0) & (k <= n)
    ks = np.where(support, k, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_pmf = (gammaln(n + 1.0) - gammaln(ks + 1.0) - gammaln(n - ks + 1.0)
                   + xlogy(ks, p) + xlog1py(n - ks, -p))
    return np.where(support, np.exp(log_pmf), 0.0)


@dataclass(frozen=True)
class ErrorComposition:
    """Per-class error/correct counts (N_{e,j}, N_{c,j}) of a realized block."""

    n_e: tuple
    n_c: tuple

    def __post_init__(self):
        object.__setattr__(self, "n_e", tuple(int(x) for x in self.n_e))
        object.__setattr__(self, "n_c", tuple(int(x) for x in self.n_c))
        if len(self.n_e) != len(self.n_c) or len(self.n_e) == 0:
            raise ValidationError("n_e and n_c must be non-empty and equal length")
        if any(x < 0 for x in self.n_e + self.n_c):
            raise ValidationError("counts must be nonnegative")

    @property
    def total(self) -> int:
        return sum(self.n_e) + sum(self.n_c)


def _check_q(q_tilde, m: int) -> np.ndarray:
    q = np.asarray(q_tilde, dtype=np.float64)
    if q.shape != (m,):
        raise ValidationError(f"q_tilde must have length {m}")
    if np.any(q < 0.0) or np.any(q > 1.0):
        raise ValidationError("flip probabilities must lie in [0, 1]")
    return q


def _class_residual_pmf(n_err: int, n_cor: int, q: float, t: int) -> np.ndarray:
    """pmf over 0..t of survivors-plus-fresh errors for one class."""
    k = np.arange(t + 1)
    keep = binom_pmf(k, n_err, 1.0 - q)
    fresh = binom_pmf(k, n_cor, q)
    out = np.zeros(t + 1)
    for x in range(t + 1):
        out[x:] += keep[x] * fresh[: t + 1 - x]
    return out


def residual_distribution(comp: ErrorComposition, q_tilde, t: int) -> np.ndarray:
    """Distribution of the residual error count: masses for 0..t plus one '>t' lump."""
    if t < 0:
        raise ValidationError("t must be nonnegative")
    q = _check_q(q_tilde, len(comp.n_e))
    dist = np.zeros(t + 1)
    dist[0] = 1.0
    for n_e, n_c, qj in zip(comp.n_e, comp.n_c, q):
        pmf = _class_residual_pmf(n_e, n_c, qj, t)
        new = np.zeros(t + 1)
        for x in range(t + 1):
            new[x:] += dist[x] * pmf[: t + 1 - x]
        dist = new
    lump = max(0.0, 1.0 - dist.sum())
    return np.concatenate([dist, [lump]])


def single_trial_failure(comp: ErrorComposition, q_tilde, t: int) -> float:
    """Probability one flip pattern leaves more than t residual errors."""
    return float(residual_distribution(comp, q_tilde, t)[-1])


def brute_force_single_trial(comp: ErrorComposition, q_tilde, t: int) -> float:
    """Exhaustive sum over all flip patterns; validation oracle for small blocks.

    Enumerates every one of the 2^N patterns, weighting each by its
    product of Bernoulli probabilities and testing the residual weight.
    """
    n_bits = comp.total
    if n_bits > BRUTE_FORCE_MAX_BITS:
        raise BudgetError(f"brute force limited to {BRUTE_FORCE_MAX_BITS} positions")
    q = _check_q(q_tilde, len(comp.n_e))

    # Position layout: class blocks in order, errors before correct bits.
    groups = []  # (mask, size, q_j, is_error)
    offset = 0
    for n_e, n_c, qj in zip(comp.n_e, comp.n_c, q):
        for size, is_err in ((n_e, True), (n_c, False)):
            if size:
                mask = ((1 << size) - 1) << offset
                groups.append((mask, size, qj, is_err))
                offset += size

    idx = np.arange(1 << n_bits, dtype=np.uint64)
    prob = np.ones(idx.size)
    residual = np.zeros(idx.size, dtype=np.int64)
    for mask, size, qj, is_err in groups:
        flips = np.bitwise_count(idx & np.uint64(mask)).astype(np.int64)
        prob *= np.power(qj, flips) * np.power(1.0 - qj, size - flips)
        residual += (size - flips) if is_err else flips
    return float(prob[residual > t].sum())


def _truncated_conv_rows(keep: np.ndarray, fresh: np.ndarray) -> np.ndarray:
    """Row-wise truncated convolution: out[a, k] = sum_x keep[a, x] fresh[a, k-x]."""
    n_rows, width = keep.shape
    padded = np.zeros((n_rows, 2 * width - 1))
    padded[:, width - 1:] = fresh
    s0, s1 = padded.strides
    shifted = np.lib.stride_tricks.as_strided(
        padded[:, width - 1:], shape=(n_rows, width, width), strides=(s0, -s1, s1))
    # shifted[a, x, k] = fresh[a, k - x], zero where k < x
    return np.einsum("ax,axk->ak", keep, shifted)


def _class_residual_pmf_table(n_total: int, t: int, q: float) -> np.ndarray:
    """Rows: residual pmf over 0..t for every split a = N_e of one class."""
    a = np.arange(n_total + 1)[:, None]
    k = np.arange(t + 1)[None, :]
    keep = binom_pmf(k, a, 1.0 - q)
    fresh = binom_pmf(k, n_total - a, q)
    return _truncated_conv_rows(keep, fresh)


class _ClassTables:
    """Residual tables for one class with the q-independent parts hoisted.

    The residual of a split a = N_e is Binomial(a, 1-q) + Binomial(N-a, q);
    only the log(q) / log(1-q) factors of the two pmfs change with q, so
    the log binomial coefficients are precomputed and a table build is two
    fused exponentials plus one truncated convolution.
    """

    def __init__(self, n_total: int, t: int):
        a = np.arange(n_total + 1, dtype=np.float64)[:, None]
        k = np.arange(t + 1, dtype=np.float64)[None, :]
        b = n_total - a
        with np.errstate(invalid="ignore"):
            self._keep_logc = gammaln(a + 1.0) - gammaln(k + 1.0) - gammaln(a - k + 1.0)
            self._fresh_logc = gammaln(b + 1.0) - gammaln(k + 1.0) - gammaln(b - k + 1.0)
        self._keep_mask = k <= a
        self._fresh_mask = k <= b
        self._keep_pow_1mq = np.broadcast_to(k, self._keep_logc.shape)
        self._keep_pow_q = a - k
        self._fresh_pow_q = np.broadcast_to(k, self._fresh_logc.shape)
        self._fresh_pow_1mq = b - k

    @staticmethod
    def _pow_term(power, log_x):
        # power * log_x with the 0 * (-inf) corner resolved to 0
        if np.isneginf(log_x):
            return np.where(power == 0.0, 0.0, -np.inf)
        return power * log_x

    def build(self, q: float) -> np.ndarray:
        log_q = np.log(q) if q > 0.0 else -np.inf
        log_1mq = np.log1p(-q) if q < 1.0 else -np.inf
        with np.errstate(invalid="ignore"):
            keep = np.where(
                self._keep_mask,
                np.exp(self._keep_logc + self._pow_term(self._keep_pow_1mq, log_1mq)
                       + self._pow_term(self._keep_pow_q, log_q)),
                0.0)
            fresh = np.where(
                self._fresh_mask,
                np.exp(self._fresh_logc + self._pow_term(self._fresh_pow_q, log_q)
                       + self._pow_term(self._fresh_pow_1mq, log_1mq)),
                0.0)
        return _truncated_conv_rows(keep, fresh)


class ListFailureEvaluator:
    """Repeated evaluation of the L-trial list-miss probability at fixed
    composition, channel and radius.

    The channel weights over error splits do not depend on the flip
    probabilities, so they are built once; per-class residual tables are
    memoized on the class's flip probability, which makes coordinate-wise
    searches cheap (only the active class's table is rebuilt).
    """

    _CACHE_PER_CLASS = 8

    def __init__(self, composition, p, t: int, L):
        comp = np.asarray(composition, dtype=np.int64)
        m = comp.size
        if m == 0 or np.any(comp < 0) or comp.sum() == 0:
            raise ValidationError("composition must be nonnegative with positive total")
        pv = np.asarray(p, dtype=np.float64)
        if pv.shape != (m,) or np.any(pv < 0.0) or np.any(pv > 1.0):
            raise ValidationError("p must be per-class probabilities")
        if t < 0:
            raise ValidationError("t must be nonnegative")
        if L < 1:
            raise ValidationError("L must be >= 1")
        if float(np.prod(comp + 1.0)) > TERM_GUARD:
            raise BudgetError("error-split enumeration exceeds the term guard")

        self.composition = comp
        self.p = pv
        self.t = int(t)
        self.L = float(L)
        self.trivial = t >= comp.sum()
        self._builders = [_ClassTables(int(n), self.t) for n in comp] if not self.trivial else []
        self._tables = [{} for _ in range(m)]

        if not self.trivial:
            weight = np.ones(())
            total = np.zeros((), dtype=np.int64)
            for n, pj in zip(comp, pv):
                a = np.arange(n + 1)
                weight = weight[..., None] * binom_pmf(a, n, pj)
                total = total[..., None] + a
            self._masked_weight = weight * (total > self.t)

    def _table(self, j: int, qj: float) -> np.ndarray:
        cache = self._tables[j]
        table = cache.get(qj)
        if table is None:
            table = self._builders[j].build(qj)
            if len(cache) >= self._CACHE_PER_CLASS:
                cache.pop(next(iter(cache)))
            cache[qj] = table
        return table

    def value(self, q_tilde) -> float:
        q = _check_q(q_tilde, self.composition.size)
        if self.trivial:
            return 0.0
        t = self.t
        m = self.composition.size
        # Accumulate the truncated residual-count distribution class by
        # class, keeping one axis per class for the split coordinate
        # N_{e,j}; the last class is contracted through its cumulative.
        if m == 1:
            acc = np.zeros(t + 1)
            acc[0] = 1.0
        else:
            acc = self._table(0, float(q[0]))
        for j in range(1, m - 1):
            table = self._table(j, float(q[j]))
            new = np.zeros(acc.shape[:-1] + (table.shape[0], t + 1))
            for k in range(t + 1):
                new[..., :, k:] += acc[..., None, : t + 1 - k] * table[:, k][:, None]
            acc = new
        last = self._table(m - 1, float(q[-1]))
        cum_rev = np.cumsum(last, axis=1)[:, ::-1]  # [a, k] = Pr(class <= t - k)
        success = np.tensordot(acc, cum_rev, axes=([acc.ndim - 1], [1]))
        success = np.clip(success, 0.0, 1.0)
        with np.errstate(divide="ignore"):
            fail_pow = np.exp(self.L * np.log1p(-success))
        return float(np.sum(self._masked_weight * fail_pow))


def list_failure_given_composition(composition, p, q_tilde, t: int, L) -> float:
    """List-miss probability for L patterns given a class composition.

    ``L`` may be any real >= 1; huge codebook sizes enter through
    exp(L log(1 - success)) without forming 2^(N rate) explicitly.
    """
    return ListFailureEvaluator(composition, p, t, L).value(q_tilde)


def _golden_min(f, lo: float, hi: float, *, xtol: float = 1e-10):
    """Golden-section minimum of f on [lo, hi]; endpoints are also checked."""
    x1 = hi - GOLDEN_RATIO * (hi - lo)
    x2 = lo + GOLDEN_RATIO * (hi - lo)
    f1, f2 = f(x1), f(x2)
    f_lo, f_hi = f(lo), f(hi)
    lo0, hi0 = lo, hi
    while hi - lo > xtol:
        if f2 > f1:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - GOLDEN_RATIO * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + GOLDEN_RATIO * (hi - lo)
            f2 = f(x2)
    x_mid = x1 if f1 <= f2 else x2
    f_mid = min(f1, f2)
    best = min(((f_lo, lo0), (f_hi, hi0), (f_mid, x_mid)), key=lambda v: v[0])
    return best[1], best[0]


def optimize_flip(composition, p, t: int, L, *, max_sweeps: int = 50,
                  ftol: float = 1e-12, extra_starts=()):
    """Flip probabilities minimizing the L-trial list-miss probability.

    Coordinate descent with golden-section line searches on [0, 1/2] per
    coordinate, multi-started from the water-filling solution, a uniform
    0.25 vector and the all-zero vector.  Nearly interchangeable classes
    (p_j close together) give the objective a diagonal valley on which
    axis-parallel moves can stall at a coordinate-wise optimum, so each
    descent finishes with a simplex polish; the result is kept only when
    it improves.  Ties between equal-objective candidates go to the
    lexicographically smallest vector.
    """
    comp = np.asarray(composition, dtype=np.int64)
    m = comp.size
    pv = np.asarray(p, dtype=np.float64)

    if t >= comp.sum():
        return np.zeros(m), 0.0

    evaluator = ListFailureEvaluator(comp, pv, t, L)

    def objective(q):
        return evaluator.value(np.clip(q, 0.0, 0.5))

    rdf = solve_waterfill(WaterFillInput(tuple(comp), tuple(pv), t)).q
    starts = [rdf, np.full(m, 0.25), np.zeros(m)]
    starts.extend(np.asarray(s, dtype=np.float64) for s in extra_starts)
    seen = set()
    starts = [s for s in starts
              if tuple(np.round(s, 15)) not in seen and not seen.add(tuple(np.round(s, 15)))]

    best_q, best_val = None, np.inf
    for q0 in starts:
        q = np.clip(np.asarray(q0, dtype=np.float64), 0.0, 0.5)
        val = objective(q)
        for _ in range(max_sweeps):
            prev = val
            for j in range(m):
                def line(x, j=j):
                    trial = q.copy()
                    trial[j] = x
                    return objective(trial)

                xj, vj = _golden_min(line, 0.0, 0.5)
                if vj < val:
                    q[j] = xj
                    val = vj
            if prev - val < ftol:
                break
        if val < best_val or (val == best_val and best_q is not None
                              and tuple(q) < tuple(best_q)):
            best_q, best_val = q.copy(), val
    best_q, best_val = _simplex_polish(objective, best_q, best_val)
    return best_q, float(best_val)


def _simplex_polish(objective, q, val):
    """Nelder-Mead refinement of a coordinate-descent result (box-clipped)."""
    from scipy.optimize import minimize

    res = minimize(objective, q, method="Nelder-Mead",
                   options=dict(xatol=1e-9, fatol=1e-14, maxiter=500, maxfev=800))
    cand = np.clip(res.x, 0.0, 0.5)
    cand_val = objective(cand)
    if cand_val < val:
        return cand, cand_val
    return q, val


@dataclass(frozen=True)
class GridScenario:
    """Fixed-shape family of blocks evaluated over a grid of lengths N.

    Class sizes are fractions of N (last class absorbs rounding), the
    radius is t = round(t_over_n * N), and the reference flip rule is the
    water-filling solution at distortion ``t_over_n`` (independent of N).
    ``list_rule`` picks how L = 2^(N rate) is materialized: "exact" keeps
    the real value, "ceil" rounds up to an integer.
    """

    p: tuple
    fractions: tuple
    t_over_n: float
    n_grid: tuple
    list_rule: str = "exact"

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(x) for x in self.p))
        object.__setattr__(self, "fractions", tuple(float(x) for x in self.fractions))
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        if len(self.p) != len(self.fractions) or not self.p:
            raise ValidationError("p and fractions must be non-empty and equal length")
        if abs(sum(self.fractions) - 1.0) > 1e-9 or any(f < 0 for f in self.fractions):
            raise ValidationError("fractions must be nonnegative and sum to 1")
        if not 0.0 < self.t_over_n < 0.5:
            raise ValidationError("t_over_n must lie in (0, 1/2)")
        if not self.n_grid or any(n < 1 for n in self.n_grid):
            raise ValidationError("n_grid must hold positive lengths")
        if self.list_rule not in ("exact", "ceil"):
            raise ValidationError("list_rule must be 'exact' or 'ceil'")

    def composition(self, N: int) -> np.ndarray:
        sizes = [int(round(f * N)) for f in self.fractions[:-1]]
        sizes.append(N - sum(sizes))
        if sizes[-1] < 0:
            raise ValidationError("fractions round to a negative class size")
        return np.asarray(sizes, dtype=np.int64)

    def radius(self, N: int) -> int:
        return int(round(self.t_over_n * N))


def rdf_vs_optimal_report(scenario: GridScenario) -> list:
    """Water-filling flip rule vs. the optimal one across a grid of block lengths.

    One row per (N, class) with the reference and optimized flip
    probabilities, both L-trial failure probabilities and log2 L.
    """
    _, _, q_ref, rate = waterfill(scenario.fractions, scenario.p, scenario.t_over_n)
    rows = []
    for N in scenario.n_grid:
        comp = scenario.composition(N)
        t = scenario.radius(N)
        log2_l = N * rate
        L = 2.0 ** log2_l if scenario.list_rule == "exact" else max(1, int(np.ceil(2.0 ** log2_l)))
        pe_ref = list_failure_given_composition(comp, scenario.p, q_ref, t, L)
        q_opt, pe_opt = optimize_flip(comp, scenario.p, t, L, extra_starts=[q_ref])
        for j in range(len(scenario.p)):
            rows.append({
                "N": N,
                "t": t,
                "class": j + 1,
                "q_rdf": float(q_ref[j]),
                "q_opt": float(q_opt[j]),
                "pe_rdf": pe_ref,
                "pe_opt": pe_opt,
                "L_log2": log2_l,
            })
    return rows
