"""Stochastic Chase decoding and Monte Carlo estimation of the list miss.

A batch of L random flip patterns perturbs the hard-decision word, each
perturbed word goes through a bounded-distance attempt, and the distinct
successful codewords form the candidate list from which the highest
per-index BSC likelihood wins (ties to the earliest pattern).  The miss
event is the transmitted codeword not appearing in the list.

Reproducibility: trial streams derive from the master seed.  Scenarios on
the vectorized fast path (genie decoder, discrete channel, small L*N) use
one stream per fixed-size batch of trials; everything else derives one
stream per trial.  Both layouts are scheduling-independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import bch as bch_mod
from .channel import ReliabilityProfile, log_likelihood, sample_state, state_from_composition, stream
from .errors import BudgetError, ValidationError
from .waterfill import (WaterFillInput, awgn_asymptotic_level, awgn_waterfill, binary_entropy,
                        solve_waterfill)

DEFAULT_L_BUDGET = 2 ** 20
DEFAULT_BATCH_SIZE = 4096
_FAST_PATH_ELEMS = 2 ** 26


@dataclass(frozen=True)
class PatternBatch:
    """L test patterns of length N plus the per-index rule that drew them."""

    patterns: np.ndarray
    q_per_index: np.ndarray

    @property
    def L(self) -> int:
        return self.patterns.shape[0]


@dataclass
class ChaseResult:
    candidates: list          # (codeword, score, first_pattern_index)
    chosen: np.ndarray | None
    list_miss: bool | None = None
    decode_error: bool | None = None


def class_flip_probs(state, q_per_class) -> np.ndarray:
    """Expand a per-class flip rule to per-index probabilities."""
    s = np.asarray(state, dtype=np.int64)
    q = np.asarray(q_per_class, dtype=np.float64)
    if s.size and (s.min() < 1 or s.max() > q.size):
        raise ValidationError("state entries must index the rule")
    return q[s - 1]


def gen_patterns(flip_probs, L: int, rng: np.random.Generator,
                 include_zero: bool = False) -> PatternBatch:
    """Draw L independent patterns; entry i flips with probability flip_probs[i].

    With ``include_zero`` the first pattern is the all-zero one (the plain
    attempt) and only L - 1 patterns are random.
    """
    q = np.asarray(flip_probs, dtype=np.float64)
    if np.any(q < 0.0) or np.any(q > 1.0):
        raise ValidationError("flip probabilities must lie in [0, 1]")
    if L < 1:
        raise ValidationError("L must be >= 1")
    n_random = L - 1 if include_zero else L
    pats = (rng.random((n_random, q.size)) < q).astype(np.uint8)
    if include_zero:
        pats = np.concatenate([np.zeros((1, q.size), dtype=np.uint8), pats])
    return PatternBatch(patterns=pats, q_per_index=q)


def chase_decode(hd, batch: PatternBatch, decoder, per_index_p,
                 transmitted=None) -> ChaseResult:
    """Run every attempt, dedupe codewords, pick the likelihood winner.

    ``decoder`` maps a word to a codeword or None.  When ``transmitted``
    is given the miss/error flags are filled in (no candidates counts as
    both).
    """
    hd = np.asarray(hd, dtype=np.uint8)
    seen = {}
    order = []
    for idx, pattern in enumerate(batch.patterns):
        cw = decoder(hd ^ pattern)
        if cw is None:
            continue
        key = cw.tobytes()
        if key not in seen:
            seen[key] = (np.asarray(cw, dtype=np.uint8), idx)
            order.append(key)

    candidates = []
    for key in order:
        cw, idx = seen[key]
        candidates.append((cw, log_likelihood(cw, hd, per_index_p), idx))

    chosen = None
    if candidates:
        chosen = max(candidates, key=lambda c: (c[1], -c[2]))[0]

    result = ChaseResult(candidates=candidates, chosen=chosen)
    if transmitted is not None:
        ref = np.asarray(transmitted, dtype=np.uint8)
        result.list_miss = ref.tobytes() not in seen
        result.decode_error = chosen is None or not np.array_equal(chosen, ref)
    return result


def conventional_chase_size(N: int, p: float, t: int) -> float:
    """log2 list size N H(p - t/N) of a deterministic sphere of flip patterns."""
    excess = p - t / N
    if excess <= 0.0:
        return 0.0
    if excess > 0.5:
        raise ValidationError("p - t/N must not exceed 1/2")
    return N * binary_entropy(excess)


def rdf_chase_size(N: int, p: float, t: int) -> float:
    """log2 list size N [H(p) - H(t/N)] of the random covering codebook."""
    return N * max(0.0, binary_entropy(p) - binary_entropy(min(t / N, 0.5)))


@dataclass(frozen=True)
class SimulationScenario:
    """Full description of one Monte Carlo experiment.

    Discrete channels take per-class crossovers ``p`` with either a fixed
    ``composition`` (conditioning mode) or ``priors`` (sampling mode); the
    AWGN channel takes ``sigma`` and builds its rule per block by default.
    Unset flip rule / list size default to the water-filling solution.
    """

    channel: str                  # "discrete" | "awgn"
    decoder: str                  # "genie" | "bch"
    t: int
    N: int | None = None
    p: tuple | None = None
    composition: tuple | None = None
    priors: tuple | None = None
    sigma: float | None = None
    q_override: tuple | None = None
    L_override: int | None = None
    include_zero_pattern: bool = False
    awgn_rule: str = "block"      # "block" | "asymptotic"
    m: int | None = None          # field degree for the real decoder
    batch_size: int = DEFAULT_BATCH_SIZE
    l_budget: int = DEFAULT_L_BUDGET

    def __post_init__(self):
        if self.channel not in ("discrete", "awgn"):
            raise ValidationError("channel must be 'discrete' or 'awgn'")
        if self.decoder not in ("genie", "bch"):
            raise ValidationError("decoder must be 'genie' or 'bch'")
        if self.t < 0:
            raise ValidationError("t must be nonnegative")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be positive")
        if self.channel == "discrete":
            if self.p is None:
                raise ValidationError("discrete channel needs p")
            if (self.composition is None) == (self.priors is None):
                raise ValidationError("give exactly one of composition or priors")
            if self.composition is not None:
                if len(self.composition) != len(self.p):
                    raise ValidationError("composition and p must have equal length")
                n = int(sum(self.composition))
                if self.N is not None and self.N != n:
                    raise ValidationError("N must equal the composition total")
                object.__setattr__(self, "N", n)
            else:
                if len(self.priors) != len(self.p):
                    raise ValidationError("priors and p must have equal length")
                if self.N is None:
                    raise ValidationError("priors mode needs N")
        else:
            if self.sigma is None or self.sigma <= 0:
                raise ValidationError("awgn channel needs sigma > 0")
            if self.N is None:
                raise ValidationError("awgn channel needs N")
            if self.awgn_rule not in ("block", "asymptotic"):
                raise ValidationError("awgn_rule must be 'block' or 'asymptotic'")
        if self.decoder == "bch":
            if self.m is None:
                raise ValidationError("real decoder needs the field degree m")
            if self.N != (1 << self.m) - 1:
                raise ValidationError("N must equal 2^m - 1 for the real decoder")
        if self.N is not None and self.t > self.N:
            raise ValidationError("t must not exceed N")


@dataclass(frozen=True)
class MonteCarloReport:
    trials: int
    miss_count: int
    decode_error_count: int
    miss_rate: float
    miss_ci: tuple
    decode_error_rate: float
    decode_error_ci: tuple
    seed: int
    list_size: int
    config: dict


def _ci95(count: int, n: int) -> tuple:
    rate = count / n
    half = 1.96 * np.sqrt(rate * (1.0 - rate) / n)
    return (max(0.0, rate - half), min(1.0, rate + half))


def _resolve_rule(scenario: SimulationScenario):
    """Per-class flip rule and list size implied by the scenario."""
    if scenario.channel == "discrete":
        if scenario.composition is not None:
            comp = tuple(scenario.composition)
        else:
            expected = [pr * scenario.N for pr in scenario.priors]
            comp = tuple(max(1, int(round(e))) for e in expected)
        sol = solve_waterfill(WaterFillInput(comp, scenario.p, scenario.t))
        q = sol.q if scenario.q_override is None else np.asarray(scenario.q_override)
        if scenario.L_override is not None:
            return q, int(scenario.L_override), None
        if sol.saturated or sol.list_size > scenario.l_budget:
            raise BudgetError(
                f"list size 2^{sol.log2_list_size:.2f} exceeds the budget {scenario.l_budget}")
        return q, sol.list_size, None

    rule = awgn_asymptotic_level(scenario.sigma, scenario.t / scenario.N)
    if scenario.L_override is not None:
        return None, int(scenario.L_override), rule
    log2_l = scenario.N * rule.rate
    L = max(1, int(np.ceil(2.0 ** min(log2_l, 63.0))))
    if log2_l > 63.0 or L > scenario.l_budget:
        raise BudgetError(f"list size 2^{log2_l:.2f} exceeds the budget {scenario.l_budget}")
    return None, L, rule


def _fast_path_applies(scenario: SimulationScenario, L: int) -> bool:
    return (scenario.channel == "discrete" and scenario.decoder == "genie"
            and not scenario.include_zero_pattern
            and scenario.batch_size * L * scenario.N <= _FAST_PATH_ELEMS)


def run_monte_carlo(scenario: SimulationScenario, trials: int, seed: int) -> MonteCarloReport:
    """Estimate the list-miss and decode-error rates over independent trials."""
    if trials < 1:
        raise ValidationError("trials must be positive")
    q_class, L, awgn_rule = _resolve_rule(scenario)
    if L > scenario.l_budget:
        raise BudgetError(f"list size {L} exceeds the budget {scenario.l_budget}")

    if _fast_path_applies(scenario, L):
        miss = _run_discrete_genie_batched(scenario, trials, seed, q_class, L)
        errors = miss  # the genie only ever returns the transmitted word
    else:
        miss, errors = _run_trial_loop(scenario, trials, seed, q_class, L, awgn_rule)

    return MonteCarloReport(
        trials=trials,
        miss_count=miss,
        decode_error_count=errors,
        miss_rate=miss / trials,
        miss_ci=_ci95(miss, trials),
        decode_error_rate=errors / trials,
        decode_error_ci=_ci95(errors, trials),
        seed=seed,
        list_size=L,
        config=_echo_config(scenario, trials, L),
    )


def _echo_config(scenario: SimulationScenario, trials: int, L: int) -> dict:
    cfg = {
        "channel": scenario.channel,
        "decoder": scenario.decoder,
        "N": scenario.N,
        "t": scenario.t,
        "trials": trials,
        "list_size": L,
        "include_zero_pattern": scenario.include_zero_pattern,
        "batch_size": scenario.batch_size,
    }
    if scenario.channel == "discrete":
        cfg["p"] = list(scenario.p)
        if scenario.composition is not None:
            cfg["composition"] = list(scenario.composition)
        else:
            cfg["priors"] = list(scenario.priors)
        if scenario.q_override is not None:
            cfg["q_override"] = list(scenario.q_override)
    else:
        cfg["sigma"] = scenario.sigma
        cfg["awgn_rule"] = scenario.awgn_rule
    if scenario.m is not None:
        cfg["m"] = scenario.m
    return cfg


def _run_discrete_genie_batched(scenario, trials, seed, q_class, L) -> int:
    """Vectorized miss count: genie success iff some pattern is within t of the error."""
    N, t = scenario.N, scenario.t
    p = np.asarray(scenario.p, dtype=np.float64)
    q = np.asarray(q_class, dtype=np.float64)
    miss = 0
    fixed_state = None
    if scenario.composition is not None:
        fixed_state = state_from_composition(scenario.composition)
    prior_cdf = None if scenario.priors is None else np.cumsum(scenario.priors)

    n_batches = (trials + scenario.batch_size - 1) // scenario.batch_size
    for b in range(n_batches):
        size = min(scenario.batch_size, trials - b * scenario.batch_size)
        rng = stream(seed, 0, b)
        if fixed_state is not None:
            states = np.broadcast_to(fixed_state, (size, N))
        else:
            states = np.searchsorted(prior_cdf, rng.random((size, N)), side="right") + 1
            states = np.minimum(states, len(scenario.p))
        errors = rng.random((size, N)) < p[states - 1]
        flips = rng.random((size, L, N)) < q[states - 1][:, None, :]
        residual = (flips ^ errors[:, None, :]).sum(axis=2)
        miss += int(np.count_nonzero((residual > t).all(axis=1)))
    return miss


def _run_trial_loop(scenario, trials, seed, q_class, L, awgn_rule):
    """General per-trial path: real decoder, AWGN channel, or large batches."""
    N, t = scenario.N, scenario.t
    code = None
    if scenario.decoder == "bch":
        code = bch_mod.bch_generate(scenario.m, t)
        if code.N != N:
            raise ValidationError("code length does not match N")
    profile = None
    fixed_state = None
    if scenario.channel == "discrete":
        prior = (np.asarray(scenario.priors, dtype=np.float64) if scenario.priors is not None
                 else np.asarray(scenario.composition, np.float64) / sum(scenario.composition))
        profile = ReliabilityProfile(scenario.p, tuple(prior / prior.sum()))
        if scenario.composition is not None:
            fixed_state = state_from_composition(scenario.composition)

    miss_count = 0
    error_count = 0
    rule_cache = {}
    for trial in range(trials):
        rng = stream(seed, 1, trial)

        if code is not None:
            message = rng.integers(0, 2, size=code.k).astype(np.uint8)
            cw = bch_mod.encode(code, message)
        else:
            cw = np.zeros(N, dtype=np.uint8)

        if scenario.channel == "discrete":
            state = fixed_state if fixed_state is not None else sample_state(profile, N, rng)
            error = (rng.random(N) < np.asarray(scenario.p)[state - 1]).astype(np.uint8)
            hd = cw ^ error
            if scenario.q_override is not None:
                q_idx = class_flip_probs(state, scenario.q_override)
            else:
                key = tuple(np.bincount(state - 1, minlength=len(scenario.p)))
                if key not in rule_cache:
                    rule_cache[key] = solve_waterfill(WaterFillInput(key, scenario.p, t)).q
                q_idx = class_flip_probs(state, rule_cache[key])
            per_index_p = np.asarray(scenario.p, dtype=np.float64)[state - 1]
        else:
            from .channel import awgn_observe, awgn_transmit
            y = awgn_transmit(cw, scenario.sigma, rng)
            obs = awgn_observe(y, scenario.sigma)
            hd = obs.hd
            if scenario.awgn_rule == "block":
                _, _, q_idx = awgn_waterfill(obs.p_of_llr, t)
            else:
                q_idx = awgn_rule.q_of_llr(obs.llr_mag)
            per_index_p = obs.p_of_llr

        batch = gen_patterns(q_idx, L, rng, include_zero=scenario.include_zero_pattern)
        decoder = (bch_mod.make_bdd_decoder(code) if code is not None
                   else bch_mod.make_genie_decoder(cw, t))
        result = chase_decode(hd, batch, decoder, per_index_p, transmitted=cw)
        miss_count += int(result.list_miss)
        error_count += int(result.decode_error)
    return miss_count, error_count
