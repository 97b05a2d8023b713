"""State-dependent BSC view of binary memoryless symmetric channels.

A BMS channel is modelled as a BSC whose crossover probability is picked
per index by an i.i.d. receiver-known state: given state j, the hard
decision is wrong with probability p_j.  The BI-AWGN channel fits the same
mould with a continuous state, the absolute LLR, and per-index crossover
p(l) = 1 / (1 + e^l).

Conventions used throughout the package:
  * state vectors are integer arrays with entries in 1..M,
  * composition vectors are length-M integer arrays of class counts,
  * error vectors / codewords are uint8 arrays of bits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ValidationError

# Per-index crossover clamp applied before taking logs: p(l) underflows to
# 0 for large LLR magnitudes and log(0) would poison likelihoods.
P_FLOOR = 1e-12
P_CEIL = 0.5


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent random stream derived from a 64-bit seed and an index path.

    Every sampling routine takes an explicit generator, so concurrent
    callers stay reproducible by deriving one stream per unit of work.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


@dataclass(frozen=True)
class ReliabilityProfile:
    """M reliability classes: per-class crossover p_j and state priors."""

    p: tuple
    prior: tuple

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(x) for x in self.p))
        object.__setattr__(self, "prior", tuple(float(x) for x in self.prior))
        if len(self.p) == 0 or len(self.p) != len(self.prior):
            raise ValidationError("p and prior must be non-empty and equal length")
        if any(x < 0.0 or x > 0.5 for x in self.p):
            raise ValidationError("crossover probabilities must lie in [0, 1/2]")
        if any(w < 0.0 for w in self.prior):
            raise ValidationError("priors must be nonnegative")
        if abs(sum(self.prior) - 1.0) > 1e-12:
            raise ValidationError("priors must sum to 1")

    @property
    def M(self) -> int:
        return len(self.p)


@dataclass(frozen=True)
class AwgnObservation:
    """Per-index reliability view of a BI-AWGN output block.

    Hard decisions resolve ties at exactly 0 to bit 0 (deterministic and a
    measure-zero event).
    """

    sigma: float
    y_tilde: np.ndarray
    hd: np.ndarray        # hard decisions, uint8
    r: np.ndarray         # |y_tilde|
    llr_mag: np.ndarray   # 2 r / sigma^2
    p_of_llr: np.ndarray  # 1 / (1 + e^llr), in [0, 1/2]


def sample_state(profile: ReliabilityProfile, N: int, rng: np.random.Generator) -> np.ndarray:
    """Draw N i.i.d. states in 1..M according to the profile priors."""
    if N < 1:
        raise ValidationError("N must be >= 1")
    prior = np.asarray(profile.prior, dtype=np.float64)
    prior = prior / prior.sum()
    return rng.choice(profile.M, size=N, p=prior).astype(np.int64) + 1


def composition(state, M: int) -> np.ndarray:
    """Class counts (N_1, ..., N_M) of a state vector."""
    s = np.asarray(state, dtype=np.int64)
    if s.size and (s.min() < 1 or s.max() > M):
        raise ValidationError("state entries must lie in 1..M")
    return np.bincount(s - 1, minlength=M)


def state_from_composition(comp) -> np.ndarray:
    """Deterministic state vector realizing a composition (class blocks in order)."""
    comp = np.asarray(comp, dtype=np.int64)
    if comp.size == 0 or (comp < 0).any():
        raise ValidationError("composition must be nonnegative and non-empty")
    return np.repeat(np.arange(1, comp.size + 1, dtype=np.int64), comp)


def sample_errors(state, profile: ReliabilityProfile, rng: np.random.Generator) -> np.ndarray:
    """Bernoulli error vector with Pr(E_i = 1 | S_i = j) = p_j."""
    s = np.asarray(state, dtype=np.int64)
    p = np.asarray(profile.p, dtype=np.float64)[s - 1]
    return (rng.random(s.size) < p).astype(np.uint8)


def hd_crossover(profile: ReliabilityProfile) -> float:
    """Overall hard-decision crossover: sum_j p_j Pr(S = j)."""
    return float(np.dot(profile.p, profile.prior))


def awgn_transmit(codeword, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """BPSK-map a codeword (0 -> +1, 1 -> -1) and add N(0, sigma^2) noise."""
    if sigma <= 0:
        raise ValidationError("sigma must be positive")
    x = 1.0 - 2.0 * np.asarray(codeword, dtype=np.float64)
    return x + rng.normal(0.0, sigma, size=x.shape)


def crossover_from_llr(llr_mag) -> np.ndarray:
    """Crossover probability 1 / (1 + e^l) for LLR magnitude(s) l >= 0."""
    return expit(-np.asarray(llr_mag, dtype=np.float64))


def awgn_observe(y_tilde, sigma: float) -> AwgnObservation:
    """Split a BI-AWGN block into hard decisions and per-index reliabilities."""
    if sigma <= 0:
        raise ValidationError("sigma must be positive")
    y = np.asarray(y_tilde, dtype=np.float64)
    r = np.abs(y)
    llr = 2.0 * r / (sigma * sigma)
    return AwgnObservation(
        sigma=float(sigma),
        y_tilde=y,
        hd=(y < 0).astype(np.uint8),
        r=r,
        llr_mag=llr,
        p_of_llr=expit(-llr),
    )


def log_likelihood(candidate, hd, per_index_p) -> float:
    """Log-probability of the hard-decision block under a candidate codeword.

    Index i contributes log(1 - p_i) on agreement and log(p_i) on
    disagreement; p_i is clamped to [P_FLOOR, P_CEIL] first.
    """
    c = np.asarray(candidate, dtype=np.uint8)
    h = np.asarray(hd, dtype=np.uint8)
    p = np.clip(np.asarray(per_index_p, dtype=np.float64), P_FLOOR, P_CEIL)
    if c.shape != h.shape or p.shape != c.shape:
        raise ValidationError("candidate, hd and per_index_p must have equal length")
    return float(np.sum(np.where(c == h, np.log1p(-p), np.log(p))))
