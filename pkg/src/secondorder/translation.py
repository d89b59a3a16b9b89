"""On-line payoff translation wrappers and randomized action sampling."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .core import InputError, as_distribution, payoff_vector

# numpy's PCG64 bit generator seeded through SeedSequence; children via SeedSequence.spawn
RNG_ALGORITHM = "numpy.PCG64/SeedSequence v1"


class TranslationRule(enum.Enum):
    NONE = "none"
    REWARD = "reward"
    MIN_PAYOFF = "min_payoff"
    MAX_PAYOFF = "max_payoff"
    MIDRANGE = "midrange"

    def shift(self, x: np.ndarray, p: np.ndarray) -> float:
        """The common amount mu_t subtracted from every payoff of the round."""
        if self is TranslationRule.NONE:
            return 0.0
        if self is TranslationRule.REWARD:
            return float(np.dot(p, x))
        lo, hi = float(x.min()), float(x.max())
        if self is TranslationRule.MIN_PAYOFF:
            return lo
        if self is TranslationRule.MAX_PAYOFF:
            return hi
        return lo + (hi - lo) / 2.0


class Translated:
    """Feeds x - mu_t to ``inner``; predictions pass through untouched."""

    def __init__(self, inner, rule: TranslationRule | str):
        self.inner = inner
        self.rule = TranslationRule(rule)
        self.n_experts = inner.n_experts
        self.shifts: list[float] = []

    def predict(self) -> np.ndarray:
        return self.inner.predict()

    def update(self, x) -> Translated:
        x = payoff_vector(x, self.n_experts)
        p = self.inner.predict()
        mu = self.rule.shift(x, p)
        self.shifts.append(mu)
        self.inner.update(x - mu)
        return self

    def step(self, x) -> np.ndarray:
        p = self.predict()
        self.update(x)
        return p

    @property
    def epoch(self) -> int:
        return getattr(self.inner, "epoch", 0)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def _inverse_cdf(cdf: np.ndarray, p: np.ndarray, u):
    idx = np.sum(cdf <= np.expand_dims(u, -1), axis=-1)
    # rounding can leave the total just under u; fall back to the last positive entry
    last = p.shape[-1] - 1 - np.argmax(p[..., ::-1] > 0, axis=-1)
    return np.minimum(idx, last)


def sample_action(p, rng: np.random.Generator) -> int:
    """Draw an expert index with probability p_i by inverting the cumulative sums."""
    p = as_distribution(p)
    return int(_inverse_cdf(np.cumsum(p), p, rng.random()))


@dataclass
class RandomizedPlay:
    seed: int
    drawn_actions: np.ndarray = field(repr=False)
    actual_reward: float


def randomized_play(payoffs, probs, seed: int) -> RandomizedPlay:
    """Replay a run drawing I_t ~ p_t each round; same draws as repeated ``sample_action``."""
    x = np.asarray(payoffs, dtype=float)
    p = np.asarray(probs, dtype=float)
    rng = make_rng(seed)
    u = rng.random(x.shape[0])
    actions = _inverse_cdf(np.cumsum(p, axis=1), p, u)
    reward = float(np.sum(x[np.arange(x.shape[0]), actions]))
    return RandomizedPlay(seed=seed, drawn_actions=actions, actual_reward=reward)


def bernstein_band(V_n: float, M: float, n: int, delta: float) -> float:
    """Freedman-style deviation sqrt(2 V ln(n/delta)) + (2/3) M ln(n/delta)."""
    if not 0 < delta < 1:
        raise InputError("delta must lie in (0, 1)")
    if V_n < 0 or M <= 0 or n < 1:
        raise InputError("need V_n >= 0, M > 0 and n >= 1")
    log_term = math.log(n / delta)
    return math.sqrt(2.0 * V_n * log_term) + (2.0 / 3.0) * M * log_term
