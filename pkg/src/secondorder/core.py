"""Payoff sequences, distributions and the running statistics every forecaster reads."""

from __future__ import annotations

import copy
import enum
import math
from dataclasses import dataclass

import numpy as np

# probabilities must sum to one within this absolute tolerance
PROB_ATOL = 1e-12


class InputError(ValueError):
    """Malformed payoff vector, distribution or parameter."""


class GameKind(enum.Enum):
    LOSS = "loss"
    GAIN = "gain"
    SIGNED = "signed"

    @classmethod
    def of(cls, payoffs) -> GameKind:
        arr = np.asarray(payoffs, dtype=float)
        if np.all(arr >= 0):
            return cls.GAIN
        if np.all(arr <= 0):
            return cls.LOSS
        return cls.SIGNED

    def admits(self, payoffs) -> bool:
        arr = np.asarray(payoffs, dtype=float)
        if self is GameKind.GAIN:
            return bool(np.all(arr >= 0))
        if self is GameKind.LOSS:
            return bool(np.all(arr <= 0))
        return True

    @property
    def one_sided(self) -> bool:
        return self is not GameKind.SIGNED


def payoff_vector(x, n_experts: int | None = None) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InputError("payoff vector must be a nonempty 1-d array")
    if n_experts is not None and arr.size != n_experts:
        raise InputError(f"payoff vector has {arr.size} entries, expected {n_experts}")
    if not np.all(np.isfinite(arr)):
        raise InputError("payoff vector contains NaN or infinity")
    return arr


@dataclass(frozen=True)
class PayoffSequence:
    """The adversary's full input: an (n, N) array of per-round payoffs."""

    payoffs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.payoffs, dtype=float)
        if arr.ndim != 2:
            raise InputError("payoffs must be a 2-d array of shape (rounds, experts)")
        if arr.shape[1] < 2:
            raise InputError("at least two experts are required")
        if not np.all(np.isfinite(arr)):
            raise InputError("payoffs contain NaN or infinity")
        arr.setflags(write=False)
        object.__setattr__(self, "payoffs", arr)

    @classmethod
    def from_rounds(cls, rounds) -> PayoffSequence:
        rounds = [list(r) for r in rounds]
        widths = {len(r) for r in rounds}
        if len(widths) > 1:
            raise InputError(f"rounds have differing lengths {sorted(widths)}")
        return cls(np.array(rounds, dtype=float).reshape(len(rounds), -1))

    @property
    def num_experts(self) -> int:
        return self.payoffs.shape[1]

    @property
    def num_rounds(self) -> int:
        return self.payoffs.shape[0]

    @property
    def kind(self) -> GameKind:
        return GameKind.of(self.payoffs)

    def __len__(self):
        return self.num_rounds

    def __iter__(self):
        return iter(self.payoffs)


def uniform(n_experts: int) -> np.ndarray:
    return np.full(n_experts, 1.0 / n_experts)


def as_distribution(p, n_experts: int | None = None) -> np.ndarray:
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or (n_experts is not None and arr.size != n_experts):
        raise InputError("distribution has the wrong shape")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise InputError("distribution entries must be finite and nonnegative")
    if abs(arr.sum() - 1.0) > PROB_ATOL:
        raise InputError(f"distribution sums to {float(arr.sum())!r}, not 1")
    return arr


def softmax(logits: np.ndarray, floor: float | None = None) -> np.ndarray:
    """Row-wise normalized exponentials, shifted by the row maximum."""
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    if floor is not None:
        np.maximum(shifted, floor, out=shifted)
    w = np.exp(shifted)
    return w / np.sum(w, axis=-1, keepdims=True)


def pow2_ceil(v: float) -> float:
    """Smallest power of two (any integer exponent) that is >= v, for v > 0."""
    mant, exp = math.frexp(v)
    return math.ldexp(1.0, exp - 1 if mant == 0.5 else exp)


def pow2_ceil_array(v: np.ndarray) -> np.ndarray:
    """Vectorized pow2_ceil; zero entries map to NaN (undefined)."""
    v = np.asarray(v, dtype=float)
    mant, exp = np.frexp(v)
    out = np.ldexp(1.0, np.where(mant == 0.5, exp - 1, exp))
    return np.where(v > 0, out, np.nan)


def effective_range(x) -> float:
    arr = payoff_vector(x)
    return float(arr.max() - arr.min())


def magnitude_tracker(x, prev: float | None) -> float | None:
    """Running max of 2**ceil(log2|x_i|) over nonzero payoffs; None until one is seen."""
    biggest = float(np.max(np.abs(payoff_vector(x))))
    if biggest == 0.0:
        return prev
    cand = pow2_ceil(biggest)
    return cand if prev is None else max(prev, cand)


def range_tracker(x, prev: float | None) -> float | None:
    """Smallest 2**k dominating every effective range so far; None while all ranges are 0."""
    r = effective_range(x)
    if r == 0.0:
        return prev
    cand = pow2_ceil(r)
    return cand if prev is None else max(prev, cand)


def best_action(cum_payoff, tiebreak) -> int:
    """argmax of cumulative payoff; ties go to the smallest tiebreak value, then smallest index."""
    cum = np.asarray(cum_payoff, dtype=float)
    tb = np.asarray(tiebreak, dtype=float)
    leaders = cum == cum.max()
    return int(np.argmin(np.where(leaders, tb, np.inf)))


def reward_and_variance(p: np.ndarray, x: np.ndarray) -> tuple[float, float]:
    """Forecaster reward p.x and the variance of the payoff drawn from p."""
    xhat = float(np.dot(p, x))
    dev = x - xhat
    return xhat, float(np.dot(p, dev * dev))


class SequenceStats:
    """Running per-expert and aggregate statistics, advanced one round at a time.

    Undefined trackers (no nonzero payoff or range seen yet) are ``None``.
    """

    def __init__(self, n_experts: int):
        if n_experts < 2:
            raise InputError("at least two experts are required")
        N = self.n_experts = n_experts
        self.t = 0
        self.cum_payoff = np.zeros(N)
        self.quad = np.zeros(N)
        self.abs_sum = np.zeros(N)
        self.translated_quad = np.zeros(N)
        # sums of x - min_j x_j and max_j x_j - x (one-sided translations)
        self.gain_shift = np.zeros(N)
        self.loss_shift = np.zeros(N)
        self.best_index = 0
        self.best_cum = 0.0
        self.q_star = 0.0
        self.q_star_envelope = 0.0
        self.a_star = 0.0
        self.a_star_envelope = 0.0
        self.r_star = 0.0
        self.r_star_envelope = 0.0
        self.magnitude: float | None = None
        self.abs_max = 0.0
        self.range_eff = 0.0
        self.range_max = 0.0
        self.range_sq_sum = 0.0
        self.reward = 0.0
        self.variance = 0.0
        self.cum_reward = 0.0
        self.cum_variance = 0.0
        self.ratio_envelope = 0.0

    def update(self, x, p) -> SequenceStats:
        x = payoff_vector(x, self.n_experts)
        p = np.asarray(p, dtype=float)
        if p.shape != x.shape:
            raise InputError("distribution and payoff vector differ in length")
        self.t += 1
        self.reward, self.variance = reward_and_variance(p, x)
        self.cum_reward += self.reward
        self.cum_variance += self.variance

        sq = x * x
        self.cum_payoff += x
        self.quad += sq
        self.abs_sum += np.abs(x)
        dev = x - self.reward
        self.translated_quad += dev * dev
        lo, hi = x.min(), x.max()
        self.gain_shift += x - lo
        self.loss_shift += hi - x

        k = self.best_index = best_action(self.cum_payoff, self.quad)
        self.best_cum = float(self.cum_payoff[k])
        self.q_star = float(self.quad[k])
        self.a_star = float(self.abs_sum[k])
        self.q_star_envelope = max(self.q_star_envelope, self.q_star)
        self.a_star_envelope = max(self.a_star_envelope, self.a_star)
        kr = best_action(self.cum_payoff, self.translated_quad)
        self.r_star = float(self.translated_quad[kr])
        self.r_star_envelope = max(self.r_star_envelope, self.r_star)

        self.magnitude = magnitude_tracker(x, self.magnitude)
        self.abs_max = max(self.abs_max, float(max(-lo, hi)))
        self.range_eff = float(hi - lo)
        self.range_max = max(self.range_max, self.range_eff)
        self.range_sq_sum += self.range_eff ** 2
        if self.magnitude is not None:
            # divide twice: magnitude**2 underflows for tiny payoffs
            self.ratio_envelope = max(self.ratio_envelope, self.q_star / self.magnitude / self.magnitude)
        return self

    @property
    def q(self) -> float:
        """max{1, max_s Q*_s / M_s^2}."""
        return max(1.0, self.ratio_envelope)

    @property
    def regret(self) -> float:
        return self.best_cum - self.cum_reward

    def copy(self) -> SequenceStats:
        return copy.deepcopy(self)

    def summary(self) -> dict:
        """JSON-friendly snapshot of the scalar statistics."""
        return {
            "t": self.t,
            "best_index": self.best_index,
            "Xstar": self.best_cum,
            "Xhat": self.cum_reward,
            "regret": self.regret,
            "V": self.cum_variance,
            "Qstar": self.q_star,
            "Qstar_max": self.q_star_envelope,
            "Astar_max": self.a_star_envelope,
            "Rstar_max": self.r_star_envelope,
            "M_t": self.magnitude,
            "abs_max": self.abs_max,
            "E_max": self.range_max,
            "sum_E_sq": self.range_sq_sum,
            "q": self.q,
        }


@dataclass
class StatsHistory:
    """Per-round statistics of a finished run, computed in bulk from payoffs and distributions."""

    xhat: np.ndarray
    cum_reward: np.ndarray
    best_index: np.ndarray
    best_cum: np.ndarray
    variance: np.ndarray
    range_eff: np.ndarray
    magnitude: np.ndarray  # NaN while undefined
    q_star: np.ndarray
    final: SequenceStats

    @property
    def regret(self) -> np.ndarray:
        return self.best_cum - self.cum_reward

    @classmethod
    def compute(cls, payoffs, probs) -> StatsHistory:
        x = np.asarray(payoffs, dtype=float)
        p = np.asarray(probs, dtype=float)
        if x.shape != p.shape or x.ndim != 2:
            raise InputError("payoffs and distributions must share shape (rounds, experts)")
        n, N = x.shape
        xhat = np.einsum("ij,ij->i", p, x)
        dev = x - xhat[:, None]
        variance = np.einsum("ij,ij->i", p, dev * dev)
        cum_reward = np.cumsum(xhat)

        X = np.cumsum(x, axis=0)
        Q = np.cumsum(x * x, axis=0)
        A = np.cumsum(np.abs(x), axis=0)
        R = np.cumsum(dev * dev, axis=0)
        rows = np.arange(n)
        best = leaders(X, Q)
        best_r = leaders(X, R)
        q_star = Q[rows, best]
        lo, hi = x.min(axis=1), x.max(axis=1)
        rng = hi - lo
        absmax = np.maximum(-lo, hi)
        mag = pow2_ceil_array(np.maximum.accumulate(absmax)) if n else absmax

        final = SequenceStats(N)
        if n:
            final.t = n
            final.cum_payoff = X[-1].copy()
            final.quad = Q[-1].copy()
            final.abs_sum = A[-1].copy()
            final.translated_quad = R[-1].copy()
            final.gain_shift = np.sum(x - lo[:, None], axis=0)
            final.loss_shift = np.sum(hi[:, None] - x, axis=0)
            final.best_index = int(best[-1])
            final.best_cum = float(X[-1, best[-1]])
            final.q_star = float(q_star[-1])
            final.q_star_envelope = float(q_star.max())
            a_star = A[rows, best]
            final.a_star = float(a_star[-1])
            final.a_star_envelope = float(a_star.max())
            r_star = R[rows, best_r]
            final.r_star = float(r_star[-1])
            final.r_star_envelope = float(r_star.max())
            final.magnitude = None if np.isnan(mag[-1]) else float(mag[-1])
            final.abs_max = float(absmax.max())
            final.range_eff = float(rng[-1])
            final.range_max = float(rng.max())
            final.range_sq_sum = float(np.sum(rng * rng))
            final.reward = float(xhat[-1])
            final.variance = float(variance[-1])
            final.cum_reward = float(cum_reward[-1])
            final.cum_variance = float(np.sum(variance))
            safe = np.where(np.isnan(mag), 1.0, mag)
            ratio = np.where(np.isnan(mag), 0.0, q_star / safe / safe)
            final.ratio_envelope = float(ratio.max())
        return cls(
            xhat=xhat,
            cum_reward=cum_reward,
            best_index=best,
            best_cum=X[rows, best] if n else np.zeros(0),
            variance=variance,
            range_eff=rng,
            magnitude=mag,
            q_star=q_star,
            final=final,
        )


def leaders(cum: np.ndarray, tiebreak: np.ndarray) -> np.ndarray:
    """Row-wise best_action over (rounds, experts) arrays."""
    top = cum == cum.max(axis=1, keepdims=True)
    return np.argmin(np.where(top, tiebreak, np.inf), axis=1)


def payoff_only_trackers(payoffs) -> tuple[np.ndarray, np.ndarray]:
    """Per-round Q*_t and M_t (NaN while undefined); neither depends on the forecaster."""
    x = np.asarray(payoffs, dtype=float)
    if x.shape[0] == 0:
        return np.zeros(0), np.zeros(0)
    X = np.cumsum(x, axis=0)
    Q = np.cumsum(x * x, axis=0)
    q_star = Q[np.arange(x.shape[0]), leaders(X, Q)]
    mag = pow2_ceil_array(np.maximum.accumulate(np.max(np.abs(x), axis=1)))
    return q_star, mag
