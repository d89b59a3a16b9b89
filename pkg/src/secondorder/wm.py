"""Exponentially weighted average forecaster with variance-adaptive learning rates."""

from __future__ import annotations

import math

import numpy as np

from .core import (
    InputError,
    payoff_vector,
    pow2_ceil_array,
    range_tracker,
    reward_and_variance,
    softmax,
    uniform,
)

# sqrt(2 (sqrt 2 - 1) / (e - 2)), about 1.07
C = math.sqrt(2.0 * (math.sqrt(2.0) - 1.0) / (math.e - 2.0))

SCHEDULES = ("fixed", "known_range", "unknown_range")

# exponent floor: exp(-745) is the last nonzero double
EXP_FLOOR = -745.0


class WeightedMajority:
    """p_t proportional to exp(eta_t X_{i,t-1}).

    Schedules: ``fixed`` uses a constant ``eta``; ``known_range`` uses
    min{1/E, C sqrt(ln N / V_{t-1})} for a known range bound ``range_bound``;
    ``unknown_range`` replaces E by the power-of-two tracker of observed ranges.
    """

    def __init__(self, n_experts: int, schedule: str = "unknown_range", eta=None, range_bound=None):
        if n_experts < 2:
            raise InputError("at least two experts are required")
        if schedule not in SCHEDULES:
            raise InputError(f"unknown schedule {schedule!r}")
        if schedule == "fixed" and not (eta is not None and eta > 0):
            raise InputError("fixed schedule needs a positive eta")
        if schedule == "known_range" and not (range_bound is not None and range_bound > 0):
            raise InputError("known_range schedule needs a positive range bound E")
        self.n_experts = n_experts
        self.schedule = schedule
        self.fixed_eta = eta
        self.range_bound = range_bound
        self.log_n = math.log(n_experts)
        self.t = 0
        self.cum_payoffs = np.zeros(n_experts)
        self.cum_variance = 0.0
        self.range_pow2: float | None = None
        self._p = None

    def eta(self) -> float:
        """Rate for the upcoming round; +inf when nothing bounds it yet."""
        if self.schedule == "fixed":
            return float(self.fixed_eta)
        if self.schedule == "known_range":
            cap = 1.0 / self.range_bound
        else:
            cap = math.inf if self.range_pow2 is None else 1.0 / self.range_pow2
        if self.cum_variance > 0:
            return min(cap, C * math.sqrt(self.log_n / self.cum_variance))
        return cap

    def predict(self) -> np.ndarray:
        if self._p is None:
            eta = self.eta()
            if self.t == 0 or math.isinf(eta):
                self._p = uniform(self.n_experts)
            else:
                self._p = softmax(eta * (self.cum_payoffs - self.cum_payoffs.max()), EXP_FLOOR)
        return self._p

    def update(self, x, p=None) -> WeightedMajority:
        x = payoff_vector(x, self.n_experts)
        if p is None:
            p = self.predict()
        _, var = reward_and_variance(p, x)
        self.cum_variance += var
        self.cum_payoffs = self.cum_payoffs + x
        self.range_pow2 = range_tracker(x, self.range_pow2)
        self.t += 1
        self._p = None
        return self

    def step(self, x) -> np.ndarray:
        p = self.predict()
        self.update(x, p)
        return p

    @property
    def epoch(self) -> int:
        return 0

    @classmethod
    def run(cls, payoffs, schedule="unknown_range", eta=None, range_bound=None):
        """Whole-sequence predictions; same arithmetic as repeated ``step``, less overhead."""
        x = np.asarray(payoffs, dtype=float)
        n, N = x.shape
        wm = cls(N, schedule, eta=eta, range_bound=range_bound)
        probs = np.empty((n, N))
        if n == 0:
            return probs, np.zeros(0, dtype=int)
        X = np.cumsum(x, axis=0)
        if schedule == "fixed":
            cap = np.full(n, float(eta))
        elif schedule == "known_range":
            cap = np.full(n, 1.0 / range_bound)
        else:
            # tracker after round t-1 caps round t; NaN (undefined) becomes +inf
            tracked = pow2_ceil_array(np.maximum.accumulate(x.max(axis=1) - x.min(axis=1)))
            prev_e = tracked[:-1]
            cap = np.full(n, math.inf)
            cap[1:][~np.isnan(prev_e)] = 1.0 / prev_e[~np.isnan(prev_e)]
        adaptive = schedule != "fixed"
        V = 0.0
        p = uniform(N)
        for t in range(n):
            if t:
                rate = cap[t]
                if adaptive and V > 0:
                    rate = min(rate, C * math.sqrt(wm.log_n / V))
                if math.isinf(rate):
                    p = uniform(N)
                else:
                    prev = X[t - 1]
                    z = rate * (prev - prev.max())
                    np.maximum(z, EXP_FLOOR, out=z)
                    w = np.exp(z)
                    p = w / w.sum()
            probs[t] = p
            xt = x[t]
            dev = xt - p @ xt
            V += p @ (dev * dev)
        return probs, np.zeros(n, dtype=int)


def phi(p, eta: float, x) -> float:
    """(1/eta) ln sum_i p_i exp(eta (x_i - xhat)), the per-round mixability gap."""
    if not eta > 0:
        raise InputError("eta must be positive")
    p = np.asarray(p, dtype=float)
    x = payoff_vector(x, p.size)
    xhat = float(np.dot(p, x))
    a = eta * (x - xhat)
    top = float(a.max())
    if top < 1.0:
        # log1p/expm1 keep the small-gap regime accurate
        return float(np.log1p(np.dot(p, np.expm1(a)))) / eta
    return (top + math.log(float(np.dot(p, np.exp(a - top))))) / eta
