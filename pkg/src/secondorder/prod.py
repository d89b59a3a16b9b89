"""The prod(eta) forecaster, w <- w (1 + eta x), and its restarting wrappers.

``ProdQ`` doubles a guess on the best expert's quadratic penalty, ``ProdM``
doubles a guess on the payoff magnitude, and ``ProdMQ`` nests both. Every
wrapper keeps one global ``SequenceStats``; a restart only resets weights.

Each class also has a ``run`` classmethod that computes the same predictions
for a whole sequence at once. The epoch boundaries of all three wrappers depend
only on the payoffs, so they can be located first and every epoch then solved
as a plain cumulative sum of log-factors.
"""

from __future__ import annotations

import math

import numpy as np

from .core import (
    InputError,
    SequenceStats,
    payoff_only_trackers,
    payoff_vector,
    softmax,
)

# slack on the z >= -1/2 validity window, absorbs rounding in translated payoffs
VALIDITY_RTOL = 1e-12


class ValidityError(ValueError):
    """An update factor 1 + eta*x fell below 1/2, so the caller's payoff bound was wrong."""

    def __init__(self, message: str, expert: int, round_index: int | None = None):
        super().__init__(message)
        self.expert = expert
        self.round_index = round_index


def theorem1_eta(bound_m: float, bound_q: float, n_experts: int) -> float:
    """Tuned rate min{1/(2M), sqrt(ln N / Q)} for payoffs >= -M and Q_k <= Q."""
    if not bound_m > 0 or not bound_q > 0:
        raise InputError("M and Q must be positive")
    if n_experts < 2:
        raise InputError("at least two experts are required")
    return min(1.0 / (2.0 * bound_m), math.sqrt(math.log(n_experts) / bound_q))


def _check_window(z: np.ndarray, round_index=None):
    bad = np.flatnonzero(z < -0.5 - VALIDITY_RTOL)
    if bad.size:
        i = int(bad[0])
        where = "" if round_index is None else f" at round {round_index + 1}"
        raise ValidityError(
            f"eta*x = {float(z[i])!r} < -1/2 for expert {i}{where}; payoff bound too small",
            expert=i,
            round_index=round_index,
        )


class Prod:
    """prod(eta) with log-domain weights."""

    epoch = 0  # never restarts

    def __init__(self, n_experts: int, eta: float):
        if n_experts < 2:
            raise InputError("at least two experts are required")
        self.n_experts = n_experts
        self.log_weights = np.zeros(n_experts)
        self.eta = 0.0
        self.reset(eta)

    def reset(self, eta: float):
        if not eta > 0 or not math.isfinite(eta):
            raise InputError(f"learning rate must be positive and finite, got {eta!r}")
        self.eta = float(eta)
        self.log_weights = np.zeros(self.n_experts)
        self._p = None

    def predict(self) -> np.ndarray:
        if self._p is None:
            self._p = softmax(self.log_weights)
        return self._p

    def update(self, x) -> Prod:
        x = payoff_vector(x, self.n_experts)
        z = self.eta * x
        _check_window(z)
        self.log_weights = self.log_weights + np.log1p(z)
        self._p = None
        return self

    def step(self, x) -> np.ndarray:
        p = self.predict()
        self.update(x)
        return p

    @classmethod
    def run(cls, payoffs, eta: float) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(payoffs, dtype=float)
        return _segment_probs(x, [(0, x.shape[0], eta, False)]), np.zeros(x.shape[0], dtype=int)


class _Restarting:
    """Shared plumbing: inner prod, global stats, epoch serial number."""

    def __init__(self, n_experts: int, eta: float):
        self.n_experts = n_experts
        self.inner = Prod(n_experts, eta)
        self.stats = SequenceStats(n_experts)
        self.epoch = 0
        self.epoch_ends: list[int] = []
        self.log_n = math.log(n_experts)

    def predict(self) -> np.ndarray:
        return self.inner.predict()

    def step(self, x) -> np.ndarray:
        p = self.predict()
        self.update(x)
        return p

    def _restart(self, eta: float):
        self.epoch_ends.append(self.stats.t)
        self.epoch += 1
        self.inner.reset(eta)


class ProdQ(_Restarting):
    """prod-Q(M): restart when the best expert's quadratic penalty Q*_t exceeds 4^r M^2."""

    def __init__(self, n_experts: int, bound_m: float):
        if not bound_m > 0:
            raise InputError("payoff bound M must be positive")
        self.bound_m = float(bound_m)
        super().__init__(n_experts, self._eta(0, math.log(n_experts)))

    def _eta(self, r: int, log_n: float) -> float:
        return min(1.0 / (2.0 * self.bound_m), math.sqrt(log_n) / (2.0 ** r * self.bound_m))

    @property
    def eta(self) -> float:
        return self.inner.eta

    def update(self, x) -> ProdQ:
        x = payoff_vector(x, self.n_experts)
        _check_bound(x, self.bound_m, self.stats.t)
        self.stats.update(x, self.predict())
        self.inner.update(x)
        if self.stats.q_star > 4.0 ** self.epoch * self.bound_m ** 2:
            self._restart(self._eta(self.epoch + 1, self.log_n))
        return self

    @classmethod
    def run(cls, payoffs, bound_m: float):
        x = np.asarray(payoffs, dtype=float)
        n, N = x.shape
        over = np.argwhere(np.abs(x) > bound_m * (1.0 + VALIDITY_RTOL))
        if over.size:
            _check_bound(x[over[0, 0]], bound_m, int(over[0, 0]))
        q_star, _ = payoff_only_trackers(x)
        log_n = math.log(N)
        segments, start, r = [], 0, 0
        while start < n:
            eta = min(1.0 / (2.0 * bound_m), math.sqrt(log_n) / (2.0 ** r * bound_m))
            end = _first(q_star > 4.0 ** r * bound_m ** 2, start)
            segments.append((start, end + 1, eta, False))
            start, r = end + 1, r + 1
        return _segment_probs(x, segments), _epoch_labels(segments, n)


class ProdM(_Restarting):
    """prod-M(Q): restart when the power-of-two magnitude tracker M_t outgrows its anchor."""

    def __init__(self, n_experts: int, bound_q: float):
        if not bound_q > 0:
            raise InputError("quadratic bound Q must be positive")
        self.bound_q = float(bound_q)
        self.m0 = math.sqrt(bound_q / (4.0 * math.log(n_experts)))
        self.anchor = self.m0
        super().__init__(n_experts, 1.0 / (2.0 * self.m0))

    def update(self, x) -> ProdM:
        x = payoff_vector(x, self.n_experts)
        self.stats.update(x, self.predict())
        mag = self.stats.magnitude
        if mag is not None and mag > self.anchor:
            # closing round: its factor may leave the validity window and the
            # weights are reset right after, so it never touches them
            self.anchor = mag
            self._restart(1.0 / (2.0 * mag))
        else:
            self.inner.update(x)
        return self

    @classmethod
    def run(cls, payoffs, bound_q: float):
        x = np.asarray(payoffs, dtype=float)
        n, N = x.shape
        _, mag = payoff_only_trackers(x)
        anchor = math.sqrt(bound_q / (4.0 * math.log(N)))
        segments, start = [], 0
        while start < n:
            end = _first(mag > anchor, start)
            closes = bool(mag[end] > anchor)
            segments.append((start, end + 1, 1.0 / (2.0 * anchor), closes))
            if closes:
                anchor = float(mag[end])
            start = end + 1
        return _segment_probs(x, segments), _epoch_labels(segments, n)


class ProdMQ(_Restarting):
    """prod-MQ: epochs (r, s); s counts quadratic-penalty doublings, r magnitude doublings.

    Before the first nonzero payoff nothing is known about the scale, so the
    forecaster stays uniform and starts epoch (0, 0) on that round.
    """

    def __init__(self, n_experts: int):
        super().__init__(n_experts, 1.0)
        self.started = False
        self.r = 0
        self.s = 0
        self.s_prev = 0  # S_{r-1}
        self.m_r: float | None = None

    def _eta(self) -> float:
        return _mq_eta(self.m_r, self.s_prev + self.s, self.log_n)

    def update(self, x) -> ProdMQ:
        x = payoff_vector(x, self.n_experts)
        self.stats.update(x, self.predict())
        mag = self.stats.magnitude
        if not self.started:
            if mag is None:
                return self
            self.started = True
            self.m_r = mag
            self.inner.reset(self._eta())
        if mag > self.m_r:
            # (C2) wins over (C1) when both fire
            self.r += 1
            self.s_prev += self.s
            self.s = 0
            self.m_r = mag
            self._restart(self._eta())
            return self
        self.inner.update(x)
        if self.stats.q_star > 4.0 ** (self.s_prev + self.s) * mag ** 2:
            self.s += 1
            self._restart(self._eta())
        return self

    @classmethod
    def run(cls, payoffs):
        x = np.asarray(payoffs, dtype=float)
        n, N = x.shape
        q_star, mag = payoff_only_trackers(x)
        log_n = math.log(N)
        defined = np.flatnonzero(~np.isnan(mag))
        if defined.size == 0:
            return np.full((n, N), 1.0 / N), np.zeros(n, dtype=int)
        start = int(defined[0])
        segments = [(0, start, 1.0, False)] if start else []
        m_r, s_prev, s = float(mag[start]), 0, 0
        while start < n:
            eta = _mq_eta(m_r, s_prev + s, log_n)
            c2 = mag > m_r
            c1 = q_star > 4.0 ** (s_prev + s) * mag ** 2
            end = _first(c1 | c2, start)
            segments.append((start, end + 1, eta, bool(c2[end])))
            if c2[end]:
                s_prev, s, m_r = s_prev + s, 0, float(mag[end])
            elif c1[end]:
                s += 1
            start = end + 1
        labels = _epoch_labels(segments, n)
        # the uniform lead-in shares serial 0 with epoch (0, 0)
        labels[int(defined[0]):] -= 1 if defined[0] else 0
        return _segment_probs(x, segments), labels


def _mq_eta(m_r: float, exponent: int, log_n: float) -> float:
    return min(1.0 / (2.0 * m_r), math.sqrt(log_n) / (2.0 ** exponent * m_r))


def _check_bound(x: np.ndarray, bound_m: float, t: int):
    big = np.flatnonzero(np.abs(x) > bound_m * (1.0 + VALIDITY_RTOL))
    if big.size:
        i = int(big[0])
        raise ValidityError(
            f"|x| = {float(abs(x[i]))!r} exceeds the declared bound M = {float(bound_m)!r} "
            f"for expert {i} at round {t + 1}",
            expert=i,
            round_index=t,
        )


def _first(mask: np.ndarray, start: int) -> int:
    """First index >= start where mask holds, else the last index."""
    hits = np.flatnonzero(mask[start:])
    return start + int(hits[0]) if hits.size else mask.shape[0] - 1


def _epoch_labels(segments, n: int) -> np.ndarray:
    labels = np.empty(n, dtype=int)
    for serial, (a, b, _, _) in enumerate(segments):
        labels[a:b] = serial
    return labels


def _segment_probs(x: np.ndarray, segments) -> np.ndarray:
    """Predictions of prod restarted fresh at the start of every (start, stop, eta) segment.

    With ``closes`` set, the segment's final round ends the epoch before its
    factor is applied, so that factor is exempt from the validity check.
    """
    n, N = x.shape
    probs = np.empty((n, N))
    for a, b, eta, closes in segments:
        if b <= a:
            continue
        z = eta * x[a:b]
        checked = z[:-1] if closes else z
        bad = np.argwhere(checked < -0.5 - VALIDITY_RTOL)
        if bad.size:
            t, i = (int(v) for v in bad[0])
            _check_window(checked[t], a + t)
        logw = np.zeros((b - a, N))
        np.cumsum(np.log1p(z[:-1]), axis=0, out=logw[1:])
        probs[a:b] = softmax(logw)
    return probs
