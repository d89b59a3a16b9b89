"""Closed-form regret lower bounds and a verifier that checks them against finished runs.

Every bound is a lower bound on X̂_n - X*_n (or X̂_n - X_{k,n} for the
per-expert ones), so values are nonpositive. Full expressions with every
lower-order term are evaluated; nothing is simplified to its leading order.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

import numpy as np

from .core import GameKind, InputError

# relative tolerance used for the holds flag
HOLDS_RTOL = 1e-9


class ConfigError(ValueError):
    """Bound requested for a run that does not satisfy its hypotheses."""


class BoundId(enum.Enum):
    B1 = "B1"  # prod(eta), any eta inside the validity window
    B2 = "B2"  # prod with the tuned rate
    B3 = "B3"  # prod-Q(M)
    B4 = "B4"  # prod-M(Q)
    B5 = "B5"  # prod-MQ
    B6 = "B6"  # weighted majority, known range E
    B7 = "B7"  # weighted majority, unknown range
    B8 = "B8"  # weighted majority, sum of squared ranges
    B9 = "B9"  # prod-Q(E) on payoffs translated by the reward
    B10 = "B10"  # weighted majority, one-sided game
    B11 = "B11"  # prod-Q(2M) on payoffs translated by the reward, one-sided game
    B12 = "B12"  # weighted majority, signed game via both one-sided translations

    @classmethod
    def parse(cls, text: str) -> BoundId:
        try:
            return cls(text.strip().upper())
        except ValueError:
            raise InputError(f"unknown bound id {text!r}") from None


PER_EXPERT = {BoundId.B1, BoundId.B2, BoundId.B4}
ONE_SIDED = {BoundId.B10, BoundId.B11}


@dataclass
class BoundReport:
    bound_id: str
    bound_value: float
    measured: float
    slack: float
    holds: bool
    expert: int | None = None  # worst expert for per-expert bounds

    def to_dict(self) -> dict:
        return asdict(self)


def _get(stats, params, bound_id, name):
    """Look a statistic up in params first, then in stats; a missing value is an input error."""
    if params and params.get(name) is not None:
        return params[name]
    if isinstance(stats, dict):
        value = stats.get(name)
    else:
        value = getattr(stats, name, None)
    if value is None:
        raise InputError(f"{bound_id.value} needs statistic {name!r}")
    return value


def _log_n(stats, params, bid):
    return math.log(_get(stats, params, bid, "n_experts"))


def _prodq_remainder(m, n, log_n):
    return 2.0 * m * (1.0 + math.log(n, 4) + 2.0 * (1.0 + math.floor(math.log2(log_n) / 2.0)) * log_n)


def _one_sided_small_large(s, m, n, log_n):
    """4 sqrt(S (M - S/n) ln N) + 39 M max{1, ln N}, the one-sided weighted-majority bound."""
    return -4.0 * math.sqrt(max(s * (m - s / n), 0.0) * log_n) - 39.0 * m * max(1.0, log_n)


def evaluate_bound(bound_id, stats, params=None, expert=None) -> float:
    """Value of the bound for a finished run.

    ``stats`` is a SequenceStats or a plain mapping with the same field
    names; ``params`` holds the algorithm parameters (eta, bound_m, bound_q,
    range_e). ``expert`` selects k for the per-expert bounds B1, B2 and B4;
    it defaults to the best expert.
    """
    bid = BoundId.parse(bound_id) if isinstance(bound_id, str) else BoundId(bound_id)
    params = dict(params or {})
    if "n_experts" not in params and not isinstance(stats, dict):
        params["n_experts"] = stats.n_experts
    get = lambda name: _get(stats, params, bid, name)  # noqa: E731
    log_n = _log_n(stats, params, bid)

    if bid is BoundId.B1:
        eta = get("eta")
        k = get("best_index") if expert is None else expert
        q_k = float(np.asarray(get("quad"))[k])
        return -log_n / eta - eta * q_k
    if bid is BoundId.B2:
        m, q = get("bound_m"), get("bound_q")
        return -max(2.0 * math.sqrt(q * log_n), 4.0 * m * log_n)
    if bid is BoundId.B3:
        m = get("bound_m")
        n = get("t")
        return -8.0 * math.sqrt(log_n * get("q_star_envelope")) - _prodq_remainder(m, n, log_n)
    if bid is BoundId.B4:
        m = get("abs_max")
        return -2.0 * math.sqrt(get("bound_q") * log_n) - 12.0 * m * (1.0 + log_n)
    if bid is BoundId.B5:
        m = get("abs_max")
        n = get("t")
        q = max(1.0, get("ratio_envelope"))
        return (
            -32.0 * m * math.sqrt(q * log_n)
            - 22.0 * m * (1.0 + log_n)
            - 2.0 * m * math.log2(n)
            - 4.0 * m * math.ceil(math.log2(log_n) / 2.0)
        )
    if bid is BoundId.B6:
        e = get("range_e")
        return -4.0 * math.sqrt(get("cum_variance") * log_n) - 2.0 * e * log_n - e / 2.0
    if bid is BoundId.B7:
        e = get("range_max")
        return -4.0 * math.sqrt(get("cum_variance") * log_n) - 4.0 * e * log_n - 6.0 * e
    if bid is BoundId.B8:
        e = get("range_max")
        return -2.0 * math.sqrt(log_n * get("range_sq_sum")) - 4.0 * e * log_n - 6.0 * e
    if bid is BoundId.B9:
        e = get("bound_m")
        n = get("t")
        return -8.0 * math.sqrt(log_n * get("r_star_envelope")) - _prodq_remainder(e, n, log_n)
    if bid is BoundId.B10:
        m = get("abs_max")
        n = get("t")
        return _one_sided_small_large(abs(get("best_cum")), m, n, log_n)
    if bid is BoundId.B11:
        m = get("bound_m") / 2.0
        n = get("t")
        best = abs(get("best_cum"))
        kappa = 2.0 * _prodq_remainder(m, n, log_n)
        inner = max(min(best, m * n - best), 0.0)
        return (
            -8.0 * math.sqrt(2.0 * m * inner * log_n)
            - 128.0 * m * log_n
            - kappa
            - 8.0 * math.sqrt(2.0 * m * log_n * kappa)
        )
    # B12: the better of the gain translation x - min and the loss translation x - max
    e = get("range_max")
    n = get("t")
    if e == 0.0:
        return 0.0
    gain = float(np.max(get("gain_shift")))
    loss = float(np.min(get("loss_shift")))
    return max(_one_sided_small_large(gain, e, n, log_n), _one_sided_small_large(loss, e, n, log_n))


def b3_leading(stats) -> float:
    """Second-order leading term 8 sqrt(ln N max_s Q*_s)."""
    return 8.0 * math.sqrt(math.log(stats.n_experts) * stats.q_star_envelope)


def first_order_leading(stats, bound_m: float) -> float:
    """First-order comparator 8 sqrt(M ln N max_s A*_s); dominates b3_leading when |x| <= M."""
    return 8.0 * math.sqrt(bound_m * math.log(stats.n_experts) * stats.a_star_envelope)


def _holds(slack: float, measured: float) -> bool:
    return slack >= -HOLDS_RTOL * (1.0 + abs(measured))


def compatible(run, bound_id) -> str | None:
    """None when the bound applies to ``run``, else the reason it does not."""
    bid = BoundId(bound_id)
    algo, p, tr = run.algo, run.params, run.translate
    stats = run.stats
    sched = p.get("schedule")
    if bid is BoundId.B1:
        return None if algo == "prod" else "B1 needs algorithm prod"
    if bid is BoundId.B2:
        if algo != "prod" or p.get("bound_m") is None or p.get("bound_q") is None:
            return "B2 needs prod tuned from --bound-m and --bound-q"
        if run.payoffs.size and run.payoffs.min() < -p["bound_m"]:
            return "B2 needs every payoff >= -M"
        return None
    if bid is BoundId.B3:
        return None if algo == "prod-q" and tr == "none" else "B3 needs untranslated prod-q"
    if bid is BoundId.B4:
        return None if algo == "prod-m" else "B4 needs algorithm prod-m"
    if bid is BoundId.B5:
        return None if algo == "prod-mq" else "B5 needs algorithm prod-mq"
    if bid is BoundId.B6:
        if algo != "wm" or sched != "known_range":
            return "B6 needs wm with a known range E"
        if stats.range_max > p["range_e"]:
            return f"B6 needs every range <= E = {p['range_e']!r}, saw {float(stats.range_max)!r}"
        return None
    if bid in (BoundId.B7, BoundId.B8, BoundId.B12):
        return None if algo == "wm" and sched == "unknown_range" else f"{bid.value} needs wm with unknown range"
    if bid is BoundId.B9:
        if algo != "prod-q" or tr != "reward":
            return "B9 needs prod-q with --translate reward"
        if stats.range_max > p["bound_m"]:
            return "B9 needs every range <= E (the prod-q bound)"
        return None
    kind = GameKind.of(run.payoffs)
    if bid is BoundId.B10:
        if algo != "wm" or sched != "unknown_range":
            return "B10 needs wm with unknown range"
        return None if kind.one_sided else "B10 needs a one-sided (gain or loss) game"
    # B11
    if algo != "prod-q" or tr != "reward":
        return "B11 needs prod-q with --translate reward"
    if not kind.one_sided:
        return "B11 needs a one-sided (gain or loss) game"
    if stats.abs_max > p["bound_m"] / 2.0:
        return "B11 needs every |x| <= M with prod-q run at 2M"
    return None


def verify(run, bound_id, reward_shift: float = 0.0) -> BoundReport:
    """Check one bound against a finished run.

    ``reward_shift`` is subtracted from the forecaster's cumulative reward;
    it exists only to exercise the failure path.
    """
    bid = BoundId.parse(bound_id) if isinstance(bound_id, str) else BoundId(bound_id)
    reason = compatible(run, bid)
    if reason is not None:
        raise ConfigError(reason)
    stats, params = run.stats, run.params
    xhat = stats.cum_reward - reward_shift
    if bid in PER_EXPERT:
        eligible = range(stats.n_experts)
        if bid is not BoundId.B1:
            eligible = [k for k in eligible if stats.quad[k] <= params["bound_q"] * (1.0 + HOLDS_RTOL)]
        worst = None
        for k in eligible:
            value = evaluate_bound(bid, stats, params, expert=k)
            measured = xhat - float(stats.cum_payoff[k])
            slack = measured - value
            if worst is None or slack < worst.slack:
                worst = BoundReport(bid.value, value, measured, slack, _holds(slack, measured), k)
        if worst is None:
            raise ConfigError(f"{bid.value}: no expert satisfies Q_k <= Q")
        return worst
    value = evaluate_bound(bid, stats, params)
    measured = xhat - stats.best_cum
    slack = measured - value
    return BoundReport(bid.value, value, measured, slack, _holds(slack, measured))


def corruption(run, bound_id) -> float:
    """Reward reduction that is guaranteed to break the bound: slack + 10 |bound| + 1."""
    report = verify(run, bound_id)
    return report.slack + 10.0 * abs(report.bound_value) + 1.0
