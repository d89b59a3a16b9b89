import math

import numpy as np
import pytest

from secondorder.adversary import GeneratorSpec, generate
from secondorder.bounds import (
    BoundId,
    ConfigError,
    b3_leading,
    compatible,
    corruption,
    evaluate_bound,
    first_order_leading,
    verify,
)
from secondorder.core import InputError
from secondorder.runner import RunConfig, check, execute

ALL = [b.value for b in BoundId]


def test_b1_zero_quadratic_term():
    stats = {"n_experts": 5, "quad": [0.0] * 5, "best_index": 0}
    assert evaluate_bound("B1", stats, {"eta": 0.5}) == pytest.approx(-2 * math.log(5), rel=1e-15)


def test_b6_direct():
    stats = {"n_experts": math.e ** 2, "cum_variance": 0.0}
    assert evaluate_bound("B6", stats, {"range_e": 1.0}) == pytest.approx(-4.5, rel=1e-14)


def test_b3_remainder_single_round():
    M = 0.75
    stats = {"n_experts": math.e, "q_star_envelope": 0.0, "t": 1}
    assert evaluate_bound("B3", stats, {"bound_m": M}) == pytest.approx(-6 * M, rel=1e-14)


def test_b5_formula():
    stats = {"n_experts": 16, "abs_max": 2.0, "t": 64, "ratio_envelope": 9.0}
    ln = math.log(16)
    want = -32 * 2 * math.sqrt(9 * ln) - 22 * 2 * (1 + ln) - 2 * 2 * 6 - 4 * 2 * math.ceil(math.log2(ln) / 2)
    assert evaluate_bound("B5", stats) == pytest.approx(want, rel=1e-14)


def test_b11_formula():
    stats = {"n_experts": 4, "best_cum": -30.0, "t": 100}
    M, ln = 0.5, math.log(4)
    kappa = 4 * M * (1 + math.log(100, 4) + 2 * (1 + math.floor(math.log2(ln) / 2)) * ln)
    want = -8 * math.sqrt(2 * M * min(30, M * 100 - 30) * ln) - 128 * M * ln - kappa - 8 * math.sqrt(2 * M * ln * kappa)
    assert evaluate_bound("B11", stats, {"bound_m": 2 * M}) == pytest.approx(want, rel=1e-14)


def test_b12_takes_better_translation():
    stats = {"n_experts": 3, "range_max": 1.0, "t": 10, "gain_shift": [0.0, 1.0, 9.0], "loss_shift": [1.0, 9.0, 10.0]}
    ln = math.log(3)
    gain = -4 * math.sqrt(9 * (1 - 0.9) * ln) - 39 * max(1, ln)
    loss = -4 * math.sqrt(1 * (1 - 0.1) * ln) - 39 * max(1, ln)
    assert evaluate_bound("B12", stats) == pytest.approx(max(gain, loss), rel=1e-14)


def test_missing_statistic_is_named():
    with pytest.raises(InputError, match="q_star_envelope"):
        evaluate_bound("B3", {"n_experts": 2, "t": 5}, {"bound_m": 1.0})
    with pytest.raises(InputError, match="eta"):
        evaluate_bound("B1", {"n_experts": 2, "quad": [0, 0], "best_index": 0})
    with pytest.raises(InputError):
        evaluate_bound("B99", {})


def _run(algo, gen, N=4, n=300, seed=0, **kw):
    return execute(RunConfig(algo=algo, gen=gen, experts=N, rounds=n, seed=seed, **kw))


CASES = [
    ("prod", "uniform_signed:M=1", {"eta": 0.25}),
    ("prod", "outlier:M=0.5,spike=10", {}),
    ("prod-q", "leader_flip:M=2", {}),
    ("prod-m", "uniform_signed:M=3", {}),
    ("prod-mq", "outlier:M=1,spike=30", {}),
    ("wm", "uniform_signed:M=1", {"range_e": 2.0}),
    ("wm", "uniform_signed:M=1", {}),
    ("wm", "bernoulli_gain:M=1", {}),
    ("wm", "loss_game:M=2", {}),
    ("prod-q", "bernoulli_gain:M=1", {"translate": "reward"}),
    ("prod-q", "loss_game:M=1", {"translate": "reward"}),
]


@pytest.mark.parametrize("algo, gen, kw", CASES)
@pytest.mark.parametrize("seed", range(3))
def test_compatible_bounds_hold(algo, gen, kw, seed):
    run = _run(algo, gen, seed=seed, **kw)
    reports = check(run)
    assert reports
    assert all(r.holds for r in reports), reports
    for r in reports:
        assert r.slack == pytest.approx(r.measured - r.bound_value, abs=1e-12)
        assert r.bound_value <= 0


@pytest.mark.parametrize("algo, gen, kw", CASES)
def test_corruption_breaks_every_bound(algo, gen, kw):
    run = _run(algo, gen, **kw)
    for bid in [r.bound_id for r in check(run)]:
        report = verify(run, bid, reward_shift=corruption(run, bid))
        assert not report.holds and report.slack < -10 * abs(report.bound_value)


@pytest.mark.parametrize("algo, kw", [("prod", {"eta": 0.3}), ("prod", {}), ("prod-q", {}), ("prod-m", {}),
                                      ("prod-mq", {}), ("wm", {"range_e": 1.0}), ("wm", {}),
                                      ("prod-q", {"translate": "reward"})])
def test_zero_sequence_holds(algo, kw):
    run = execute(RunConfig(algo=algo, **kw), np.zeros((12, 3)))
    for r in check(run):
        assert r.measured == 0 and r.holds


def test_mismatches_are_config_errors():
    prod_run = _run("prod", "uniform_signed", eta=0.1)
    with pytest.raises(ConfigError):
        verify(prod_run, "B3")
    with pytest.raises(ConfigError, match="B2"):
        verify(prod_run, "B2")  # needs M and Q, not a bare eta
    wm_signed = _run("wm", "uniform_signed")
    with pytest.raises(ConfigError, match="one-sided"):
        verify(wm_signed, "B10")
    pq = _run("prod-q", "uniform_signed", translate="reward")
    with pytest.raises(ConfigError, match="one-sided"):
        verify(pq, "B11")
    small_e = _run("wm", "uniform_signed:M=1", range_e=0.5)
    with pytest.raises(ConfigError, match="B6"):
        verify(small_e, "B6")
    assert compatible(small_e, "B6") is not None


@pytest.mark.parametrize("alpha", [0.25, 3.0, 16.0])
def test_bound_values_scale_with_payoffs(alpha):
    base = {"n_experts": 6, "t": 500, "quad": [4.0] * 6, "best_index": 2, "q_star_envelope": 7.5,
            "abs_max": 1.5, "ratio_envelope": 3.0, "cum_variance": 12.0, "range_max": 2.0,
            "range_sq_sum": 90.0, "r_star_envelope": 5.0, "best_cum": 40.0,
            "gain_shift": [100.0, 200.0, 10.0, 0.0, 3.0, 1.0], "loss_shift": [5.0, 80.0, 300.0, 1.0, 2.0, 9.0]}
    params = {"eta": 0.2, "bound_m": 2.0, "bound_q": 30.0, "range_e": 2.5}
    squared = {"quad", "q_star_envelope", "cum_variance", "range_sq_sum", "r_star_envelope"}
    linear = {"abs_max", "range_max", "best_cum", "gain_shift", "loss_shift"}
    scaled = {k: (np.multiply(v, alpha ** 2) if k in squared else np.multiply(v, alpha) if k in linear else v)
              for k, v in base.items()}
    sparams = {"eta": 0.2 / alpha, "bound_m": 2.0 * alpha, "bound_q": 30.0 * alpha ** 2, "range_e": 2.5 * alpha}
    for bid in ALL:
        a = evaluate_bound(bid, base, params)
        b = evaluate_bound(bid, scaled, sparams)
        assert b == pytest.approx(alpha * a, rel=1e-12), bid


def test_b6_to_b9_translation_invariant():
    x = generate(GeneratorSpec("uniform_signed", 4, 400, seed=3)).payoffs
    mu = np.random.default_rng(1).uniform(-0.5, 0.5, size=400)
    pairs = [(RunConfig(algo="wm", range_e=3.0), "B6"), (RunConfig(algo="wm"), "B7"),
             (RunConfig(algo="wm"), "B8"), (RunConfig(algo="prod-q", translate="reward", bound_m=4.0), "B9")]
    for cfg, bid in pairs:
        a = verify(execute(cfg, x), bid).bound_value
        b = verify(execute(cfg, x - mu[:, None]), bid).bound_value
        assert b == pytest.approx(a, rel=1e-9), bid


@pytest.mark.parametrize("seed", range(5))
def test_second_order_term_below_first_order(seed):
    spec = GeneratorSpec("outlier", 4, 1000, seed=seed, magnitude=0.5, spike=20.0, rate=0.01)
    run = execute(RunConfig(algo="prod-q", gen="outlier:M=0.5,spike=20,rate=0.01", experts=4, rounds=1000, seed=seed))
    assert b3_leading(run.stats) <= first_order_leading(run.stats, spec.declared_magnitude)
    assert run.stats.q_star <= spec.declared_magnitude * run.stats.a_star + 1e-9
