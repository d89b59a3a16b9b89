"""Run configuration, execution, trace output and the default verification catalog."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import bounds as bd
from .adversary import GeneratorSpec, generate, parse_generator
from .core import InputError, PayoffSequence, StatsHistory
from .prod import Prod, ProdM, ProdMQ, ProdQ, theorem1_eta
from .translation import RNG_ALGORITHM, Translated, TranslationRule
from .wm import WeightedMajority

ALGORITHMS = ("prod", "prod-q", "prod-m", "prod-mq", "wm")


@dataclass
class RunConfig:
    algo: str = "prod-mq"
    eta: float | None = None
    bound_m: float | None = None
    bound_q: float | None = None
    range_e: float | None = None
    translate: str = "none"
    gen: str | None = "uniform_signed"
    input: str | None = None
    experts: int = 4
    rounds: int = 100
    seed: int = 0
    bounds: list[str] | None = None  # None means every compatible bound
    corrupt: bool = False

    def validate(self, need_source: bool = True):
        if self.algo not in ALGORITHMS:
            raise InputError(f"unknown algorithm {self.algo!r}; expected one of {ALGORITHMS}")
        if self.translate not in {r.value for r in TranslationRule}:
            raise InputError(f"unknown translation rule {self.translate!r}")
        for name in ("eta", "bound_m", "bound_q", "range_e"):
            v = getattr(self, name)
            if v is not None and not (v > 0 and math.isfinite(v)):
                raise InputError(f"{name} must be positive and finite")
        if need_source and self.input is None and self.gen is None:
            raise InputError("need a generator or an input file")


@dataclass
class Run:
    config: RunConfig
    algo: str
    params: dict
    translate: str
    payoffs: np.ndarray
    probs: np.ndarray
    epochs: np.ndarray
    history: StatsHistory
    generator: GeneratorSpec | None = None
    reports: list = field(default_factory=list)

    @property
    def stats(self):
        return self.history.final


def load_payoffs(config: RunConfig) -> tuple[PayoffSequence, GeneratorSpec | None]:
    if config.input is not None:
        return read_payoff_csv(config.input), None
    spec = parse_generator(config.gen, config.experts, config.rounds, config.seed)
    return generate(spec), spec


def resolve_params(config: RunConfig, x: np.ndarray, spec: GeneratorSpec | None) -> dict:
    """Fill unset algorithm parameters from the generator's declared magnitude or from hindsight."""
    N = x.shape[1]
    observed_m = float(np.abs(x).max()) if x.size else 0.0
    declared_m = spec.declared_magnitude if spec is not None else (observed_m or 1.0)
    hindsight_q = float(np.sum(x * x, axis=0).max()) if x.size else 0.0
    algo = config.algo
    if algo == "prod":
        if config.eta is not None:
            return {"eta": config.eta, "bound_m": config.bound_m, "bound_q": config.bound_q}
        m = config.bound_m or declared_m
        q = config.bound_q or hindsight_q or m * m
        return {"eta": theorem1_eta(m, q, N), "bound_m": m, "bound_q": q}
    if algo == "prod-q":
        m = config.bound_m
        if m is None:
            # translated payoffs span up to twice the magnitude
            m = declared_m if config.translate == "none" else 2.0 * declared_m
        return {"bound_m": m}
    if algo == "prod-m":
        return {"bound_q": config.bound_q or hindsight_q or 1.0}
    if algo == "prod-mq":
        return {}
    if config.eta is not None:
        return {"schedule": "fixed", "eta": config.eta}
    if config.range_e is not None:
        return {"schedule": "known_range", "range_e": config.range_e}
    return {"schedule": "unknown_range"}


def make_forecaster(algo: str, params: dict, n_experts: int):
    if algo == "prod":
        return Prod(n_experts, params["eta"])
    if algo == "prod-q":
        return ProdQ(n_experts, params["bound_m"])
    if algo == "prod-m":
        return ProdM(n_experts, params["bound_q"])
    if algo == "prod-mq":
        return ProdMQ(n_experts)
    return WeightedMajority(
        n_experts, params["schedule"], eta=params.get("eta"), range_bound=params.get("range_e")
    )


def play(algo: str, params: dict, x: np.ndarray, translate: str = "none"):
    """Predictions and prediction-time epoch labels for the whole sequence."""
    n, N = x.shape
    if algo == "wm" and translate == "none":
        return WeightedMajority.run(x, params["schedule"], params.get("eta"), params.get("range_e"))
    if translate == "none":
        if algo == "prod":
            return Prod.run(x, params["eta"])
        if algo == "prod-q":
            return ProdQ.run(x, params["bound_m"])
        if algo == "prod-m":
            return ProdM.run(x, params["bound_q"])
        return ProdMQ.run(x)
    f = make_forecaster(algo, params, N)
    if translate != "none":
        f = Translated(f, translate)
    probs = np.empty((n, N))
    epochs = np.empty(n, dtype=int)
    for t in range(n):
        epochs[t] = f.epoch
        probs[t] = f.step(x[t])
    return probs, epochs


def execute(config: RunConfig, payoffs=None) -> Run:
    """Run ``config``; explicit ``payoffs`` take the place of its generator or input file."""
    if payoffs is not None:
        seq, spec = PayoffSequence(payoffs), None
        config = replace(config, gen=None, input=None)
        config.validate(need_source=False)
    else:
        config.validate()
        seq, spec = load_payoffs(config)
    x = seq.payoffs
    params = resolve_params(config, x, spec)
    probs, epochs = play(config.algo, params, x, config.translate)
    history = StatsHistory.compute(x, probs)
    return Run(config, config.algo, params, config.translate, x, probs, epochs, history, spec)


def compatible_bounds(run: Run) -> list[str]:
    return [b.value for b in bd.BoundId if bd.compatible(run, b) is None]


def check(run: Run, bound_ids=None) -> list:
    """BoundReports for the requested ids (default: all compatible); raises ConfigError on a mismatch."""
    ids = compatible_bounds(run) if bound_ids is None else [bd.BoundId.parse(b).value for b in bound_ids]
    reports = []
    for b in ids:
        shift = bd.corruption(run, b) if run.config.corrupt else 0.0
        reports.append(bd.verify(run, b, reward_shift=shift))
    run.reports = reports
    return reports


# ---- files


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return "" if math.isnan(v) else repr(v)


def trace_rows(run: Run):
    n, N = run.payoffs.shape
    h = run.history
    header = ["t", *(f"x_{i + 1}" for i in range(N)), *(f"p_{i + 1}" for i in range(N)),
              "xhat", "Xstar", "regret", "VarZ", "E_t", "M_t", "Qstar", "epoch"]
    yield header
    for t in range(n):
        yield [
            str(t + 1),
            *(fmt(v) for v in run.payoffs[t]),
            *(fmt(v) for v in run.probs[t]),
            fmt(h.xhat[t]),
            fmt(h.best_cum[t]),
            fmt(h.regret[t]),
            fmt(h.variance[t]),
            fmt(h.range_eff[t]),
            fmt(h.magnitude[t]),
            fmt(h.q_star[t]),
            fmt(run.epochs[t]),
        ]


def summary(run: Run) -> dict:
    cfg = asdict(run.config)
    return {
        "config": cfg,
        "algorithm": run.algo,
        "params": run.params,
        "translate": run.translate,
        "generator": run.generator.to_dict() if run.generator else None,
        "rng": RNG_ALGORITHM,
        "num_experts": int(run.payoffs.shape[1]),
        "num_rounds": int(run.payoffs.shape[0]),
        "epochs": int(run.epochs.max()) + 1 if run.epochs.size else 0,
        "stats": run.stats.summary(),
        "bounds": [r.to_dict() for r in run.reports],
    }


def atomic_write(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_outputs(run: Run, out_dir: str, stem: str = "run") -> tuple[str, str]:
    trace = os.path.join(out_dir, f"{stem}_trace.csv")
    summ = os.path.join(out_dir, f"{stem}_summary.json")
    atomic_write(trace, csv_text(trace_rows(run)))
    atomic_write(summ, json_text(summary(run)))
    return trace, summ


def read_payoff_csv(path: str) -> PayoffSequence:
    """Read a payoff file with header ``t,x_1,...,x_N``."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    if not rows:
        raise InputError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    N = len(header) - 1
    if N < 2 or header != ["t", *(f"x_{i + 1}" for i in range(N))]:
        raise InputError(f"{path}: header must be t,x_1,...,x_N with N >= 2")
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != N + 1:
            raise InputError(f"{path}:{lineno}: expected {N + 1} fields, got {len(row)}")
        try:
            data.append([float(v) for v in row[1:]])
        except ValueError:
            raise InputError(f"{path}:{lineno}: non-numeric payoff") from None
    if not data:
        raise InputError(f"{path} has no rounds")
    return PayoffSequence(np.array(data))


def write_payoff_csv(path: str, seq: PayoffSequence):
    N = seq.num_experts
    rows = [["t", *(f"x_{i + 1}" for i in range(N))]]
    rows += [[str(t + 1), *(repr(float(v)) for v in row)] for t, row in enumerate(seq.payoffs)]
    atomic_write(path, csv_text(rows))


# ---- default catalog: every bound paired with an algorithm and generators it applies to


def default_catalog(seeds=(0, 1, 2), sizes=((2, 200), (8, 1000))) -> list[tuple[RunConfig, list[str]]]:
    signed = ["uniform_signed:M=1", "leader_flip:M=2,period=25", "outlier:M=0.5,spike=20,rate=0.02"]
    one_sided = ["bernoulli_gain:M=1,p=0.3", "loss_game:M=3"]
    per_signed = [
        (dict(algo="prod"), ["B1", "B2"]),
        (dict(algo="prod-q"), ["B3"]),
        (dict(algo="prod-m"), ["B4"]),
        (dict(algo="prod-mq"), ["B5"]),
        (dict(algo="wm"), ["B7", "B8", "B12"]),
        (dict(algo="prod-q", translate="reward"), ["B9"]),
    ]
    plan = [(dict(kw, gen=gen), ids) for gen in signed for kw, ids in per_signed]
    plan.append((dict(algo="wm", range_e=2.0, gen="uniform_signed:M=1"), ["B6"]))
    plan.append((dict(algo="prod", eta=0.05, gen="uniform_signed:M=1"), ["B1"]))
    for gen in one_sided:
        plan.append((dict(algo="wm", gen=gen), ["B7", "B10"]))
        plan.append((dict(algo="prod-q", translate="reward", gen=gen), ["B9", "B11"]))
    out = []
    for kw, ids in plan:
        for N, n in sizes:
            for seed in seeds:
                out.append((RunConfig(experts=N, rounds=n, seed=seed, **kw), ids))
    return out


def with_seed(config: RunConfig, seed: int) -> RunConfig:
    return replace(config, seed=seed)
