"""Seeded payoff-sequence generators and the transforms used to stress forecasters."""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np

from .core import GameKind, InputError, PayoffSequence
from .translation import make_rng

KINDS = ("uniform_signed", "bernoulli_gain", "loss_game", "outlier", "leader_flip")


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    n_experts: int
    n_rounds: int
    seed: int = 0
    magnitude: float = 1.0
    p: float = 0.5  # bernoulli_gain success rate
    spike: float = 50.0  # outlier spike magnitude
    rate: float = 0.01  # outlier spike rate
    period: int = 10  # leader_flip block length

    def validate(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown generator kind {self.kind!r}; expected one of {KINDS}")
        if self.n_experts < 2 or self.n_rounds < 1:
            raise InputError("generators need N >= 2 and n >= 1")
        if not self.magnitude > 0:
            raise InputError("magnitude must be positive")
        if not 0 <= self.p <= 1 or not 0 <= self.rate <= 1:
            raise InputError("probabilities must lie in [0, 1]")
        if self.kind == "outlier" and not self.spike > 0:
            raise InputError("spike magnitude must be positive")
        if self.period < 1:
            raise InputError("period must be >= 1")

    @property
    def declared_magnitude(self) -> float:
        """Upper bound on |x| for every payoff the generator can emit."""
        if self.kind == "outlier":
            return max(self.magnitude, self.spike)
        return self.magnitude

    @property
    def game_kind(self) -> GameKind:
        return {"bernoulli_gain": GameKind.GAIN, "loss_game": GameKind.LOSS}.get(self.kind, GameKind.SIGNED)

    def with_(self, **changes) -> GeneratorSpec:
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


def generate(spec: GeneratorSpec) -> PayoffSequence:
    spec.validate()
    rng = make_rng(spec.seed)
    n, N, M = spec.n_rounds, spec.n_experts, spec.magnitude
    if spec.kind == "uniform_signed":
        x = rng.uniform(-M, M, size=(n, N))
    elif spec.kind == "bernoulli_gain":
        x = M * (rng.random((n, N)) < spec.p)
    elif spec.kind == "loss_game":
        x = -rng.uniform(0.0, M, size=(n, N))
    elif spec.kind == "outlier":
        x = rng.uniform(-M, M, size=(n, N))
        hit = rng.random((n, N)) < spec.rate
        signs = np.where(rng.random((n, N)) < 0.5, -1.0, 1.0)
        x = np.where(hit, signs * spec.spike, x)
    else:
        x = _leader_flip(rng, n, N, M, spec.period)
    return PayoffSequence(x)


def _leader_flip(rng, n, N, M, period):
    # each expert has its own volatility, so when the favoured expert rotates
    # the new leader's quadratic penalty can sit below the old one's
    volatility = (np.arange(N) + 1.0) / N
    noise = np.where(rng.random((n, N)) < 0.5, -1.0, 1.0) * rng.uniform(0.5, 1.0, size=(n, N))
    favoured = (np.arange(n) // period) % N
    drift = np.zeros((n, N))
    drift[np.arange(n), favoured] = 0.5
    return M * (0.5 * volatility * noise + drift)


def scale(seq: PayoffSequence, alpha: float) -> PayoffSequence:
    if not alpha > 0:
        raise InputError("scale factor must be positive")
    return PayoffSequence(alpha * seq.payoffs)


def translate(seq: PayoffSequence, mu) -> PayoffSequence:
    """Subtract mu_t from every payoff of round t."""
    mu = np.asarray(mu, dtype=float)
    if mu.shape != (seq.num_rounds,):
        raise InputError(f"translation needs {seq.num_rounds} shifts, got shape {mu.shape}")
    return PayoffSequence(seq.payoffs - mu[:, None])


def negate(seq: PayoffSequence) -> PayoffSequence:
    return PayoffSequence(-seq.payoffs)


def parse_generator(text: str, n_experts: int, n_rounds: int, seed: int) -> GeneratorSpec:
    """Parse ``kind[:key=value,...]``, e.g. ``outlier:magnitude=1,spike=40``."""
    kind, _, rest = text.partition(":")
    fields = {"kind": kind.strip(), "n_experts": n_experts, "n_rounds": n_rounds, "seed": seed}
    aliases = {"M": "magnitude", "m": "magnitude"}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, sep, value = item.partition("=")
        key = aliases.get(key.strip(), key.strip())
        if not sep or key not in GeneratorSpec.__dataclass_fields__ or key in fields:
            raise InputError(f"bad generator parameter {item!r}")
        fields[key] = int(value) if key == "period" else float(value)
    spec = GeneratorSpec(**fields)
    spec.validate()
    return spec
