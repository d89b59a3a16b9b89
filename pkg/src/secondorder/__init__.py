"""Second-order regret forecasters for prediction with expert advice, with a bound-checking harness."""

from .adversary import GeneratorSpec, generate, negate, parse_generator, scale, translate
from .bounds import BoundId, BoundReport, ConfigError, evaluate_bound, verify
from .core import (
    GameKind,
    InputError,
    PayoffSequence,
    SequenceStats,
    StatsHistory,
    best_action,
    effective_range,
    magnitude_tracker,
    range_tracker,
)
from .prod import Prod, ProdM, ProdMQ, ProdQ, ValidityError, theorem1_eta
from .runner import RunConfig, execute
from .translation import (
    RNG_ALGORITHM,
    RandomizedPlay,
    Translated,
    TranslationRule,
    bernstein_band,
    randomized_play,
    sample_action,
)
from .wm import C, WeightedMajority, phi

__all__ = [name for name in dir() if not name.startswith("_")]
