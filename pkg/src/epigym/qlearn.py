"""Tabular Q-learning on discretized compartment observations.

Observations (fractions in [0,1]) are bucketed per dimension; actions are a
strided subset of the environment's level range. Exploration is
epsilon-greedy with a linear decay across episodes. Ties always resolve to
the earliest level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import DiscreteRange, Environment
from .data_io import append_eval, config_digest, new_eval_record
from .errors import ComponentOutOfRange, ConfigInvalid

StateBucket = tuple[int, ...]


@dataclass(frozen=True)
class DiscretizerConfig:
    bins_per_dim: int = 10
    action_stride: int = 10

    def __post_init__(self):
        if self.bins_per_dim < 1:
            raise ConfigInvalid("bins_per_dim must be >= 1")
        if self.action_stride < 1:
            raise ConfigInvalid("action_stride must be >= 1")


@dataclass(frozen=True)
class QLearnConfig:
    episodes: int
    learning_rate: float = 0.2
    discount: float = 0.95
    epsilon_start: float = 1.0
    epsilon_end: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.episodes < 1:
            raise ConfigInvalid("episodes must be >= 1")
        if not 0 < self.learning_rate <= 1:
            raise ConfigInvalid("learning_rate must be in (0, 1]")
        if not 0 <= self.discount <= 1:
            raise ConfigInvalid("discount must be in [0, 1]")
        for name in ("epsilon_start", "epsilon_end"):
            if not 0 <= getattr(self, name) <= 1:
                raise ConfigInvalid(f"{name} must be in [0, 1]")
        if self.epsilon_end > self.epsilon_start:
            raise ConfigInvalid("epsilon_end must be <= epsilon_start")


@dataclass
class QTable:
    """Sparse action-value table; unvisited pairs read as 0."""

    levels: tuple[int, ...]
    values: dict[tuple[StateBucket, int], float] = field(default_factory=dict)
    visit_counts: dict[tuple[StateBucket, int], int] = field(default_factory=dict)

    def value(self, bucket: StateBucket, level: int) -> float:
        return self.values.get((bucket, level), 0.0)

    def best_level(self, bucket: StateBucket) -> int:
        """Greedy level for a bucket; earliest level wins ties."""
        best = self.levels[0]
        best_value = self.value(bucket, best)
        for level in self.levels[1:]:
            v = self.value(bucket, level)
            if v > best_value:
                best, best_value = level, v
        return best

    def max_value(self, bucket: StateBucket) -> float:
        return max(self.value(bucket, level) for level in self.levels)


def action_levels(space: DiscreteRange, cfg: DiscretizerConfig) -> tuple[int, ...]:
    """Strided level grid, floor-spaced from the low end of the range."""
    return tuple(range(space.low, space.high + 1, cfg.action_stride))


def discretize(observation, cfg: DiscretizerConfig) -> StateBucket:
    """Per-dimension bucket index: floor(value * bins), clamped at bins-1."""
    arr = np.asarray(observation, dtype=float)
    if np.any(arr < 0) or np.any(arr > 1):
        raise ComponentOutOfRange(f"observation components must be in [0, 1]: {arr}")
    buckets = np.minimum((arr * cfg.bins_per_dim).astype(int), cfg.bins_per_dim - 1)
    return tuple(int(b) for b in buckets)


def q_update(q: QTable, s: StateBucket, a: int, r: float, s_next: StateBucket,
             done: bool, cfg: QLearnConfig) -> QTable:
    """Standard one-step update toward r + discount * max_a' Q(s', a')."""
    target = r if done else r + cfg.discount * q.max_value(s_next)
    old = q.value(s, a)
    q.values[(s, a)] = old + cfg.learning_rate * (target - old)
    q.visit_counts[(s, a)] = q.visit_counts.get((s, a), 0) + 1
    return q


class GreedyPolicy:
    """Greedy policy extracted from a table; unknown buckets fall back to a default level."""

    def __init__(self, q: QTable, dcfg: DiscretizerConfig, default_level: int = 0):
        self.q = q
        self.dcfg = dcfg
        self.default_level = default_level

    def level_for(self, bucket: StateBucket) -> int:
        if not any((bucket, level) in self.q.values for level in self.q.levels):
            return self.default_level
        return self.q.best_level(bucket)

    def __call__(self, observation, _step: int = 0) -> int:
        return self.level_for(discretize(observation, self.dcfg))


def greedy_policy(q: QTable, dcfg: DiscretizerConfig | None = None) -> GreedyPolicy:
    return GreedyPolicy(q, dcfg or DiscretizerConfig())


def q_learn(env: Environment, dcfg: DiscretizerConfig, qcfg: QLearnConfig,
            ledger_path=None) -> tuple[QTable, GreedyPolicy]:
    """Train with epsilon-greedy episodes; returns the table and its greedy policy."""
    space = env.action_space
    if not isinstance(space, DiscreteRange):
        raise ConfigInvalid("q_learn requires a discrete action space")
    levels = action_levels(space, dcfg)
    q = QTable(levels=levels)
    rng = np.random.default_rng(qcfg.seed)
    env_type = env.env_type
    digest = config_digest(env.config_dict())

    for episode in range(qcfg.episodes):
        frac = episode / (qcfg.episodes - 1) if qcfg.episodes > 1 else 0.0
        epsilon = qcfg.epsilon_start + (qcfg.epsilon_end - qcfg.epsilon_start) * frac
        episode_seed = int(rng.integers(2 ** 63))
        observation = env.reset(episode_seed)
        bucket = discretize(observation, dcfg)
        chosen: list[int] = []
        total = 0.0
        done = False
        while not done:
            if rng.uniform() < epsilon:
                level = levels[int(rng.integers(len(levels)))]
            else:
                level = q.best_level(bucket)
            result = env.step(level)
            next_bucket = discretize(result.observation, dcfg)
            q_update(q, bucket, level, result.reward, next_bucket, result.done, qcfg)
            bucket = next_bucket
            chosen.append(level)
            total += result.reward
            done = result.done
        if ledger_path is not None:
            append_eval(ledger_path, new_eval_record(
                env_type, digest, "q_learn", seed=episode_seed,
                action=chosen, reward=total))
    return q, GreedyPolicy(q, dcfg, default_level=levels[0])
