"""Environment abstraction: action spaces, the reset/step contract, episode bookkeeping.

Every model wrapper implements :class:`Environment`; every algorithm consumes
only ``reset``/``step``/``action_space``. Stochastic draws are owned by the
environment and are a pure function of the reset seed.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .errors import ActionOutOfSpace, EpisodeFinished, ResetRequired

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class DiscreteRange:
    """Inclusive integer range of scalar actions (stringency levels)."""

    low: int
    high: int

    def __post_init__(self):
        if self.low > self.high:
            raise ValueError(f"empty range: low={self.low} > high={self.high}")

    @property
    def size(self) -> int:
        return self.high - self.low + 1

    def contains(self, action) -> bool:
        if isinstance(action, (bool, np.bool_)):
            return False
        if isinstance(action, (int, np.integer)):
            return self.low <= int(action) <= self.high
        return False

    def sample(self, rng: np.random.Generator) -> int:
        return int(rng.integers(self.low, self.high + 1))


@dataclass(frozen=True)
class ContinuousBox:
    """Axis-aligned box of real-vector actions."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        if len(self.lower) != len(self.upper) or not self.lower:
            raise ValueError("lower/upper must be equal-length, nonempty")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("every lower bound must be strictly below its upper bound")

    @property
    def dims(self) -> int:
        return len(self.lower)

    def contains(self, action) -> bool:
        try:
            arr = np.asarray(action, dtype=float)
        except (TypeError, ValueError):
            return False
        if arr.shape != (self.dims,):
            return False
        return bool(np.all(arr >= self.lower) and np.all(arr <= self.upper))

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower, self.upper)


ActionSpace = Union[DiscreteRange, ContinuousBox]
Action = Union[int, np.ndarray]


def sample_action(space: ActionSpace, rng: np.random.Generator) -> Action:
    """Uniform draw from the space, advancing ``rng`` deterministically."""
    return space.sample(rng)


@dataclass(frozen=True)
class StepResult:
    """The step contract: observation, reward, done, plus scalar metadata."""

    observation: np.ndarray
    reward: float
    done: bool
    info: dict[str, float]


@dataclass
class EpisodeRecord:
    """One full episode: paired actions and step results."""

    actions: list[Action] = field(default_factory=list)
    step_results: list[StepResult] = field(default_factory=list)
    total_reward: float = 0.0
    seed: int = 0

    @property
    def rewards(self) -> list[float]:
        return [r.reward for r in self.step_results]


class Environment(ABC):
    """Reset/step interface every model wrapper implements.

    Subclasses provide ``_do_reset`` and ``_do_step``; this base owns the
    episode bookkeeping: the step counter, the done flag, action-space
    membership checks (rejected actions never touch model state), and the
    per-episode random generator seeded at reset.
    """

    env_type: str = "environment"

    def __init__(self, action_space: ActionSpace, horizon: int,
                 observation_names: tuple[str, ...]):
        if horizon < 1:
            raise ValueError("horizon must be >= 1")
        self._action_space = action_space
        self._horizon = horizon
        self._observation_names = observation_names
        self._step_index: int | None = None
        self._done = False
        self._seed = 0
        self._rng = np.random.default_rng(0)

    @property
    def action_space(self) -> ActionSpace:
        return self._action_space

    @property
    def horizon(self) -> int:
        return self._horizon

    @property
    def observation_names(self) -> tuple[str, ...]:
        """Meaning of each observation component, in order."""
        return self._observation_names

    @property
    def step_index(self) -> int:
        return self._step_index or 0

    @property
    def done(self) -> bool:
        return self._done

    @property
    def seed(self) -> int:
        """Seed of the current episode (set by the last reset)."""
        return self._seed

    def config_dict(self) -> dict:
        """JSON-serializable configuration; hashed for the evaluation ledger."""
        return {}

    def reset(self, seed: int = 0) -> np.ndarray:
        self._seed = int(seed) & _SEED_MASK
        self._rng = np.random.default_rng(self._seed)
        self._step_index = 0
        self._done = False
        return self._do_reset()

    def step(self, action: Action) -> StepResult:
        if self._step_index is None:
            raise ResetRequired("call reset() before step()")
        if self._done:
            raise EpisodeFinished(f"episode already finished after {self._step_index} steps")
        if not self._action_space.contains(action):
            raise ActionOutOfSpace(f"action {action!r} not in {self._action_space}")
        observation, reward, info = self._do_step(action)
        self._step_index += 1
        self._done = self._step_index >= self._horizon
        return StepResult(observation=observation, reward=float(reward),
                          done=self._done, info=info)

    @abstractmethod
    def _do_reset(self) -> np.ndarray:
        """Restore the configured initial state; return the initial observation."""

    @abstractmethod
    def _do_step(self, action: Action) -> tuple[np.ndarray, float, dict[str, float]]:
        """Advance the wrapped model by one step; action is already validated."""


Policy = Union[Sequence[Action], Callable[[np.ndarray, int], Action]]


def _as_callable(policy: Policy) -> Callable[[np.ndarray, int], Action]:
    if callable(policy):
        return policy
    actions = list(policy)

    def lookup(_observation: np.ndarray, step: int) -> Action:
        return actions[step]

    return lookup


def run_episode(env: Environment, policy: Policy, seed: int = 0) -> EpisodeRecord:
    """Reset with ``seed`` and step until done, recording the full episode."""
    choose = _as_callable(policy)
    record = EpisodeRecord(seed=int(seed) & _SEED_MASK)
    observation = env.reset(seed)
    step = 0
    while True:
        action = choose(observation, step)
        result = env.step(action)
        record.actions.append(action)
        record.step_results.append(result)
        record.total_reward += result.reward
        observation = result.observation
        step += 1
        if result.done:
            return record
