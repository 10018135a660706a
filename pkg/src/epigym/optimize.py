"""Bayesian optimization over the step interface, plus random/exhaustive baselines.

A design point is whatever one evaluation consumes: the single normalized
parameter vector for calibration environments (horizon 1), or a full
stringency-level sequence for planning environments, scored by episode total
reward. The first ``init_random`` evaluations are uniform draws (without
replacement when a discrete space fits inside the budget); afterwards the
next design maximizes the UCB score of a GP refit on everything seen so far.
Every evaluation is appended to the shared ledger when a path is given.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .core import ContinuousBox, DiscreteRange, Environment, run_episode
from .data_io import EvalRecord, append_eval, config_digest, new_eval_record
from .errors import BudgetTooSmall, ConfigInvalid, SpaceTooLarge
from .gp import (
    GPPosterior,
    default_hyper_grid,
    default_hyperparams,
    fit_hyperparams,
    gp_fit,
    gp_predict_batch,
    ucb_batch,
)
from .models import MAX_LEVEL

#: discrete spaces up to this size are fully enumerated during acquisition
ACQUISITION_ENUM_LIMIT = 10_000


@dataclass(frozen=True)
class BOConfig:
    budget: int
    init_random: int
    ucb_beta: float = 4.0
    candidate_count: int = 2048
    seed: int = 0

    def __post_init__(self):
        if self.budget < 2:
            raise BudgetTooSmall("budget must be >= 2")
        if not 0 < self.init_random < self.budget:
            raise ConfigInvalid("init_random must satisfy 0 < init_random < budget")
        if self.ucb_beta < 0:
            raise ConfigInvalid("ucb_beta must be >= 0")
        if self.candidate_count < 1:
            raise ConfigInvalid("candidate_count must be >= 1")


@dataclass
class BestResult:
    best_action: object
    best_reward: float
    history: list[EvalRecord] = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)


class _DesignSpace:
    """Maps an environment to the vector space one evaluation searches over."""

    def __init__(self, env: Environment, levels: tuple[int, ...] | None = None):
        self.env = env
        space = env.action_space
        if isinstance(space, ContinuousBox):
            if env.horizon != 1:
                raise ConfigInvalid(
                    "continuous-action optimization requires single-step episodes")
            if levels is not None:
                raise ConfigInvalid("level restriction only applies to discrete spaces")
            self.kind = "continuous"
            self.dims = space.dims
            self._lower = np.asarray(space.lower, dtype=float)
            self._span = np.asarray(space.upper, dtype=float) - self._lower
            self.size: int | None = None
        elif isinstance(space, DiscreteRange):
            self.kind = "discrete"
            self.dims = env.horizon
            if levels is None:
                levels = tuple(range(space.low, space.high + 1))
            self.levels = tuple(int(v) for v in levels)
            self.size = len(self.levels) ** env.horizon
        else:
            raise ConfigInvalid(f"unsupported action space {space!r}")

    def sample(self, rng: np.random.Generator):
        if self.kind == "continuous":
            return self._lower + rng.uniform(size=self.dims) * self._span
        idx = rng.integers(len(self.levels), size=self.dims)
        return tuple(self.levels[j] for j in idx)

    def sample_unique(self, rng: np.random.Generator, count: int) -> list:
        """Without-replacement draws; only valid for enumerable discrete spaces."""
        designs = self.enumerate()
        picks = rng.permutation(len(designs))[:count]
        return [designs[j] for j in picks]

    def enumerate(self) -> list:
        if self.kind != "discrete":
            raise SpaceTooLarge("continuous spaces cannot be enumerated")
        return list(itertools.product(self.levels, repeat=self.dims))

    def to_unit(self, designs) -> np.ndarray:
        """Normalized [0,1]^d coordinates used as GP inputs."""
        arr = np.asarray(designs, dtype=float)
        arr = np.atleast_2d(arr)
        if self.kind == "continuous":
            return (arr - self._lower) / self._span
        return arr / MAX_LEVEL

    def actions_of(self, design) -> list:
        if self.kind == "continuous":
            return [np.asarray(design, dtype=float)]
        return [int(level) for level in design]

    def serialize(self, design):
        if self.kind == "continuous":
            return [float(v) for v in np.asarray(design, dtype=float)]
        return [int(v) for v in design]

    def evaluate(self, design, seed: int) -> tuple[float, dict[str, float]]:
        record = run_episode(self.env, self.actions_of(design), seed=seed)
        info = dict(record.step_results[-1].info) if record.step_results else {}
        return record.total_reward, info


def _select_hyper(x_unit: np.ndarray, rewards: np.ndarray, dims: int):
    if rewards.shape[0] >= 2:
        return fit_hyperparams(x_unit, rewards, default_hyper_grid(dims))
    return default_hyperparams(dims)


def _best_of(history: list[EvalRecord], designs: list) -> tuple[object, float]:
    rewards = np.asarray([rec.reward for rec in history])
    idx = int(np.argmax(rewards))  # earliest index on ties
    return designs[idx], float(rewards[idx])


class _Recorder:
    """Accumulates EvalRecords and mirrors them to the ledger file."""

    def __init__(self, env: Environment, algorithm: str, ledger_path=None):
        self.env_type = env.env_type
        self.digest = config_digest(env.config_dict())
        self.algorithm = algorithm
        self.ledger_path = ledger_path
        self.history: list[EvalRecord] = []

    def add(self, action, reward: float, seed: int, info: dict[str, float]) -> None:
        record = new_eval_record(self.env_type, self.digest, self.algorithm,
                                 seed=seed, action=action, reward=reward,
                                 info_summary=info)
        self.history.append(record)
        if self.ledger_path is not None:
            append_eval(self.ledger_path, record)


def bayes_opt(env: Environment, config: BOConfig, ledger_path=None) -> BestResult:
    """GP-UCB over the design space defined by the environment.

    Every design is evaluated through the environment's step interface with
    the environment reseeded to ``config.seed`` (common random numbers), so a
    stochastic model sees the same realization for every candidate.
    """
    space = _DesignSpace(env)
    rng = np.random.default_rng(config.seed)
    recorder = _Recorder(env, "bayes_opt", ledger_path)

    enumerable = space.size is not None and space.size <= ACQUISITION_ENUM_LIMIT
    all_designs = space.enumerate() if enumerable else None

    designs: list = []
    rewards: list[float] = []

    # initial random phase
    k = config.init_random
    if space.size is not None and space.size <= config.budget:
        init = space.sample_unique(rng, min(k, space.size))
    else:
        init = [space.sample(rng) for _ in range(k)]
    pending = list(init)

    for i in range(config.budget):
        if i < len(pending):
            design = pending[i]
        else:
            design = _acquire(space, designs, rewards, config, rng, all_designs)
        reward, info = space.evaluate(design, seed=config.seed)
        designs.append(design)
        rewards.append(reward)
        recorder.add(space.serialize(design), reward, config.seed, info)

    best_design, best_reward = _best_of(recorder.history, designs)
    diagnostics = _surrogate_diagnostics(space, designs, rewards, config, rng,
                                         all_designs, best_design)
    return BestResult(best_action=space.serialize(best_design), best_reward=best_reward,
                      history=recorder.history, diagnostics=diagnostics)


def _acquire(space: _DesignSpace, designs: list, rewards: list[float], config: BOConfig,
             rng: np.random.Generator, all_designs: list | None):
    """Pick the UCB argmax over the candidate set; earliest candidate wins ties."""
    x_unit = space.to_unit(designs)
    y = np.asarray(rewards, dtype=float)
    hyper = _select_hyper(x_unit, y, space.dims)
    post = gp_fit(x_unit, y, hyper)
    if all_designs is not None:
        seen = set(map(tuple, designs))
        candidates = [d for d in all_designs if d not in seen] or list(all_designs)
    else:
        candidates = [space.sample(rng) for _ in range(config.candidate_count)] + list(designs)
    scores = ucb_batch(post, space.to_unit(candidates), config.ucb_beta)
    return candidates[int(np.argmax(scores))]


def _surrogate_diagnostics(space: _DesignSpace, designs: list, rewards: list[float],
                           config: BOConfig, rng: np.random.Generator,
                           all_designs: list | None, best_design) -> dict:
    """Algorithm-1's surrogate argmax, reported alongside the evaluated argmax."""
    x_unit = space.to_unit(designs)
    y = np.asarray(rewards, dtype=float)
    hyper = _select_hyper(x_unit, y, space.dims)
    post: GPPosterior = gp_fit(x_unit, y, hyper)
    if all_designs is not None:
        candidates = list(all_designs)
    else:
        candidates = list(designs) + [space.sample(rng) for _ in range(config.candidate_count)]
    means, _ = gp_predict_batch(post, space.to_unit(candidates))
    pick = candidates[int(np.argmax(means))]
    return {
        "surrogate_best_action": space.serialize(pick),
        "surrogate_best_mean": float(np.max(means)),
        "surrogate_matches_evaluated_argmax": space.serialize(pick) == space.serialize(best_design),
        "final_hyperparams": {
            "signal_variance": post.hyper.signal_variance,
            "length_scales": list(post.hyper.length_scales),
            "noise_variance": post.hyper.noise_variance,
        },
    }


def random_search(env: Environment, budget: int, seed: int = 0,
                  ledger_path=None) -> BestResult:
    """Uniform evaluations; without replacement when the space fits the budget."""
    if budget < 1:
        raise BudgetTooSmall("budget must be >= 1")
    space = _DesignSpace(env)
    rng = np.random.default_rng(seed)
    recorder = _Recorder(env, "random_search", ledger_path)
    if space.size is not None and space.size <= budget:
        designs = space.sample_unique(rng, space.size)
        designs += [space.sample(rng) for _ in range(budget - len(designs))]
    else:
        designs = [space.sample(rng) for _ in range(budget)]
    for design in designs:
        reward, info = space.evaluate(design, seed=seed)
        recorder.add(space.serialize(design), reward, seed, info)
    best_design, best_reward = _best_of(recorder.history, designs)
    return BestResult(best_action=space.serialize(best_design), best_reward=best_reward,
                      history=recorder.history)


def exhaustive_search(env: Environment, max_enumeration: int, seed: int = 0,
                      levels: tuple[int, ...] | None = None,
                      ledger_path=None) -> BestResult:
    """Evaluate every policy in lexicographic order; exact earliest-index argmax.

    ``levels`` optionally restricts enumeration to a subset of the discrete
    action range (e.g. a learner's strided grid), keeping the oracle tractable.
    """
    space = _DesignSpace(env, levels=levels)
    if space.size is None or space.size > max_enumeration:
        raise SpaceTooLarge(
            f"space size {space.size} exceeds max_enumeration={max_enumeration}")
    recorder = _Recorder(env, "exhaustive_search", ledger_path)
    designs = space.enumerate()
    for design in designs:
        reward, info = space.evaluate(design, seed=seed)
        recorder.add(space.serialize(design), reward, seed, info)
    best_design, best_reward = _best_of(recorder.history, designs)
    return BestResult(best_action=space.serialize(best_design), best_reward=best_reward,
                      history=recorder.history)
