"""Concrete environments: calibration, curve-flattening, and cost-aware planning.

All environments maximize reward. The calibration environment negates the
RMSE between simulated and observed cumulative cases; the policy environment
negates the two-week incidence; the cost environment keeps the policy
environment's dynamics and swaps in a currency-valued reward.
"""

from __future__ import annotations

import datetime as _dt
import enum
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import ContinuousBox, DiscreteRange, Environment
from .errors import ConfigInvalid, LengthMismatch
from .models import (
    DEFAULT_SUBSTEPS_PER_DAY,
    MAX_LEVEL,
    CompartmentState,
    SirdParams,
    StringencyLink,
    Trajectory,
    chain_binomial_day,
    simulate_chain_binomial,
    simulate_sird,
    sird_substep,
)

#: simulated days covered by one planning step
STEP_DAYS = 14


class ModelKind(str, enum.Enum):
    SIRD_DIRECT = "sird_direct"
    SIRD_STRINGENCY = "sird_stringency"
    CHAIN_BINOMIAL = "chain_binomial"


@dataclass(frozen=True)
class CaseSeries:
    """Daily cumulative case counts, one per consecutive calendar day."""

    dates: tuple[_dt.date, ...]
    cumulative_cases: tuple[float, ...]

    def __post_init__(self):
        if len(self.dates) != len(self.cumulative_cases) or not self.dates:
            raise ValueError("dates and cumulative_cases must be equal-length and nonempty")
        for prev, cur in zip(self.dates, self.dates[1:]):
            if (cur - prev).days != 1:
                raise ValueError(f"dates must be consecutive days; gap at {cur}")
        if any(c < 0 for c in self.cumulative_cases):
            raise ValueError("cumulative cases must be nonnegative")
        for prev, cur in zip(self.cumulative_cases, self.cumulative_cases[1:]):
            if cur < prev:
                raise ValueError("cumulative cases must be nondecreasing")

    def __len__(self) -> int:
        return len(self.dates)

    def as_dict(self) -> dict:
        return {
            "dates": [d.isoformat() for d in self.dates],
            "cumulative_cases": list(self.cumulative_cases),
        }

    @staticmethod
    def from_dict(data: Mapping) -> "CaseSeries":
        return CaseSeries(
            dates=tuple(_dt.date.fromisoformat(d) for d in data["dates"]),
            cumulative_cases=tuple(float(c) for c in data["cumulative_cases"]),
        )


# Calibratable parameter names, in denormalization order, per model kind.
_CALIB_PARAMS = {
    ModelKind.SIRD_DIRECT: ("beta", "gamma", "mu", "i0"),
    ModelKind.SIRD_STRINGENCY: ("level", "gamma", "mu", "i0"),
    ModelKind.CHAIN_BINOMIAL: ("beta", "gamma", "mu", "i0"),
}


@dataclass(frozen=True)
class CalibrationConfig:
    """Search box and data for a calibration environment.

    ``param_bounds`` lists the free parameters (a subset of beta/level,
    gamma, mu, i0) with their (lower, upper) bounds; anything not listed
    must appear in ``fixed_params``. ``population`` sets the closed
    population the initial state is built from.
    """

    model_kind: ModelKind
    param_bounds: Mapping[str, tuple[float, float]]
    series: CaseSeries
    population: float
    substeps_per_day: int = DEFAULT_SUBSTEPS_PER_DAY
    replicates: int = 5
    link: StringencyLink | None = None
    fixed_params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        kind = ModelKind(self.model_kind)
        object.__setattr__(self, "model_kind", kind)
        names = _CALIB_PARAMS[kind]
        if not self.param_bounds:
            raise ConfigInvalid("param_bounds must list at least one free parameter")
        for name, bounds in self.param_bounds.items():
            if name not in names:
                raise ConfigInvalid(f"unknown parameter {name!r} for {kind.value}")
            lo, hi = bounds
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ConfigInvalid(f"bounds for {name!r} must be finite with lower < upper")
        for name in names:
            if name not in self.param_bounds and name not in self.fixed_params:
                raise ConfigInvalid(f"parameter {name!r} needs bounds or a fixed value")
        if self.population <= 0:
            raise ConfigInvalid("population must be positive")
        if self.substeps_per_day < 1:
            raise ConfigInvalid("substeps_per_day must be >= 1")
        if self.replicates < 1:
            raise ConfigInvalid("replicates must be >= 1")
        if kind is ModelKind.SIRD_STRINGENCY and self.link is None:
            raise ConfigInvalid("stringency-linked calibration requires a link")
        if kind is ModelKind.CHAIN_BINOMIAL and not float(self.population).is_integer():
            raise ConfigInvalid("chain-binomial calibration requires an integer population")
        i0_max = self.param_bounds.get("i0", (0.0, self.fixed_params.get("i0", 0.0)))[1]
        if i0_max > self.population:
            raise ConfigInvalid("initial infected count cannot exceed the population")
        if "level" in self.param_bounds:
            lo, hi = self.param_bounds["level"]
            if lo < 0 or hi > MAX_LEVEL:
                raise ConfigInvalid(f"level bounds must lie within [0, {MAX_LEVEL}]")

    @property
    def free_params(self) -> tuple[str, ...]:
        return tuple(self.param_bounds.keys())

    def as_dict(self) -> dict:
        return {
            "model_kind": self.model_kind.value,
            "param_bounds": {k: [float(v[0]), float(v[1])] for k, v in self.param_bounds.items()},
            "series": self.series.as_dict(),
            "population": float(self.population),
            "substeps_per_day": int(self.substeps_per_day),
            "replicates": int(self.replicates),
            "link": None if self.link is None else {
                "base_beta": self.link.base_beta, "kappa": self.link.kappa},
            "fixed_params": {k: float(v) for k, v in self.fixed_params.items()},
        }

    @staticmethod
    def from_dict(data: Mapping) -> "CalibrationConfig":
        link = data.get("link")
        return CalibrationConfig(
            model_kind=ModelKind(data["model_kind"]),
            param_bounds={k: (float(v[0]), float(v[1]))
                          for k, v in data["param_bounds"].items()},
            series=CaseSeries.from_dict(data["series"]),
            population=float(data["population"]),
            substeps_per_day=int(data.get("substeps_per_day", DEFAULT_SUBSTEPS_PER_DAY)),
            replicates=int(data.get("replicates", 5)),
            link=None if link is None else StringencyLink(float(link["base_beta"]),
                                                          float(link["kappa"])),
            fixed_params={k: float(v) for k, v in data.get("fixed_params", {}).items()},
        )


@dataclass(frozen=True)
class PolicyEnvConfig:
    """Planning environment: one stringency decision per 14-day step."""

    link: StringencyLink
    init: CompartmentState
    gamma: float
    mu: float
    model_kind: ModelKind = ModelKind.SIRD_STRINGENCY
    horizon: int = 12
    substeps_per_day: int = DEFAULT_SUBSTEPS_PER_DAY
    # (low, high) inclusive; the full stringency scale unless a test or
    # experiment restricts the space to keep it enumerable
    level_range: tuple[int, int] = (0, MAX_LEVEL)

    def __post_init__(self):
        kind = ModelKind(self.model_kind)
        object.__setattr__(self, "model_kind", kind)
        if kind not in (ModelKind.SIRD_STRINGENCY, ModelKind.CHAIN_BINOMIAL):
            raise ConfigInvalid("policy environments need a stringency-linked model")
        if self.horizon < 1:
            raise ConfigInvalid("horizon must be >= 1")
        if self.gamma < 0 or self.mu < 0:
            raise ConfigInvalid("rates must be nonnegative")
        if self.substeps_per_day < 1:
            raise ConfigInvalid("substeps_per_day must be >= 1")
        lo, hi = self.level_range
        if not (0 <= lo <= hi <= MAX_LEVEL):
            raise ConfigInvalid(f"level_range must satisfy 0 <= low <= high <= {MAX_LEVEL}")
        if (self.gamma + self.mu) / self.substeps_per_day >= 1.0:
            raise ConfigInvalid("unstable step: (gamma + mu) per substep must be < 1")
        if kind is ModelKind.CHAIN_BINOMIAL:
            if self.gamma + self.mu > 1.0:
                raise ConfigInvalid("chain-binomial model requires gamma + mu <= 1")
            if not self.init.is_integer_valued():
                raise ConfigInvalid("chain-binomial model requires integer counts")

    def as_dict(self) -> dict:
        return {
            "model_kind": self.model_kind.value,
            "link": {"base_beta": self.link.base_beta, "kappa": self.link.kappa},
            "init": {"s": self.init.s, "i": self.init.i, "r": self.init.r,
                     "d": self.init.d, "n": self.init.n},
            "gamma": float(self.gamma),
            "mu": float(self.mu),
            "horizon": int(self.horizon),
            "substeps_per_day": int(self.substeps_per_day),
            "level_range": [int(self.level_range[0]), int(self.level_range[1])],
        }

    @staticmethod
    def from_dict(data: Mapping) -> "PolicyEnvConfig":
        init = data["init"]
        lr = data.get("level_range", [0, MAX_LEVEL])
        return PolicyEnvConfig(
            link=StringencyLink(float(data["link"]["base_beta"]),
                                float(data["link"]["kappa"])),
            init=CompartmentState(s=float(init["s"]), i=float(init["i"]),
                                  r=float(init["r"]), d=float(init["d"]),
                                  n=float(init["n"])),
            gamma=float(data["gamma"]),
            mu=float(data["mu"]),
            model_kind=ModelKind(data.get("model_kind", ModelKind.SIRD_STRINGENCY.value)),
            horizon=int(data.get("horizon", 12)),
            substeps_per_day=int(data.get("substeps_per_day", DEFAULT_SUBSTEPS_PER_DAY)),
            level_range=(int(lr[0]), int(lr[1])),
        )


@dataclass(frozen=True)
class CostConfig:
    """Currency-valued reward: intervention cost plus the value of life-years lost.

    A step at stringency ``level`` costs ``14 * daily_cost * (level/99)^exponent``;
    each death costs ``expected_life_years_lost_per_death * value_per_life_year``.
    """

    daily_cost: float
    exponent: float = 1.0
    value_per_life_year: float = 0.0
    expected_life_years_lost_per_death: float = 0.0

    def __post_init__(self):
        if self.daily_cost < 0 or self.value_per_life_year < 0 \
                or self.expected_life_years_lost_per_death < 0:
            raise ConfigInvalid("cost parameters must be nonnegative")
        if self.exponent < 1:
            raise ConfigInvalid("cost exponent must be >= 1")

    def as_dict(self) -> dict:
        return {
            "daily_cost": float(self.daily_cost),
            "exponent": float(self.exponent),
            "value_per_life_year": float(self.value_per_life_year),
            "expected_life_years_lost_per_death": float(self.expected_life_years_lost_per_death),
        }

    @staticmethod
    def from_dict(data: Mapping) -> "CostConfig":
        return CostConfig(
            daily_cost=float(data["daily_cost"]),
            exponent=float(data.get("exponent", 1.0)),
            value_per_life_year=float(data.get("value_per_life_year", 0.0)),
            expected_life_years_lost_per_death=float(
                data.get("expected_life_years_lost_per_death", 0.0)),
        )


def calibration_reward(simulated: Sequence[float], observed: Sequence[float]) -> float:
    """Negative RMSE (persons); 0 is a perfect fit."""
    if len(simulated) != len(observed):
        raise LengthMismatch(f"simulated has {len(simulated)} points, observed {len(observed)}")
    if len(simulated) == 0:
        raise LengthMismatch("need at least one point")
    diff = np.asarray(simulated, dtype=float) - np.asarray(observed, dtype=float)
    return -float(np.sqrt(np.mean(diff * diff)))


def cost_reward(level: int, new_deaths: float, cost: CostConfig) -> float:
    """Negated cost of one 14-day step: intervention spend plus deaths valued in life-years."""
    intervention = STEP_DAYS * cost.daily_cost * (level / MAX_LEVEL) ** cost.exponent
    lives = new_deaths * cost.expected_life_years_lost_per_death * cost.value_per_life_year
    return -(intervention + lives)


class CalibrationEnv(Environment):
    """Single-step environment: the action is a normalized parameter vector.

    Stepping denormalizes the action into the configured bounds, simulates
    over the series' date range, and returns the negative RMSE against the
    observed cumulative-case curve. The observation is the simulated curve
    as a fraction of the population.
    """

    env_type = "calibration"

    def __init__(self, config: CalibrationConfig):
        self.config = config
        d = len(config.free_params)
        n_days = len(config.series)
        super().__init__(
            action_space=ContinuousBox(lower=(0.0,) * d, upper=(1.0,) * d),
            horizon=1,
            observation_names=tuple(f"cumulative_fraction_day_{t}" for t in range(n_days)),
        )

    def config_dict(self) -> dict:
        return {"env_type": self.env_type, **self.config.as_dict()}

    def denormalize(self, action: np.ndarray) -> dict[str, float]:
        """Map a point in [0,1]^d to named parameter values, merging fixed ones."""
        params = dict(self.config.fixed_params)
        for name, a in zip(self.config.free_params, np.asarray(action, dtype=float)):
            lo, hi = self.config.param_bounds[name]
            params[name] = lo + a * (hi - lo)
        return params

    def _do_reset(self) -> np.ndarray:
        return np.zeros(len(self.config.series))

    def _simulate_curve(self, params: dict[str, float]) -> np.ndarray:
        cfg = self.config
        n = cfg.population
        i0 = params["i0"]
        if cfg.model_kind is ModelKind.SIRD_STRINGENCY:
            beta = cfg.link.effective_beta(params["level"])
        else:
            beta = params["beta"]
        rates = SirdParams(beta=beta, gamma=params["gamma"], mu=params["mu"])
        days = len(cfg.series) - 1
        if cfg.model_kind is ModelKind.CHAIN_BINOMIAL:
            i0 = float(round(min(max(i0, 0.0), n)))
            init = CompartmentState(s=n - i0, i=i0, r=0.0, d=0.0, n=n)
            if days == 0:
                return np.full((1, 1), init.cumulative_cases)
            seeds = self._rng.integers(2 ** 63, size=cfg.replicates)
            curves = [simulate_chain_binomial(rates, init, days, seed=int(s)).cumulative_cases
                      for s in seeds]
            return np.asarray(curves, dtype=float)
        init = CompartmentState(s=n - i0, i=i0, r=0.0, d=0.0, n=n)
        if days == 0:
            return np.array([[init.cumulative_cases]])
        traj = simulate_sird(rates, init, days, cfg.substeps_per_day)
        return np.asarray([traj.cumulative_cases], dtype=float)

    def _do_step(self, action):
        params = self.denormalize(action)
        curves = self._simulate_curve(params)
        observed = np.asarray(self.config.series.cumulative_cases, dtype=float)
        # stochastic models: average the per-replicate RMSE, not the curves' RMSE
        reward = float(np.mean([calibration_reward(c, observed) for c in curves]))
        mean_curve = curves.mean(axis=0)
        observation = mean_curve / self.config.population
        return observation, reward, {"rmse": -reward}


class PolicyEnv(Environment):
    """Planning environment: integer stringency level per 14-day step.

    The same class serves both reward framings. With ``cost=None`` the reward
    is the negated new cumulative incidence of the step; with a
    :class:`CostConfig` the dynamics are untouched and only the reward changes.
    """

    def __init__(self, config: PolicyEnvConfig, cost: CostConfig | None = None):
        self.config = config
        self.cost = cost
        self.env_type = "policy" if cost is None else "cost"
        super().__init__(
            action_space=DiscreteRange(*config.level_range),
            horizon=config.horizon,
            observation_names=("s", "i", "r", "d"),
        )
        self._state = config.init
        self._day = 0
        self._daily_states: list[CompartmentState] = [config.init]

    def config_dict(self) -> dict:
        data = {"env_type": self.env_type, **self.config.as_dict()}
        if self.cost is not None:
            data["cost"] = self.cost.as_dict()
        return data

    def _do_reset(self) -> np.ndarray:
        self._state = self.config.init
        self._day = 0
        self._daily_states = [self.config.init]
        return self._state.fractions()

    def _advance_one_day(self, rates: SirdParams):
        if self.config.model_kind is ModelKind.CHAIN_BINOMIAL:
            self._state = chain_binomial_day(self._state, rates, self._rng)
        else:
            dt = 1.0 / self.config.substeps_per_day
            for _ in range(self.config.substeps_per_day):
                self._state = sird_substep(self._state, rates, dt)
        self._day += 1
        self._daily_states.append(self._state)

    def _do_step(self, action):
        level = int(action)
        beta = self.config.link.effective_beta(level)
        rates = SirdParams(beta=beta, gamma=self.config.gamma, mu=self.config.mu)
        start = self._state
        for _ in range(STEP_DAYS):
            self._advance_one_day(rates)
        new_cases = self._state.cumulative_cases - start.cumulative_cases
        new_deaths = self._state.d - start.d
        if self.cost is None:
            reward = -new_cases
        else:
            reward = cost_reward(level, new_deaths, self.cost)
        info = {
            "new_cases": float(new_cases),
            "new_deaths": float(new_deaths),
            "cumulative_cases": float(self._state.cumulative_cases),
            "day": float(self._day),
        }
        return self._state.fractions(), reward, info

    @property
    def trajectory(self) -> Trajectory:
        """Daily states recorded since the last reset."""
        states = list(self._daily_states)
        return Trajectory(days=states, cumulative_cases=[st.cumulative_cases for st in states])


def make_calibration_env(config: CalibrationConfig) -> CalibrationEnv:
    if not isinstance(config, CalibrationConfig):
        raise ConfigInvalid("expected a CalibrationConfig")
    return CalibrationEnv(config)


def make_policy_env(config: PolicyEnvConfig) -> PolicyEnv:
    if not isinstance(config, PolicyEnvConfig):
        raise ConfigInvalid("expected a PolicyEnvConfig")
    return PolicyEnv(config, cost=None)


def make_cost_env(policy_config: PolicyEnvConfig, cost: CostConfig) -> PolicyEnv:
    if not isinstance(policy_config, PolicyEnvConfig) or not isinstance(cost, CostConfig):
        raise ConfigInvalid("expected a PolicyEnvConfig and a CostConfig")
    return PolicyEnv(policy_config, cost=cost)


def default_policy_config(**overrides) -> PolicyEnvConfig:
    """The package's reference planning scenario (overridable field by field)."""
    population = float(overrides.pop("population", 1_000_000.0))
    initial_infected = float(overrides.pop("initial_infected", 100.0))
    base_beta = overrides.pop("base_beta", 0.4)
    kappa = overrides.pop("kappa", 0.9)
    init = CompartmentState(s=population - initial_infected, i=initial_infected,
                            r=0.0, d=0.0, n=population)
    defaults = dict(
        link=StringencyLink(base_beta=base_beta, kappa=kappa),
        init=init,
        gamma=0.1,
        mu=0.01,
        horizon=12,
    )
    defaults.update(overrides)
    return PolicyEnvConfig(**defaults)


def synthetic_case_series(params: SirdParams, population: float, initial_infected: float,
                          days: int, start: _dt.date = _dt.date(2020, 3, 1),
                          substeps_per_day: int = DEFAULT_SUBSTEPS_PER_DAY) -> CaseSeries:
    """Noiseless cumulative-case data generated by the deterministic model."""
    init = CompartmentState(s=population - initial_infected, i=initial_infected,
                            r=0.0, d=0.0, n=population)
    traj = simulate_sird(params, init, days, substeps_per_day)
    dates = tuple(start + _dt.timedelta(days=t) for t in range(days + 1))
    return CaseSeries(dates=dates, cumulative_cases=tuple(traj.cumulative_cases))
