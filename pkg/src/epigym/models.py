"""Epidemic dynamics: deterministic SIRD and a stochastic chain-binomial model.

The deterministic model advances S/I/R/D with an explicit Euler update,

    S' = -beta*S*I/N,  I' = beta*S*I/N - (gamma+mu)*I,  R' = gamma*I,  D' = mu*I

applied in sub-daily substeps. Flows are constructed to cancel exactly, so
population is conserved to floating-point precision. The stochastic model is
a daily chain binomial on integer counts: each susceptible is infected with
probability 1 - (1 - beta/N)^I, and each infectious individual recovers with
probability gamma or dies with probability mu (mutually exclusive).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidRates, LevelOutOfRange, UnstableStep

#: sub-daily integration steps for the deterministic model
DEFAULT_SUBSTEPS_PER_DAY = 4

#: top of the stringency scale; levels are integers in [0, MAX_LEVEL]
MAX_LEVEL = 99


@dataclass(frozen=True)
class CompartmentState:
    """Population counts at an instant. Counts are persons; n is the total."""

    s: float
    i: float
    r: float
    d: float
    n: float

    def __post_init__(self):
        if self.n <= 0:
            raise ValueError("total population must be positive")
        for name in ("s", "i", "r", "d"):
            if getattr(self, name) < 0:
                raise ValueError(f"compartment {name} is negative")
        if abs(self.s + self.i + self.r + self.d - self.n) > 1e-9 * self.n:
            raise ValueError("compartments do not sum to the total population")

    def fractions(self) -> np.ndarray:
        """(s, i, r, d) as fractions of the total population; sums to 1."""
        return np.array([self.s, self.i, self.r, self.d]) / self.n

    @property
    def cumulative_cases(self) -> float:
        """Ever-infected count: everyone who has left the susceptible pool."""
        return self.n - self.s

    def is_integer_valued(self) -> bool:
        return all(float(getattr(self, k)).is_integer() for k in ("s", "i", "r", "d", "n"))


@dataclass(frozen=True)
class SirdParams:
    """Per-day transmission (beta), recovery (gamma) and death (mu) rates."""

    beta: float
    gamma: float
    mu: float

    def __post_init__(self):
        for name in ("beta", "gamma", "mu"):
            if getattr(self, name) < 0:
                raise ValueError(f"rate {name} is negative")


@dataclass(frozen=True)
class StringencyLink:
    """Affine map from a stringency level to an effective transmission rate.

    Level 0 leaves transmission at ``base_beta``; the top level scales it by
    (1 - kappa). kappa is the maximum fractional reduction.
    """

    base_beta: float
    kappa: float = 0.9

    def __post_init__(self):
        if self.base_beta < 0:
            raise ValueError("base_beta is negative")
        if not 0.0 <= self.kappa <= 1.0:
            raise ValueError("kappa must be in [0, 1]")

    def effective_beta(self, level: float) -> float:
        """Transmission rate at a (possibly fractional) level in [0, MAX_LEVEL]."""
        if not 0 <= level <= MAX_LEVEL:
            raise LevelOutOfRange(f"level {level} outside [0, {MAX_LEVEL}]")
        return self.base_beta * (1.0 - self.kappa * level / MAX_LEVEL)


def stringency_to_beta(level: int, link: StringencyLink) -> float:
    """Effective transmission rate for an integer stringency level."""
    if not isinstance(level, (int, np.integer)) or isinstance(level, bool):
        raise LevelOutOfRange(f"level must be an integer, got {level!r}")
    return link.effective_beta(int(level))


@dataclass
class Trajectory:
    """Daily states plus the running count of ever-infected persons.

    ``days[t]`` is the state at the end of simulated day t, with ``days[0]``
    the initial state; both sequences therefore have length days+1.
    """

    days: list[CompartmentState]
    cumulative_cases: list[float]

    def __len__(self) -> int:
        return len(self.days)

    @property
    def final(self) -> CompartmentState:
        return self.days[-1]

    def peak_infected_fraction(self) -> float:
        return max(st.i / st.n for st in self.days)


def sird_substep(state: CompartmentState, params: SirdParams, dt: float) -> CompartmentState:
    """One explicit-Euler update over ``dt`` days. Conservation is exact."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if (params.gamma + params.mu) * dt >= 1.0 and state.i > 0:
        raise UnstableStep(f"(gamma+mu)*dt = {(params.gamma + params.mu) * dt:.4g} >= 1")
    new_inf = params.beta * state.s * state.i / state.n * dt
    new_rec = params.gamma * state.i * dt
    new_dead = params.mu * state.i * dt
    s = state.s - new_inf
    i = state.i + new_inf - new_rec - new_dead
    r = state.r + new_rec
    d = state.d + new_dead
    if s < 0 or i < 0:
        raise UnstableStep(
            f"update with dt={dt} drives a compartment negative (s={s:.4g}, i={i:.4g})")
    return CompartmentState(s=s, i=i, r=r, d=d, n=state.n)


def simulate_sird(params: SirdParams, init: CompartmentState, days: int,
                  substeps_per_day: int = DEFAULT_SUBSTEPS_PER_DAY) -> Trajectory:
    """Run the deterministic model, recording one state per day boundary."""
    if days < 1:
        raise ValueError("days must be >= 1")
    if substeps_per_day < 1:
        raise ValueError("substeps_per_day must be >= 1")
    dt = 1.0 / substeps_per_day
    state = init
    states = [init]
    for _ in range(days):
        for _ in range(substeps_per_day):
            state = sird_substep(state, params, dt)
        states.append(state)
    return Trajectory(days=states, cumulative_cases=[st.cumulative_cases for st in states])


def chain_binomial_day(state: CompartmentState, params: SirdParams,
                       rng: np.random.Generator) -> CompartmentState:
    """One stochastic day on integer counts; draws come from ``rng``."""
    if params.gamma + params.mu > 1.0:
        raise InvalidRates(f"gamma + mu = {params.gamma + params.mu:.4g} > 1")
    s, i = int(state.s), int(state.i)
    p_inf = 1.0 - (1.0 - min(params.beta / state.n, 1.0)) ** i
    new_inf = int(rng.binomial(s, p_inf)) if s > 0 else 0
    if i > 0:
        new_rec, new_dead, _ = rng.multinomial(
            i, [params.gamma, params.mu, 1.0 - params.gamma - params.mu])
    else:
        new_rec = new_dead = 0
    return CompartmentState(
        s=s - new_inf,
        i=i + new_inf - int(new_rec) - int(new_dead),
        r=state.r + int(new_rec),
        d=state.d + int(new_dead),
        n=state.n,
    )


def simulate_chain_binomial(params: SirdParams, init: CompartmentState, days: int,
                            seed: int = 0) -> Trajectory:
    """Run the stochastic model for ``days`` days; deterministic given seed."""
    if days < 1:
        raise ValueError("days must be >= 1")
    if params.gamma + params.mu > 1.0:
        raise InvalidRates(f"gamma + mu = {params.gamma + params.mu:.4g} > 1")
    if not init.is_integer_valued():
        raise ValueError("chain-binomial model requires integer-valued compartments")
    rng = np.random.default_rng(int(seed) & ((1 << 64) - 1))
    state = init
    states = [init]
    for _ in range(days):
        state = chain_binomial_day(state, params, rng)
        states.append(state)
    return Trajectory(days=states, cumulative_cases=[st.cumulative_cases for st in states])
