import numpy as np
import pytest

from epigym.core import ContinuousBox, DiscreteRange, Environment
from epigym.envs import (
    CalibrationConfig,
    ModelKind,
    default_policy_config,
    make_calibration_env,
    synthetic_case_series,
)
from epigym.models import SirdParams


class QuadraticEnv(Environment):
    """Single-step 1-D test function f(x) = -(x - 0.3)^2 with optimum 0."""

    env_type = "toy_quadratic"

    def __init__(self):
        super().__init__(ContinuousBox((0.0,), (1.0,)), horizon=1,
                         observation_names=("x",))

    def _do_reset(self):
        return np.zeros(1)

    def _do_step(self, action):
        x = float(np.asarray(action)[0])
        return np.array([x]), -((x - 0.3) ** 2), {}


class TwoStepToyEnv(Environment):
    """Handcrafted 2-step MDP: reward 1 only for level 0 at step 0 and level 90 at step 1.

    The observation is the episode progress, so discretized states separate
    the two decision points.
    """

    env_type = "toy_two_step"

    def __init__(self):
        super().__init__(DiscreteRange(0, 99), horizon=2,
                         observation_names=("progress",))

    def _do_reset(self):
        return np.array([0.0])

    def _do_step(self, action):
        t = self.step_index
        reward = 1.0 if (t == 0 and action == 0) or (t == 1 and action == 90) else 0.0
        return np.array([(t + 1) / self.horizon]), reward, {}


@pytest.fixture
def quadratic_env():
    return QuadraticEnv()


@pytest.fixture
def two_step_env():
    return TwoStepToyEnv()


@pytest.fixture
def policy_env_small():
    """Deterministic policy env with a short horizon for fast tests."""
    from epigym.envs import make_policy_env

    return make_policy_env(default_policy_config(horizon=3))


CALIBRATION_TRUTH = SirdParams(beta=0.3, gamma=0.1, mu=0.01)
CALIBRATION_POPULATION = 100_000.0
CALIBRATION_I0 = 50.0
CALIBRATION_BOUNDS = {
    "beta": (0.21, 0.42),
    "gamma": (0.065, 0.15),
    "mu": (0.004, 0.025),
    "i0": (15.0, 150.0),
}


def make_recovery_problem(days=180):
    """Synthetic noiseless calibration problem with known ground truth."""
    series = synthetic_case_series(CALIBRATION_TRUTH, population=CALIBRATION_POPULATION,
                                   initial_infected=CALIBRATION_I0, days=days)
    config = CalibrationConfig(
        model_kind=ModelKind.SIRD_DIRECT,
        param_bounds=CALIBRATION_BOUNDS,
        series=series,
        population=CALIBRATION_POPULATION,
    )
    return make_calibration_env(config), series
