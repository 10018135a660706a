"""Epidemic models wrapped as step/reset environments, plus the algorithms,
ledger, and service surfaces that consume them."""

from .core import (
    Action,
    ActionSpace,
    ContinuousBox,
    DiscreteRange,
    Environment,
    EpisodeRecord,
    Policy,
    StepResult,
    run_episode,
    sample_action,
)
from .envs import (
    CalibrationConfig,
    CaseSeries,
    CostConfig,
    ModelKind,
    PolicyEnvConfig,
    calibration_reward,
    cost_reward,
    default_policy_config,
    make_calibration_env,
    make_cost_env,
    make_policy_env,
    synthetic_case_series,
)
from .models import (
    CompartmentState,
    SirdParams,
    StringencyLink,
    Trajectory,
    simulate_chain_binomial,
    simulate_sird,
    sird_substep,
    stringency_to_beta,
)
from .gp import (
    GPHyperparams,
    GPPosterior,
    fit_hyperparams,
    gp_fit,
    gp_predict,
    kernel,
    ucb_acquisition,
)
from .optimize import BestResult, BOConfig, bayes_opt, exhaustive_search, random_search
from .qlearn import DiscretizerConfig, QLearnConfig, QTable, discretize, greedy_policy, q_learn, q_update
from .data_io import (
    EvalRecord,
    LedgerQuery,
    append_eval,
    config_digest,
    export_trajectory,
    load_case_series,
    query_ledger,
)

__version__ = "0.1.0"
