"""Command-line surface: calibrate, optimize, simulate, serve.

Exit codes: 0 success, 2 validation/usage error, 1 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import envs as _envs
from . import optimize as _optimize
from . import qlearn as _qlearn
from .core import run_episode
from .data_io import export_trajectory, load_case_series
from .errors import EpiGymError
from .models import SirdParams, StringencyLink

DEFAULT_BOUNDS = {
    "beta": (0.05, 0.8),
    "gamma": (0.02, 0.5),
    "mu": (0.001, 0.1),
    "i0": (1.0, 1000.0),
}


def _add_policy_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--population", type=float, default=1_000_000.0)
    parser.add_argument("--initial-infected", type=float, default=100.0)
    parser.add_argument("--base-beta", type=float, default=0.4)
    parser.add_argument("--kappa", type=float, default=0.9)
    parser.add_argument("--gamma", type=float, default=0.1)
    parser.add_argument("--mu", type=float, default=0.01)
    parser.add_argument("--horizon", type=int, default=12)
    parser.add_argument("--model", choices=["sird_stringency", "chain_binomial"],
                        default="sird_stringency")


def _add_cost_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--daily-cost", type=float, default=1000.0)
    parser.add_argument("--cost-exponent", type=float, default=1.0)
    parser.add_argument("--value-per-life-year", type=float, default=50_000.0)
    parser.add_argument("--life-years-per-death", type=float, default=10.0)


def _policy_config(args) -> _envs.PolicyEnvConfig:
    return _envs.default_policy_config(
        population=args.population,
        initial_infected=args.initial_infected,
        base_beta=args.base_beta,
        kappa=args.kappa,
        gamma=args.gamma,
        mu=args.mu,
        horizon=args.horizon,
        model_kind=_envs.ModelKind(args.model),
    )


def _cost_config(args) -> _envs.CostConfig:
    return _envs.CostConfig(
        daily_cost=args.daily_cost,
        exponent=args.cost_exponent,
        value_per_life_year=args.value_per_life_year,
        expected_life_years_lost_per_death=args.life_years_per_death,
    )


def _build_env(args):
    config = _policy_config(args)
    if args.env == "cost":
        return _envs.make_cost_env(config, _cost_config(args))
    return _envs.make_policy_env(config)


def _write_result(out_path: str | None, result: dict):
    text = json.dumps(result, indent=2)
    if out_path:
        Path(out_path).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _best_result_dict(result: _optimize.BestResult) -> dict:
    return {
        "best_action": result.best_action,
        "best_reward": result.best_reward,
        "evaluations": len(result.history),
        "diagnostics": result.diagnostics,
        "history": [rec.to_json_dict() for rec in result.history],
    }


def cmd_calibrate(args) -> int:
    data = Path(args.data).read_bytes()
    series = load_case_series(data)
    bounds = dict(DEFAULT_BOUNDS)
    model_kind = _envs.ModelKind(args.model)
    link = None
    if model_kind is _envs.ModelKind.SIRD_STRINGENCY:
        bounds.pop("beta")
        bounds = {"level": (0.0, 99.0), **bounds}
        link = StringencyLink(base_beta=args.base_beta, kappa=args.kappa)
    config = _envs.CalibrationConfig(
        model_kind=model_kind,
        param_bounds=bounds,
        series=series,
        population=args.population,
        replicates=args.replicates,
        link=link,
    )
    env = _envs.make_calibration_env(config)
    bo = _optimize.BOConfig(budget=args.budget,
                            init_random=max(1, min(5, args.budget - 1)),
                            seed=args.seed)
    result = _optimize.bayes_opt(env, bo, ledger_path=args.ledger)
    payload = _best_result_dict(result)
    payload["best_params"] = env.denormalize(result.best_action)
    _write_result(args.out, payload)
    return 0


def cmd_optimize(args) -> int:
    env = _build_env(args)
    if args.algorithm == "bo":
        bo = _optimize.BOConfig(budget=args.budget,
                                init_random=max(1, min(5, args.budget - 1)),
                                seed=args.seed)
        result = _optimize.bayes_opt(env, bo, ledger_path=args.ledger)
        payload = _best_result_dict(result)
    elif args.algorithm == "random":
        result = _optimize.random_search(env, args.budget, seed=args.seed,
                                         ledger_path=args.ledger)
        payload = _best_result_dict(result)
    else:
        dcfg = _qlearn.DiscretizerConfig()
        qcfg = _qlearn.QLearnConfig(episodes=args.episodes, seed=args.seed)
        _table, policy = _qlearn.q_learn(env, dcfg, qcfg, ledger_path=args.ledger)
        rollout = run_episode(env, policy, seed=args.seed)
        payload = {
            "best_action": [int(a) for a in rollout.actions],
            "best_reward": rollout.total_reward,
            "episodes": args.episodes,
        }
    _write_result(args.out, payload)
    return 0


def cmd_simulate(args) -> int:
    try:
        levels = [int(part) for part in args.policy.split(",") if part.strip() != ""]
    except ValueError:
        raise EpiGymError(f"--policy must be comma-separated integers, got {args.policy!r}")
    if not levels:
        raise EpiGymError("--policy is empty")
    args.horizon = len(levels)
    env = _build_env(args)
    run_episode(env, levels, seed=args.seed)
    data = export_trajectory(env.trajectory, args.export)
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.write(data.decode("utf-8"))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(args.ledger, ui_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="epigym",
                                     description="Epidemic environments, optimizers, and service")
    sub = parser.add_subparsers(dest="command", required=True)
    env_ledger = os.environ.get("EPIGYM_LEDGER_PATH", "ledger.jsonl")

    p = sub.add_parser("calibrate", help="fit model parameters to a case-data CSV")
    p.add_argument("--model", choices=[k.value for k in _envs.ModelKind],
                   default="sird_direct")
    p.add_argument("--data", required=True, help="CSV with header date,cumulative_cases")
    p.add_argument("--budget", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ledger", default=env_ledger)
    p.add_argument("--out", default=None, help="write the result JSON here")
    p.add_argument("--population", type=float, required=True)
    p.add_argument("--replicates", type=int, default=5)
    p.add_argument("--base-beta", type=float, default=0.4)
    p.add_argument("--kappa", type=float, default=0.9)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("optimize", help="search for a good stringency policy")
    p.add_argument("--env", choices=["policy", "cost"], default="policy")
    p.add_argument("--algorithm", choices=["bo", "qlearn", "random"], default="bo")
    p.add_argument("--budget", type=int, default=40)
    p.add_argument("--episodes", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ledger", default=env_ledger)
    p.add_argument("--out", default=None)
    _add_policy_flags(p)
    _add_cost_flags(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("simulate", help="run a fixed policy and export the trajectory")
    p.add_argument("--env", choices=["policy", "cost"], default="policy")
    p.add_argument("--policy", required=True, help="comma-separated levels, one per step")
    p.add_argument("--export", choices=["csv", "json"], default="csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    _add_policy_flags(p)
    _add_cost_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int,
                   default=int(os.environ.get("EPIGYM_PORT", "8000")))
    p.add_argument("--ledger", default=env_ledger)
    p.add_argument("--ui", default=None,
                   help="directory with the built frontend to serve at /")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (EpiGymError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
