"""HTTP/JSON service: environment sessions and asynchronous experiment runs.

Sessions are in-process environments keyed by UUID. The JSON surface mirrors
the step contract exactly (observation, reward, done, info), so a scripted
HTTP episode reproduces an in-process episode bit for bit. Every successful
step appends one record to the shared ledger.
"""

from __future__ import annotations

import datetime as _dt
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import envs as _envs
from . import optimize as _optimize
from . import qlearn as _qlearn
from .core import ContinuousBox, DiscreteRange, Environment, run_episode
from .data_io import LedgerQuery, append_eval, config_digest, new_eval_record, query_ledger
from .errors import (
    ActionOutOfSpace,
    ConfigInvalid,
    EpiGymError,
    EpisodeFinished,
    ResetRequired,
)

ENV_TYPES = ("calibration", "policy", "cost")
EXPERIMENT_KINDS = ("calibrate", "optimize_policy", "qlearn")


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status = status
        self.code = code
        self.message = message
        super().__init__(message)


def build_environment(env_type: str, config: dict) -> Environment:
    """Instantiate an environment from its wire-format configuration."""
    if env_type not in ENV_TYPES:
        raise ApiError(400, "UnknownEnvType", f"unknown env_type {env_type!r}")
    try:
        if env_type == "calibration":
            return _envs.make_calibration_env(_envs.CalibrationConfig.from_dict(config))
        policy_cfg = _envs.PolicyEnvConfig.from_dict(config)
        if env_type == "policy":
            return _envs.make_policy_env(policy_cfg)
        cost_cfg = _envs.CostConfig.from_dict(config.get("cost", {}))
        return _envs.make_cost_env(policy_cfg, cost_cfg)
    except (ConfigInvalid, ValueError, KeyError, TypeError) as exc:
        raise ApiError(400, "ConfigInvalid", f"invalid config: {exc}") from exc


@dataclass
class Session:
    env: Environment
    env_type: str
    config: dict
    created_at: str
    state: str = "Fresh"  # Fresh -> Running -> Done; reset returns to Running
    seed: int = 0
    history: list[dict] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock)


@dataclass
class ExperimentRun:
    status: str = "pending"  # pending -> running -> done | failed
    result: dict | None = None
    error: str | None = None


def _parse_action(env: Environment, raw):
    space = env.action_space
    if isinstance(space, DiscreteRange):
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise ApiError(422, "ActionOutOfSpace",
                           f"discrete action must be an integer, got {raw!r}")
        return raw
    if isinstance(space, ContinuousBox):
        if not isinstance(raw, (list, tuple)):
            raise ApiError(422, "ActionOutOfSpace",
                           f"continuous action must be a list, got {raw!r}")
        try:
            return np.asarray([float(v) for v in raw])
        except (TypeError, ValueError):
            raise ApiError(422, "ActionOutOfSpace", "action entries must be numbers") from None
    raise ApiError(422, "ActionOutOfSpace", "unsupported action space")


def _require(payload: dict, key: str):
    if key not in payload:
        raise ApiError(400, "ConfigInvalid", f"missing required field {key!r}")
    return payload[key]


def _as_seed(value) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise ApiError(400, "ConfigInvalid", f"seed must be a nonnegative integer, got {value!r}")
    return value


def _floats(values) -> list[float]:
    return [float(v) for v in values]


def run_experiment_sync(kind: str, env_type: str, env_config: dict,
                        algorithm: str, algorithm_config: dict, seed: int,
                        ledger_path) -> dict:
    """Execute an experiment request; identical to calling the library directly."""
    env = build_environment(env_type, env_config)
    if kind == "calibrate":
        if env_type != "calibration":
            raise ApiError(400, "ConfigInvalid", "calibrate requires env_type=calibration")
        if algorithm not in ("bayes_opt", "random_search"):
            raise ApiError(400, "ConfigInvalid", f"unsupported algorithm {algorithm!r}")
    elif kind == "optimize_policy":
        if env_type not in ("policy", "cost"):
            raise ApiError(400, "ConfigInvalid", "optimize_policy requires a policy or cost env")
        if algorithm not in ("bayes_opt", "random_search"):
            raise ApiError(400, "ConfigInvalid", f"unsupported algorithm {algorithm!r}")
    elif kind == "qlearn":
        if env_type not in ("policy", "cost"):
            raise ApiError(400, "ConfigInvalid", "qlearn requires a policy or cost env")
        if algorithm != "q_learn":
            raise ApiError(400, "ConfigInvalid", "qlearn experiments use algorithm=q_learn")
    else:
        raise ApiError(400, "ConfigInvalid", f"unknown experiment kind {kind!r}")

    if algorithm == "bayes_opt":
        budget = int(algorithm_config.get("budget", 20))
        kwargs = {}
        for key in ("ucb_beta", "candidate_count"):
            if key in algorithm_config:
                kwargs[key] = algorithm_config[key]
        config = _optimize.BOConfig(
            budget=budget,
            init_random=int(algorithm_config.get("init_random", max(1, min(5, budget - 1)))),
            seed=seed,
            **kwargs,
        )
        result = _optimize.bayes_opt(env, config, ledger_path=ledger_path)
    elif algorithm == "random_search":
        result = _optimize.random_search(env, int(algorithm_config.get("budget", 20)),
                                         seed=seed, ledger_path=ledger_path)
    else:
        dcfg = _qlearn.DiscretizerConfig(
            bins_per_dim=int(algorithm_config.get("bins_per_dim", 10)),
            action_stride=int(algorithm_config.get("action_stride", 10)))
        qcfg = _qlearn.QLearnConfig(
            episodes=int(algorithm_config.get("episodes", 200)),
            learning_rate=float(algorithm_config.get("learning_rate", 0.2)),
            discount=float(algorithm_config.get("discount", 0.95)),
            epsilon_start=float(algorithm_config.get("epsilon_start", 1.0)),
            epsilon_end=float(algorithm_config.get("epsilon_end", 0.05)),
            seed=seed)
        _table, policy = _qlearn.q_learn(env, dcfg, qcfg, ledger_path=ledger_path)
        rollout = run_episode(env, policy, seed=seed)
        return {
            "best_action": [int(a) for a in rollout.actions],
            "best_reward": float(rollout.total_reward),
            "history": [],
            "diagnostics": {"episodes": qcfg.episodes, "levels": list(_table.levels)},
        }
    return {
        "best_action": result.best_action,
        "best_reward": float(result.best_reward),
        "history": [rec.to_json_dict() for rec in result.history],
        "diagnostics": result.diagnostics,
    }


def create_app(ledger_path, ui_dir=None) -> FastAPI:
    """Build the service; ``ui_dir`` optionally serves a built frontend at /."""
    ledger_path = Path(ledger_path)
    app = FastAPI(title="epigym", version="0.1.0")
    sessions: dict[str, Session] = {}
    sessions_lock = threading.Lock()
    runs: dict[str, ExperimentRun] = {}
    runs_lock = threading.Lock()

    @app.exception_handler(ApiError)
    async def api_error_handler(_request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"error": {"code": exc.code, "message": exc.message}})

    @app.exception_handler(EpiGymError)
    async def epigym_error_handler(_request: Request, exc: EpiGymError):
        return JSONResponse(status_code=500,
                            content={"error": {"code": type(exc).__name__, "message": str(exc)}})

    def get_session(env_id: str) -> Session:
        with sessions_lock:
            session = sessions.get(env_id)
        if session is None:
            raise ApiError(404, "UnknownEnv", f"no environment {env_id!r}")
        return session

    async def read_json(request: Request) -> dict:
        try:
            payload = await request.json()
        except Exception:
            raise ApiError(400, "ConfigInvalid", "request body must be JSON") from None
        if not isinstance(payload, dict):
            raise ApiError(400, "ConfigInvalid", "request body must be a JSON object")
        return payload

    @app.post("/v1/environments")
    async def create_environment(request: Request):
        payload = await read_json(request)
        env_type = _require(payload, "env_type")
        config = _require(payload, "config")
        if not isinstance(config, dict):
            raise ApiError(400, "ConfigInvalid", "config must be a JSON object")
        env = build_environment(env_type, config)
        env_id = str(uuid.uuid4())
        session = Session(env=env, env_type=env_type, config=config,
                          created_at=_dt.datetime.now(_dt.timezone.utc).isoformat())
        with sessions_lock:
            sessions[env_id] = session
        return JSONResponse(status_code=201, content={"env_id": env_id})

    @app.post("/v1/environments/{env_id}/reset")
    async def reset_environment(env_id: str, request: Request):
        payload = await read_json(request)
        seed = _as_seed(payload.get("seed", 0))
        session = get_session(env_id)
        with session.lock:
            observation = session.env.reset(seed)
            session.state = "Running"
            session.seed = seed
            session.history = []
            return {"observation": _floats(observation)}

    @app.post("/v1/environments/{env_id}/step")
    async def step_environment(env_id: str, request: Request):
        payload = await read_json(request)
        raw_action = _require(payload, "action")
        session = get_session(env_id)
        action = _parse_action(session.env, raw_action)
        with session.lock:
            try:
                result = session.env.step(action)
            except ActionOutOfSpace as exc:
                raise ApiError(422, "ActionOutOfSpace", str(exc)) from exc
            except EpisodeFinished as exc:
                raise ApiError(409, "EpisodeFinished", str(exc)) from exc
            except ResetRequired as exc:
                raise ApiError(409, "ResetRequired", str(exc)) from exc
            body = {
                "observation": _floats(result.observation),
                "reward": float(result.reward),
                "done": bool(result.done),
                "info": {k: float(v) for k, v in result.info.items()},
            }
            if result.done:
                session.state = "Done"
            session.history.append({"action": raw_action, **body})
            append_eval(ledger_path, new_eval_record(
                session.env_type, config_digest(session.env.config_dict()),
                "session", seed=session.seed, action=raw_action,
                reward=result.reward, info_summary=body["info"]))
            return body

    @app.get("/v1/environments/{env_id}")
    async def describe_environment(env_id: str):
        session = get_session(env_id)
        with session.lock:
            return {
                "env_id": env_id,
                "env_type": session.env_type,
                "state": session.state,
                "step_index": session.env.step_index,
                "horizon": session.env.horizon,
                "seed": session.seed,
                "created_at": session.created_at,
                "config": session.config,
                "config_digest": config_digest(session.env.config_dict()),
                "history": list(session.history),
            }

    @app.delete("/v1/environments/{env_id}")
    async def delete_environment(env_id: str):
        with sessions_lock:
            if env_id not in sessions:
                raise ApiError(404, "UnknownEnv", f"no environment {env_id!r}")
            del sessions[env_id]
        return {"env_id": env_id, "deleted": True}

    @app.post("/v1/experiments")
    async def create_experiment(request: Request):
        payload = await read_json(request)
        kind = _require(payload, "kind")
        env_type = _require(payload, "env_type")
        env_config = _require(payload, "env_config")
        if kind not in EXPERIMENT_KINDS:
            raise ApiError(400, "ConfigInvalid", f"unknown experiment kind {kind!r}")
        default_algorithm = "q_learn" if kind == "qlearn" else "bayes_opt"
        algorithm = payload.get("algorithm", default_algorithm)
        algorithm_config = payload.get("algorithm_config", {})
        seed = _as_seed(payload.get("seed", 0))
        # validate eagerly so bad requests fail with 400, not a failed run
        build_environment(env_type, env_config)
        run_id = str(uuid.uuid4())
        run = ExperimentRun()
        with runs_lock:
            runs[run_id] = run

        def work():
            run.status = "running"
            try:
                result = run_experiment_sync(kind, env_type, env_config, algorithm,
                                             algorithm_config, seed, ledger_path)
            except Exception as exc:  # failure is reported through polling
                run.status = "failed"
                run.error = f"{type(exc).__name__}: {exc}"
                return
            run.result = result
            run.status = "done"

        threading.Thread(target=work, daemon=True).start()
        return JSONResponse(status_code=201, content={"run_id": run_id})

    @app.get("/v1/experiments/{run_id}")
    async def get_experiment(run_id: str):
        with runs_lock:
            run = runs.get(run_id)
        if run is None:
            raise ApiError(404, "UnknownRun", f"no experiment {run_id!r}")
        return {"status": run.status, "result": run.result, "error": run.error}

    @app.get("/v1/ledger")
    async def get_ledger(env_type: str | None = None, algorithm: str | None = None,
                         limit: int | None = None):
        if limit is not None and limit < 1:
            raise ApiError(400, "ConfigInvalid", "limit must be >= 1")
        records, skipped = query_ledger(ledger_path, LedgerQuery(
            env_type=env_type, algorithm=algorithm, limit=limit))
        return {"records": [rec.to_json_dict() for rec in records], "skipped": skipped}

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        # mounted last so /v1/* keeps routing to the API
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
