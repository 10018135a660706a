"""Case-data ingestion, the append-only JSONL evaluation ledger, and trajectory export.

The ledger is a plain JSON-lines file so that evaluations collected by
different algorithms, sessions, and processes accumulate in one shared,
diffable place. Appends are serialized per path within a process; across
processes they rely on line-sized O_APPEND writes.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .envs import CaseSeries
from .errors import GapError, MonotonicityError, ParseError
from .models import CompartmentState, Trajectory

CASE_CSV_HEADER = "date,cumulative_cases"
TRAJECTORY_CSV_HEADER = "day,s,i,r,d,cumulative_cases"


@dataclass(frozen=True)
class EvalRecord:
    """One evaluation: an action, its reward, and enough context to replay it."""

    run_id: str
    env_type: str
    config_digest: str
    algorithm: str
    seed: int
    action: object
    reward: float
    info_summary: Mapping[str, float] = field(default_factory=dict)
    timestamp: str = ""

    def to_json_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "env_type": self.env_type,
            "config_digest": self.config_digest,
            "algorithm": self.algorithm,
            "seed": int(self.seed),
            "action": self.action,
            "reward": float(self.reward),
            "info_summary": dict(self.info_summary),
            "timestamp": self.timestamp,
        }

    @staticmethod
    def from_json_dict(data: Mapping) -> "EvalRecord":
        return EvalRecord(
            run_id=str(data["run_id"]),
            env_type=str(data["env_type"]),
            config_digest=str(data["config_digest"]),
            algorithm=str(data["algorithm"]),
            seed=int(data["seed"]),
            action=data["action"],
            reward=float(data["reward"]),
            info_summary=dict(data.get("info_summary", {})),
            timestamp=str(data.get("timestamp", "")),
        )


def new_eval_record(env_type: str, config_digest: str, algorithm: str, seed: int,
                    action, reward: float,
                    info_summary: Mapping[str, float] | None = None) -> EvalRecord:
    """Build a record with a fresh UUID and a UTC timestamp."""
    return EvalRecord(
        run_id=str(uuid.uuid4()),
        env_type=env_type,
        config_digest=config_digest,
        algorithm=algorithm,
        seed=int(seed),
        action=action,
        reward=float(reward),
        info_summary=dict(info_summary or {}),
        timestamp=_dt.datetime.now(_dt.timezone.utc).isoformat(),
    )


@dataclass(frozen=True)
class LedgerQuery:
    env_type: str | None = None
    config_digest: str | None = None
    algorithm: str | None = None
    limit: int | None = None

    def __post_init__(self):
        if self.limit is not None and self.limit < 1:
            raise ValueError("limit must be >= 1 when present")

    def matches(self, record: EvalRecord) -> bool:
        if self.env_type is not None and record.env_type != self.env_type:
            return False
        if self.config_digest is not None and record.config_digest != self.config_digest:
            return False
        if self.algorithm is not None and record.algorithm != self.algorithm:
            return False
        return True


def canonical_json(obj) -> str:
    """Stable serialization: sorted keys, shortest round-trip numbers."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def config_digest(config: Mapping) -> str:
    """Hex digest of the canonical serialization; field-order independent."""
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


# one writer lock per ledger path within this process
_WRITER_LOCKS: dict[str, threading.Lock] = {}
_WRITER_LOCKS_GUARD = threading.Lock()


def _writer_lock(path: Path) -> threading.Lock:
    key = str(path.resolve())
    with _WRITER_LOCKS_GUARD:
        return _WRITER_LOCKS.setdefault(key, threading.Lock())


def append_eval(ledger_path, record: EvalRecord) -> None:
    """Append one record as a single JSON line; the file stays valid JSONL."""
    path = Path(ledger_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    line = json.dumps(record.to_json_dict(), ensure_ascii=False) + "\n"
    with _writer_lock(path):
        with open(path, "a", encoding="utf-8") as f:
            f.write(line)
            f.flush()


def query_ledger(ledger_path, query: LedgerQuery | None = None) -> tuple[list[EvalRecord], int]:
    """Filtered records in file order, plus the number of corrupt lines skipped."""
    query = query or LedgerQuery()
    path = Path(ledger_path)
    records: list[EvalRecord] = []
    skipped = 0
    if not path.exists():
        return records, skipped
    with open(path, "r", encoding="utf-8") as f:
        for raw in f:
            raw = raw.strip()
            if not raw:
                continue
            try:
                record = EvalRecord.from_json_dict(json.loads(raw))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError):
                skipped += 1
                continue
            if query.matches(record):
                records.append(record)
                if query.limit is not None and len(records) >= query.limit:
                    break
    return records, skipped


def load_case_series(data: bytes) -> CaseSeries:
    """Parse and validate a `date,cumulative_cases` CSV (daily, nondecreasing)."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"not valid UTF-8: {exc}") from None
    lines = text.splitlines()
    if not lines or lines[0].strip() != CASE_CSV_HEADER:
        raise ParseError(f"expected header {CASE_CSV_HEADER!r}", line=1)
    dates: list[_dt.date] = []
    counts: list[float] = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if raw.strip() == "":
            continue
        parts = raw.split(",")
        if len(parts) != 2:
            raise ParseError(f"expected 2 fields, got {len(parts)}", line=lineno)
        try:
            date = _dt.date.fromisoformat(parts[0].strip())
        except ValueError:
            raise ParseError(f"bad date {parts[0]!r}", line=lineno) from None
        try:
            count = float(parts[1])
        except ValueError:
            raise ParseError(f"bad count {parts[1]!r}", line=lineno) from None
        if count < 0:
            raise ParseError(f"negative count {count}", line=lineno)
        if dates:
            delta = (date - dates[-1]).days
            if delta <= 0:
                raise ParseError(f"date {date} not after {dates[-1]}", line=lineno)
            if delta > 1:
                raise GapError(f"missing {delta - 1} day(s) before {date}", line=lineno)
            if count < counts[-1]:
                raise MonotonicityError(
                    f"cumulative count decreased from {counts[-1]} to {count}", line=lineno)
        dates.append(date)
        counts.append(count)
    if not dates:
        raise ParseError("no data rows")
    return CaseSeries(dates=tuple(dates), cumulative_cases=tuple(counts))


def dump_case_series(series: CaseSeries) -> bytes:
    """Inverse of load_case_series."""
    lines = [CASE_CSV_HEADER]
    for date, count in zip(series.dates, series.cumulative_cases):
        lines.append(f"{date.isoformat()},{format_float(count)}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def format_float(value: float) -> str:
    """Shortest decimal form that round-trips the exact double."""
    return repr(float(value))


def export_trajectory(traj: Trajectory, fmt: str = "csv") -> bytes:
    """Serialize daily states; values round-trip exactly."""
    if len(traj.days) == 0:
        raise ValueError("trajectory is empty")
    rows = [
        {"day": t, "s": st.s, "i": st.i, "r": st.r, "d": st.d, "cumulative_cases": cum}
        for t, (st, cum) in enumerate(zip(traj.days, traj.cumulative_cases))
    ]
    if fmt == "json":
        return (json.dumps(rows, ensure_ascii=False, indent=2) + "\n").encode("utf-8")
    if fmt == "csv":
        lines = [TRAJECTORY_CSV_HEADER]
        for row in rows:
            lines.append(",".join([str(row["day"])] + [
                format_float(row[k]) for k in ("s", "i", "r", "d", "cumulative_cases")]))
        return ("\n".join(lines) + "\n").encode("utf-8")
    raise ValueError(f"unknown format {fmt!r} (expected 'csv' or 'json')")


def load_trajectory_csv(data: bytes) -> Trajectory:
    """Parse a trajectory CSV produced by export_trajectory."""
    lines = data.decode("utf-8").splitlines()
    if not lines or lines[0].strip() != TRAJECTORY_CSV_HEADER:
        raise ParseError(f"expected header {TRAJECTORY_CSV_HEADER!r}", line=1)
    states: list[CompartmentState] = []
    cumulative: list[float] = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if raw.strip() == "":
            continue
        parts = raw.split(",")
        if len(parts) != 6:
            raise ParseError(f"expected 6 fields, got {len(parts)}", line=lineno)
        try:
            s, i, r, d, cum = (float(p) for p in parts[1:])
        except ValueError:
            raise ParseError("bad numeric field", line=lineno) from None
        states.append(CompartmentState(s=s, i=i, r=r, d=d, n=s + i + r + d))
        cumulative.append(cum)
    if not states:
        raise ParseError("no data rows")
    return Trajectory(days=states, cumulative_cases=cumulative)


def iter_records(records: Iterable[EvalRecord]) -> Iterable[dict]:
    """JSON-ready dicts for a sequence of records (service/CLI output helper)."""
    for record in records:
        yield record.to_json_dict()
