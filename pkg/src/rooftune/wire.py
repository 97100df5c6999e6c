"""Byte-stable structured text and the worker result-line protocol.

All files are JSON with sorted keys; floats are written with 17 significant
digits so that every value round-trips exactly. Non-finite floats become
``null``.

Worker result line (one line on stdout)::

    {"config": {...}, "corrected_sum": C, "count": n, "elapsed": s,
     "error": null|str, "kernel": "...", "mean": m, "schema": 1,
     "stop_reason": "...", "variance": v|null, "warnings": [...]}
"""

from __future__ import annotations

import json
import math

from rooftune.budget import Budget, EvalOutcome, StopReason
from rooftune.stats import OnlineStats

WIRE_SCHEMA = 1


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    text = format(x, ".17g")
    if "e" not in text and "." not in text and "n" not in text:
        text += ".0"
    return text


def dumps(obj, indent=None, _level=0) -> str:
    """Serialise ``obj`` deterministically (sorted keys, fixed float format)."""
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(int(obj))
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        if not items:
            return "{}"
        if indent is None:
            return "{" + ", ".join(f"{json.dumps(k)}: {dumps(v)}" for k, v in items) + "}"
        pad = " " * (indent * (_level + 1))
        body = (",\n").join(f"{pad}{json.dumps(k)}: {dumps(v, indent, _level + 1)}" for k, v in items)
        return "{\n" + body + "\n" + " " * (indent * _level) + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if indent is None:
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        pad = " " * (indent * (_level + 1))
        body = ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj)
        return "[\n" + body + "\n" + " " * (indent * _level) + "]"
    if hasattr(obj, "item"):  # numpy scalar
        return dumps(obj.item(), indent, _level)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def outcome_to_dict(outcome: EvalOutcome) -> dict:
    st = outcome.stats
    return {
        "count": st.count,
        "mean": st.mean,
        "corrected_sum": st.corrected_sum,
        "variance": st.sample_variance() if st.count >= 2 else None,
        "elapsed": outcome.elapsed,
        "stop_reason": outcome.stop_reason.value,
        "error": outcome.error,
        "warnings": list(outcome.warnings),
    }


def outcome_from_dict(d: dict) -> EvalOutcome:
    count = int(d["count"])
    mean = float(d["mean"])
    if "corrected_sum" in d and d["corrected_sum"] is not None:
        csum = float(d["corrected_sum"])
    elif d.get("variance") is not None and count >= 2:
        csum = float(d["variance"]) * (count - 1)
    else:
        csum = 0.0
    return EvalOutcome(OnlineStats(count, mean, csum), StopReason(d["stop_reason"]), float(d["elapsed"]),
                       error=d.get("error"), warnings=list(d.get("warnings") or []))


def encode_outcome(kernel: str, config: dict, outcome: EvalOutcome) -> str:
    record = {"schema": WIRE_SCHEMA, "kernel": kernel, "config": dict(config)}
    record.update(outcome_to_dict(outcome))
    return dumps(record)


def decode_outcome(line: str):
    """Parse a worker result line; returns ``(record, outcome)``. Raises ValueError."""
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ValueError(str(exc)) from exc
    if not isinstance(record, dict) or record.get("schema") != WIRE_SCHEMA:
        raise ValueError("not a worker result record")
    try:
        return record, outcome_from_dict(record)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"missing field {exc}") from exc


def budget_args(budget: Budget) -> list:
    args = [
        "--max-time", repr(float(budget.max_time)),
        "--max-count", str(int(budget.max_count)),
        "--ci-level", repr(float(budget.ci_level)),
        "--ci-tol", repr(float(budget.ci_rel_tol)),
        "--min-count", str(int(budget.min_count)),
    ]
    if not budget.enable_ci_stop:
        args.append("--no-ci-stop")
    if not budget.enable_prune_stop:
        args.append("--no-prune")
    return args


def worker_argv(config, budget: Budget, best, invocation: int, seed: int) -> list:
    """Arguments (after the program name) for the ``worker`` subcommand."""
    argv = ["worker", "--kernel", config.kernel, "--seed", str(int(seed)), "--invocation", str(int(invocation))]
    for name, value in config.params:
        argv += ["--param", f"{name}={value!r}" if isinstance(value, float) else f"{name}={value}"]
    argv += budget_args(budget)
    if best is not None:
        argv += ["--best", repr(float(best))]
    return argv


def parse_param(text: str):
    name, sep, raw = text.partition("=")
    if not sep or not name:
        raise ValueError(f"expected name=value, got {text!r}")
    for conv in (int, float):
        try:
            return name, conv(raw)
        except ValueError:
            pass
    return name, raw
