"""Run manifests (YAML), hardware spec files and JSON results archives."""

from __future__ import annotations

import copy
import datetime as _dt
import json
import os
from importlib import resources
from pathlib import Path

import jsonschema
import yaml

from rooftune import __version__
from rooftune._accel import backend_name
from rooftune.budget import Budget
from rooftune.roofline import HardwareSpec
from rooftune.search import OptimizationMode, TuningResult
from rooftune.wire import dumps, outcome_to_dict

ARCHIVE_SCHEMA_VERSION = 1


class ManifestError(ValueError):
    pass


DEFAULT_MANIFEST = {
    "kernel": "synthetic",
    "space": "demo5",
    "mode": "default",
    "reverse": False,
    "seed": 0,
    "out": "results",
    "isolation": "in_process",
    "score": "best",
    "sockets": 1,
    "hardware": None,
    "tuner": {
        "invocations": 10,
        "iterations": 200,
        "timeout": 10.0,
        "ci_level": 0.99,
        "ci_tol": 0.01,
        "min_count": 2,
        "ci_stop": True,
        "prune": True,
    },
    "kernel_options": {
        "backend": "blas",
        "affinity": "close",
        "threads": 1,
    },
}


def _merge(base, override, path=""):
    for key, value in override.items():
        if key not in base:
            raise ManifestError(f"unknown manifest key {path + key!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ManifestError(f"manifest key {path + key!r} must be a mapping")
            _merge(base[key], value, path + key + ".")
        else:
            base[key] = value
    return base


def load_manifest(path=None, overrides=None) -> dict:
    """Defaults, then the YAML file, then ``overrides`` (same nested layout)."""
    manifest = copy.deepcopy(DEFAULT_MANIFEST)
    if path is not None:
        try:
            with open(path) as fh:
                data = yaml.safe_load(fh) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ManifestError("manifest must be a mapping")
        _merge(manifest, data)
    if overrides:
        _merge(manifest, overrides)
    return manifest


def manifest_budget(manifest: dict) -> Budget:
    t = manifest["tuner"]
    try:
        return Budget(max_time=float(t["timeout"]), max_count=int(t["iterations"]),
                      ci_level=float(t["ci_level"]), ci_rel_tol=float(t["ci_tol"]),
                      min_count=int(t["min_count"]), enable_ci_stop=bool(t["ci_stop"]),
                      enable_prune_stop=bool(t["prune"]))
    except (TypeError, ValueError) as exc:
        raise ManifestError(str(exc)) from exc


def manifest_mode(manifest: dict) -> OptimizationMode:
    t = manifest["tuner"]
    hand_iters = t["iterations"] if str(manifest["mode"]).startswith("hand-") else None
    try:
        return OptimizationMode.from_label(str(manifest["mode"]), bool(manifest["reverse"]), hand_iters)
    except ValueError as exc:
        raise ManifestError(str(exc)) from exc


# -- hardware ---------------------------------------------------------------

def builtin_hardware():
    """Names of the shipped hardware spec files."""
    root = resources.files("rooftune") / "data" / "hardware"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def load_hardware(path_or_name) -> HardwareSpec:
    path = Path(path_or_name)
    if not path.exists():
        candidate = resources.files("rooftune") / "data" / "hardware" / f"{path_or_name}.yaml"
        if not candidate.is_file():
            raise ManifestError(f"no hardware spec {path_or_name!r} (built-ins: {', '.join(builtin_hardware())})")
        text = candidate.read_text()
    else:
        text = path.read_text()
    try:
        return HardwareSpec.from_dict(yaml.safe_load(text))
    except (TypeError, ValueError, yaml.YAMLError) as exc:
        raise ManifestError(f"invalid hardware spec {path_or_name}: {exc}") from exc


def detect_hardware_template() -> dict:
    """Pre-filled spec from the OS topology; frequency and memory fields are left for the user."""
    from rooftune.kernels.affinity import cpu_sockets

    sockets = cpu_sockets()
    cores = max(len(c) for c in sockets.values())
    return {
        "name": os.uname().nodename if hasattr(os, "uname") else "host",
        "cpu_freq": None, "cores": cores, "avx_vector_bits": None, "avx_units": None,
        "avx_ops_per_cycle": 2, "sockets": len(sockets), "dram_freq": None, "channels": None,
        "bytes_per_transfer": 8, "l3_size": None,
    }


# -- archives ---------------------------------------------------------------

_NUM = {"type": ["number", "null"]}
_OUTCOME = {
    "type": "object",
    "required": ["count", "mean", "corrected_sum", "variance", "elapsed", "stop_reason"],
    "properties": {
        "count": {"type": "integer", "minimum": 0},
        "mean": {"type": "number"},
        "corrected_sum": {"type": "number", "minimum": 0},
        "variance": _NUM,
        "elapsed": {"type": "number", "minimum": 0},
        "stop_reason": {"enum": ["MaxTime", "MaxCount", "CiConverged", "PrunedByBest", "ExternallyAborted"]},
    },
}
ARCHIVE_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "tool", "manifest", "summary", "results", "timestamps"],
    "properties": {
        "schema_version": {"const": ARCHIVE_SCHEMA_VERSION},
        "tool": {"type": "object", "required": ["name", "version"]},
        "timestamps": {"type": "object", "required": ["started", "finished"]},
        "manifest": {"type": "object", "required": ["kernel", "space", "mode", "seed", "tuner"]},
        "summary": {
            "type": "object",
            "required": ["best_config", "best_label", "best_value", "mode", "total_observations",
                         "total_observation_time", "total_wall_time", "configurations"],
            "properties": {"total_observations": {"type": "integer", "minimum": 0}, "best_value": _NUM},
        },
        "results": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["config", "label", "score", "aggregate", "invocations", "failed"],
                "properties": {"invocations": {"type": "array", "items": _OUTCOME}, "score": _NUM},
            },
        },
    },
}


def _stats_dict(st):
    return {"count": st.count, "mean": st.mean, "corrected_sum": st.corrected_sum,
            "variance": st.sample_variance() if st.count >= 2 else None}


def build_archive(manifest: dict, result: TuningResult, started: str, finished: str) -> dict:
    results = []
    for cr in result.results:
        results.append({
            "config": cr.config.as_dict(),
            "label": cr.config.label,
            "score": cr.score,
            "best_invocation_mean": cr.best_invocation_mean,
            "aggregate": _stats_dict(cr.aggregate),
            "total_elapsed": cr.total_elapsed,
            "observations": cr.observations,
            "failed": cr.failed,
            "error": cr.error,
            "outer_pruned": cr.outer_pruned,
            "invocations": [outcome_to_dict(o) for o in cr.per_invocation],
        })
    best = result.best_config
    return {
        "schema_version": ARCHIVE_SCHEMA_VERSION,
        "tool": {"name": "rooftune", "version": __version__, "kernel_backend": backend_name()},
        "timestamps": {"started": started, "finished": finished},
        "manifest": manifest,
        "summary": {
            "best_config": best.as_dict() if best is not None else None,
            "best_label": best.label if best is not None else None,
            "best_value": result.best_value,
            "mode": result.mode,
            "total_observations": result.total_observations,
            "total_observation_time": result.total_observation_time,
            "total_wall_time": result.total_wall_time,
            "configurations": len(result.results),
        },
        "results": results,
    }


def now_iso() -> str:
    return _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()


def dump_archive(archive: dict) -> str:
    return dumps(archive, indent=1) + "\n"


def save_archive(archive: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_archive(archive))
    return path


def validate_archive(archive: dict) -> dict:
    try:
        jsonschema.validate(archive, ARCHIVE_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ManifestError(f"invalid results archive: {exc.message}") from exc
    return archive


def load_archive(path) -> dict:
    try:
        archive = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read archive {path}: {exc}") from exc
    return validate_archive(archive)
