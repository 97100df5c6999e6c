"""Search spaces and the exhaustive two-level (invocation x iteration) tuner."""

from __future__ import annotations

import functools
import itertools
import logging
import math
import subprocess
import sys
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from rooftune.budget import Budget, EvalOutcome, StopReason, evaluate
from rooftune.kernels.affinity import AffinityPolicy
from rooftune.kernels.dgemm import DgemmConfig, prepare_dgemm
from rooftune.kernels.synthetic import SyntheticConfig, SyntheticSource, evaluate_synthetic
from rooftune.kernels.triad import TriadConfig, prepare_triad
from rooftune.stats import OnlineStats

logger = logging.getLogger(__name__)

FORWARD = "forward"
REVERSE = "reverse"

KIB = 1024
MIB = 1024 * 1024


@dataclass(frozen=True)
class KernelConfig:
    """A point in a search space: kernel name plus sorted (name, value) parameters."""

    kernel: str
    params: tuple

    @classmethod
    def make(cls, kernel, **params):
        return cls(kernel, tuple(sorted(params.items())))

    def as_dict(self):
        return dict(self.params)

    def __getitem__(self, name):
        return self.as_dict()[name]

    @property
    def label(self):
        d = self.as_dict()
        if self.kernel == "synthetic":
            return str(d["id"])
        if self.kernel == "dgemm":
            return f"{d['n']},{d['m']},{d['k']}"
        if self.kernel == "triad":
            return f"N={d['length']}"
        return ",".join(f"{k}={v}" for k, v in self.params)

    def dgemm(self) -> DgemmConfig:
        d = self.as_dict()
        return DgemmConfig(int(d["n"]), int(d["m"]), int(d["k"]))

    def triad(self) -> TriadConfig:
        d = self.as_dict()
        return TriadConfig(int(d["length"]), float(d.get("gamma", 3.0)))

    @functools.lru_cache(maxsize=4096)
    def synthetic(self) -> SyntheticConfig:
        d = self.as_dict()
        return SyntheticConfig(
            id=str(d["id"]), location=float(d["location"]), scale=float(d["scale"]),
            kind=str(d.get("kind", "normal")), per_obs_duration=float(d.get("duration", 0.01)),
            drift_depth=float(d.get("drift_depth", 0.0)), drift_length=int(d.get("drift_length", 0)),
        )


@dataclass
class SearchSpace:
    """Cartesian product of named axes, filtered by constraints.

    ``extra`` optionally maps each axis-value tuple to additional parameters
    merged into the generated config (used by synthetic spaces).
    """

    kernel: str
    axes: dict
    constraints: Sequence[Callable[[dict], bool]] = ()
    order: str = FORWARD
    extra: Optional[dict] = None
    name: str = ""

    def points(self):
        names = list(self.axes)
        for values in itertools.product(*(self.axes[n] for n in names)):
            point = dict(zip(names, values))
            if all(c(point) for c in self.constraints):
                yield values, point

    def configs(self):
        out = []
        for values, point in self.points():
            if self.extra is not None:
                point = {**point, **self.extra[values]}
            out.append(KernelConfig.make(self.kernel, **point))
        if self.order == REVERSE:
            out.reverse()
        return out

    def __len__(self):
        return sum(1 for _ in self.points())

    def reversed(self):
        return replace(self, order=FORWARD if self.order == REVERSE else REVERSE)


def build_dgemm_space(kind: str = "reduced") -> SearchSpace:
    if kind == "initial":
        nm = [2**p for p in range(6, 13)]
        return SearchSpace("dgemm", {"n": nm, "m": list(nm), "k": [2**p for p in range(1, 12)]}, name="initial")
    if kind == "reduced":
        return SearchSpace("dgemm", {
            "n": [500, 1000, 2000, 4000],
            "m": [512, 1024, 2048, 4096],
            "k": [64, 128, 256, 512, 1024, 2048],
        }, name="reduced")
    raise ValueError(f"unknown DGEMM space {kind!r}; expected 'initial' or 'reduced'")


def build_triad_space(min_bytes: int = 3 * KIB, max_bytes: int = 768 * MIB) -> SearchSpace:
    """Working sets doubling from ``min_bytes`` up to ``max_bytes`` inclusive."""
    if min_bytes < 24 or max_bytes < min_bytes:
        raise ValueError(f"empty TRIAD range [{min_bytes}, {max_bytes}]")
    sizes = []
    size = int(min_bytes)
    while size <= max_bytes:
        sizes.append(size)
        size *= 2
    lengths = [s // 24 for s in sizes]
    extra = {(n,): {"working_set": s} for n, s in zip(lengths, sizes)}
    return SearchSpace("triad", {"length": lengths}, extra=extra, name="triad")


def _synthetic_space(name, entries, axes):
    extra = {}
    for values, (cid, loc, scale) in entries.items():
        extra[values] = {"location": loc, "scale": scale, "kind": "normal", "duration": 0.01}
        if "id" not in axes:
            extra[values]["id"] = cid
    return SearchSpace("synthetic", axes, extra=extra, name=name)


def build_synthetic_space(name: str = "demo5", seed: int = 0) -> SearchSpace:
    """Synthetic spaces with known optimum.

    ``demo5``: five configs with means 10..50 and sd 0.5. ``demo96``: the
    reduced DGEMM grid; a seeded top config sits 5% above the runner-up
    (100), the rest lie in [60, 99]; every sd is 1% of its mean.
    """
    if name == "demo5":
        ids = [f"c{i}" for i in range(5)]
        entries = {(cid,): (cid, 10.0 * (i + 1), 0.5) for i, cid in enumerate(ids)}
        return _synthetic_space(name, entries, {"id": ids})
    if name == "demo96":
        base = build_dgemm_space("reduced")
        keys = [v for v, _ in base.points()]
        rng = np.random.default_rng(seed)
        means = rng.uniform(60.0, 99.0, size=len(keys))
        top, second = rng.choice(len(keys), size=2, replace=False)
        means[second] = 100.0
        means[top] = 105.0
        entries = {k: ("n{}m{}k{}".format(*k), float(mu), float(mu) * 0.01) for k, mu in zip(keys, means)}
        return _synthetic_space(name, entries, dict(base.axes))
    raise ValueError(f"unknown synthetic space {name!r}")


def build_space(kernel: str, space: str, seed: int = 0) -> SearchSpace:
    if kernel == "dgemm":
        return build_dgemm_space(space)
    if kernel == "triad":
        if space not in ("triad", "default"):
            raise ValueError(f"unknown TRIAD space {space!r}")
        return build_triad_space()
    if kernel == "synthetic":
        return build_synthetic_space(space, seed)
    raise ValueError(f"unknown kernel {kernel!r}")


@dataclass(frozen=True)
class OptimizationMode:
    confidence: bool = False
    inner_prune: bool = False
    outer_prune: bool = False
    reverse: bool = False
    single: bool = False
    fixed_iterations: Optional[int] = None
    fixed_invocations: Optional[int] = None
    name: str = ""

    def __post_init__(self):
        fixed = self.single or self.fixed_iterations is not None or self.fixed_invocations is not None
        if fixed and (self.confidence or self.inner_prune or self.outer_prune):
            raise ValueError("fixed-sample modes cannot enable confidence or pruning stops")

    @classmethod
    def from_label(cls, label: str, reverse: bool = False, iterations: Optional[int] = None):
        label = label.lower()
        if label == "default":
            return cls(reverse=reverse, name="default")
        if label == "single":
            return cls(reverse=reverse, single=True, fixed_iterations=1, fixed_invocations=1, name="single")
        if label in ("hand-time", "hand-acc"):
            if iterations is None:
                raise ValueError(f"mode {label} needs an explicit iteration count")
            return cls(reverse=reverse, fixed_iterations=int(iterations), fixed_invocations=1, name=label)
        letters = {"c": "confidence", "i": "inner_prune", "o": "outer_prune", "r": "reverse"}
        if not label or label[0] != "c" or any(ch not in letters for ch in label) or len(set(label)) != len(label):
            raise ValueError(f"unknown mode {label!r}")
        flags = {letters[ch]: True for ch in label}
        if reverse:
            flags["reverse"] = True
        return cls(**flags)

    @property
    def label(self):
        names = {"single": "Single", "hand-time": "Hand-tuned Time", "hand-acc": "Hand-tuned Accuracy"}
        parts = [tag for tag, on in (("C", self.confidence), ("I", self.inner_prune), ("O", self.outer_prune)) if on]
        base = "+".join(parts) if parts else names.get(self.name, "Default")
        return base + ("+R" if self.reverse else "")

    @property
    def fixed(self):
        return self.single or self.fixed_iterations is not None or self.fixed_invocations is not None

    def effective_budget(self, budget: Budget) -> Budget:
        return replace(
            budget,
            max_count=self.fixed_iterations if self.fixed_iterations is not None else budget.max_count,
            enable_ci_stop=self.confidence,
            enable_prune_stop=self.inner_prune,
        )

    def effective_invocations(self, invocations: int) -> int:
        return self.fixed_invocations if self.fixed_invocations is not None else invocations


@dataclass
class ConfigResult:
    config: KernelConfig
    per_invocation: list = field(default_factory=list)
    aggregate: OnlineStats = field(default_factory=OnlineStats)
    best_invocation_mean: float = -math.inf
    score: float = -math.inf
    total_elapsed: float = 0.0
    failed: bool = False
    error: Optional[str] = None
    outer_pruned: bool = False

    @property
    def observations(self):
        return sum(o.stats.count for o in self.per_invocation)


@dataclass
class TuningResult:
    best_config: Optional[KernelConfig]
    best_value: float
    results: list
    total_wall_time: float
    total_observations: int
    mode: str
    total_observation_time: float = 0.0


# -- kernel runners ---------------------------------------------------------

class SyntheticRunner:
    """Runs synthetic configs; ``compiled`` selects the fused kernel over the generic loop."""

    kernel = "synthetic"

    def __init__(self, seed: int = 0, compiled: bool = True):
        self.seed = seed
        self.compiled = compiled

    def run(self, config: KernelConfig, budget: Budget, best, invocation: int) -> EvalOutcome:
        cfg = config.synthetic()
        if self.compiled:
            return evaluate_synthetic(cfg, self.seed, invocation, budget, best)
        return evaluate(SyntheticSource(cfg, self.seed, invocation), budget, best)


class DgemmRunner:
    kernel = "dgemm"

    def __init__(self, backend: str = "blas", seed: int = 0):
        self.backend = backend
        self.seed = seed

    def run(self, config, budget, best, invocation):
        prepared = prepare_dgemm(config.dgemm(), self.seed, self.backend)
        return evaluate(prepared.observations(), budget, best)


class TriadRunner:
    kernel = "triad"

    def __init__(self, affinity: AffinityPolicy = AffinityPolicy(), seed: int = 0):
        self.affinity = affinity
        self.seed = seed

    def run(self, config, budget, best, invocation):
        prepared = prepare_triad(config.triad(), self.affinity, self.seed)
        outcome = evaluate(prepared.observations(), budget, best)
        for w in prepared.warnings:
            if w not in outcome.warnings:
                outcome.warnings.append(w)
        return outcome


class SubprocessRunner:
    """Runs each invocation in a fresh ``worker`` process, one at a time."""

    def __init__(self, kernel: str, extra_args: Sequence[str] = (), seed: int = 0,
                 grace: float = 60.0, command: Optional[Sequence[str]] = None):
        self.kernel = kernel
        self.extra_args = list(extra_args)
        self.seed = seed
        self.grace = grace
        self.command = list(command) if command else [sys.executable, "-m", "rooftune"]

    def argv(self, config: KernelConfig, budget: Budget, best, invocation: int):
        from rooftune.wire import worker_argv

        return self.command + worker_argv(config, budget, best, invocation, self.seed) + self.extra_args

    def run(self, config, budget, best, invocation):
        from rooftune.wire import decode_outcome

        argv = self.argv(config, budget, best, invocation)
        try:
            proc = subprocess.run(argv, capture_output=True, text=True, timeout=budget.max_time + self.grace)
        except subprocess.TimeoutExpired:
            return EvalOutcome(OnlineStats(), StopReason.EXTERNALLY_ABORTED, 0.0,
                               error=f"worker timed out after {budget.max_time + self.grace:g}s")
        lines = [ln for ln in proc.stdout.splitlines() if ln.strip()]
        if proc.returncode != 0 or not lines:
            msg = (lines[-1] if lines else proc.stderr.strip()[-500:]) or f"exit code {proc.returncode}"
            return EvalOutcome(OnlineStats(), StopReason.EXTERNALLY_ABORTED, 0.0,
                               error=f"worker failed (exit {proc.returncode}): {msg}")
        try:
            _, outcome = decode_outcome(lines[-1])
        except ValueError as exc:
            return EvalOutcome(OnlineStats(), StopReason.EXTERNALLY_ABORTED, 0.0,
                               error=f"unparseable worker output: {exc}")
        return outcome


def make_runner(kernel: str, seed: int = 0, backend: str = "blas", affinity: AffinityPolicy = AffinityPolicy()):
    if kernel == "synthetic":
        return SyntheticRunner(seed)
    if kernel == "dgemm":
        return DgemmRunner(backend, seed)
    if kernel == "triad":
        return TriadRunner(affinity, seed)
    raise ValueError(f"unknown kernel {kernel!r}")


def run_invocation(config: KernelConfig, budget: Budget, best: Optional[float] = None,
                   isolation: str = "in_process", runner=None, invocation: int = 0, **runner_kw) -> EvalOutcome:
    """One invocation of ``config``: the inner loop in this process or in a worker subprocess."""
    if isolation == "in_process":
        runner = runner or make_runner(config.kernel, **runner_kw)
    elif isolation == "subprocess":
        if not isinstance(runner, SubprocessRunner):
            runner = SubprocessRunner(config.kernel, **runner_kw)
    else:
        raise ValueError(f"isolation must be 'in_process' or 'subprocess', got {isolation!r}")
    return runner.run(config, budget, best, invocation)


# -- the sweep --------------------------------------------------------------

def exhaustive_search(space: SearchSpace, mode: OptimizationMode, budget: Budget, runner,
                      invocations: int = 10, score: str = "best",
                      progress: Optional[Callable[[ConfigResult], None]] = None) -> TuningResult:
    """Evaluate every configuration of ``space`` and return the best by score.

    ``score`` is ``"best"`` (max invocation mean) or ``"mean"`` (mean of
    invocation means). One incumbent, the best score so far, feeds both the
    inner pruning stop and the outer invocation-level pruning.
    """
    if score not in ("best", "mean"):
        raise ValueError("score must be 'best' or 'mean'")
    configs = (space.reversed() if mode.reverse else space).configs()
    if not configs:
        raise ValueError("search space is empty")
    inner = mode.effective_budget(budget)
    n_inv = mode.effective_invocations(invocations)
    outer_gate = max(2, budget.min_count)
    z = budget.z

    results = []
    incumbent = None
    best_config = None
    total_obs = 0
    obs_time = 0.0
    t_start = time.perf_counter()
    for config in configs:
        cr = ConfigResult(config)
        try:
            for inv in range(n_inv):
                outcome = runner.run(config, inner, incumbent if mode.inner_prune else None, inv)
                cr.per_invocation.append(outcome)
                cr.total_elapsed += outcome.elapsed
                if outcome.stats.count == 0:
                    cr.error = outcome.error
                    continue
                cr.aggregate.update(outcome.stats.mean)
                if outcome.stats.mean > cr.best_invocation_mean:
                    cr.best_invocation_mean = outcome.stats.mean
                agg = cr.aggregate
                if (mode.outer_prune and incumbent is not None and agg.count >= outer_gate
                        and agg.mean + z * math.sqrt(agg.corrected_sum / (agg.count - 1) / agg.count) < incumbent):
                    cr.outer_pruned = True
                    break
        except Exception as exc:  # noqa: BLE001 - a failing configuration must not end the sweep
            logger.warning("configuration %s failed: %s", config.label, exc)
            cr.error = f"{type(exc).__name__}: {exc}"
        if cr.aggregate.count == 0:
            cr.failed = True
            cr.score = -math.inf
        else:
            cr.score = cr.best_invocation_mean if score == "best" else cr.aggregate.mean
        total_obs += cr.observations
        obs_time += cr.total_elapsed
        results.append(cr)
        if not cr.failed and (incumbent is None or cr.score > incumbent):
            incumbent = cr.score
            best_config = config
        if progress is not None:
            progress(cr)
    wall = time.perf_counter() - t_start
    return TuningResult(best_config, incumbent if incumbent is not None else -math.inf, results,
                        wall, total_obs, mode.label, obs_time)
