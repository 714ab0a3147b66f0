"""Feedback-loop simulation: traces, Monte-Carlo repetition and campaigns."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Protocol, Sequence

from .metrics import GroupStats, sample_stats
from .rng import RngStream, derive_stream
from .space import Configuration

log = logging.getLogger(__name__)


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class StepSummary:
    groups: Mapping[str, GroupStats]
    utility: float = 0.0
    extras: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class Snapshot:
    step: int
    groups: Mapping[str, GroupStats]
    utility: float = 0.0
    extras: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class Trace:
    config_id: int
    run: int
    snapshots: tuple

    def __post_init__(self):
        if not self.snapshots:
            raise SimulationError("trace must hold at least one snapshot")
        for i, s in enumerate(self.snapshots, start=1):
            if s.step != i:
                raise SimulationError("snapshot steps must be 1..k")

    def __len__(self) -> int:
        return len(self.snapshots)


class EnvironmentModel(Protocol):
    """Environment side of the loop: state, projection and shift.

    ``project`` and ``shift`` may draw randomness only from the stream they
    are handed.
    """

    def init(self, config: Configuration, rng: RngStream) -> Any: ...

    def project(self, state: Any, rng: RngStream) -> Any: ...

    def shift(self, state: Any, decisions: Any, rng: RngStream) -> Any: ...

    def summarize(self, state: Any, decisions: Any) -> StepSummary: ...


class SystemAgent(Protocol):
    def predict(self, inputs: Any) -> Any: ...

    def decide(self, outputs: Any, config: Configuration) -> Any: ...


def simulate_trace(
    env: EnvironmentModel,
    agent: SystemAgent,
    config: Configuration,
    k: int,
    rng: RngStream,
) -> Trace:
    if k < 1:
        raise SimulationError("horizon k must be >= 1")
    state = env.init(config, rng)
    refit = getattr(agent, "refit", None)
    snapshots = []
    for t in range(1, k + 1):
        batch = env.project(state, rng)
        if len(batch) == 0:
            raise SimulationError("degenerate population")
        decisions = agent.decide(agent.predict(batch), config)
        summary = env.summarize(state, decisions)
        snapshots.append(Snapshot(t, summary.groups, summary.utility, summary.extras))
        if t < k:
            state = env.shift(state, decisions, rng)
            if refit is not None:
                refit(state, batch, decisions)
    return Trace(config.id, rng.derivation[2], tuple(snapshots))


@dataclass(frozen=True)
class MonteCarloLimits:
    min_runs: int = 5
    max_runs: int = 50
    z: float = 1.96
    rel_tol: float = 0.05
    abs_floor: float = 0.005

    def __post_init__(self):
        if self.min_runs < 2:
            raise ValueError("min_runs must be >= 2")
        if self.max_runs < self.min_runs:
            raise ValueError("max_runs must be >= min_runs")
        if self.z <= 0 or self.rel_tol <= 0 or self.abs_floor < 0:
            raise ValueError("z and rel_tol must be positive, abs_floor non-negative")


def stopping_check(values: Sequence[float], limits: MonteCarloLimits) -> str | None:
    """Return the reason to stop after ``len(values)`` runs, or None."""
    m = len(values)
    if m < limits.min_runs:
        return None
    mean, std = sample_stats(values)
    half_width = limits.z * std / math.sqrt(m)
    if mean != 0 and half_width / abs(mean) < limits.rel_tol:
        return "relative"
    if half_width < limits.abs_floor:
        return "absolute"
    if m >= limits.max_runs:
        return "cap"
    return None


@dataclass
class MonteCarloResult:
    config_id: int
    traces: list
    lf_values: list
    stop_reason: str
    mean: float
    std: float

    @property
    def m(self) -> int:
        return len(self.lf_values)

    @property
    def capped(self) -> bool:
        return self.stop_reason == "cap"


def run_monte_carlo(
    env: EnvironmentModel,
    agent: SystemAgent,
    config: Configuration,
    k: int,
    lf: Callable,
    global_seed: int,
    limits: MonteCarloLimits = MonteCarloLimits(),
) -> MonteCarloResult:
    traces, values = [], []
    reason = None
    run = 0
    while reason is None:
        trace = simulate_trace(env, agent, config, k, derive_stream(global_seed, config.id, run))
        traces.append(trace)
        values.append(lf(trace))
        reason = stopping_check(values, limits)
        run += 1
    mean, std = sample_stats(values)
    return MonteCarloResult(config.id, traces, values, reason, mean, std)


@dataclass
class ConfigResult:
    config: Configuration
    m: int
    stop_reason: str
    stats: dict            # metric name -> (mean, std)
    lf_values: list
    traces: list = field(default_factory=list)

    @property
    def config_id(self) -> int:
        return self.config.id


@dataclass
class CampaignResult:
    metrics: list
    results: list          # ConfigResult, ordered by config id
    failures: dict         # config id -> error message

    def column(self, metric: str) -> list[float]:
        return [r.stats[metric][0] for r in self.results]


def _run_one(case, config: Configuration, k: int, metric_names: Sequence[str],
             global_seed: int, limits: MonteCarloLimits, keep: str) -> ConfigResult:
    env = case.make_env(config)
    agent = case.make_agent(config)
    fns = [case.metric(name) for name in metric_names]
    mc = run_monte_carlo(env, agent, config, k, fns[0], global_seed, limits)
    stats = {metric_names[0]: (mc.mean, mc.std)}
    for name, fn in zip(metric_names[1:], fns[1:]):
        stats[name] = sample_stats([fn(t) for t in mc.traces])
    kept = {"all": mc.traces, "first": mc.traces[:1], "none": []}[keep]
    return ConfigResult(config, mc.m, mc.stop_reason, stats, mc.lf_values, kept)


def _run_one_safe(args):
    config = args[1]
    try:
        return config.id, _run_one(*args), None
    except Exception as exc:  # noqa: BLE001 - reported per config, campaign goes on
        return config.id, None, f"{type(exc).__name__}: {exc}"


def run_campaign(
    configs: Sequence[Configuration],
    case,
    k: int,
    metrics: Sequence[str],
    global_seed: int,
    limits: MonteCarloLimits = MonteCarloLimits(),
    jobs: int = 1,
    keep_traces: str = "first",
    progress: Callable[[int, int], None] | None = None,
) -> CampaignResult:
    """Monte-Carlo every configuration; the first metric drives stopping.

    Results do not depend on ``jobs``: each run draws from its own stream and
    results are merged by configuration id.
    """
    if not configs:
        raise SimulationError("no configurations to simulate")
    if not metrics:
        raise SimulationError("at least one metric is required")
    if keep_traces not in ("all", "first", "none"):
        raise ValueError("keep_traces must be all, first or none")
    tasks = [(case, c, k, list(metrics), global_seed, limits, keep_traces) for c in configs]
    done: dict[int, ConfigResult] = {}
    failures: dict[int, str] = {}

    def collect(outcome, i):
        cid, res, err = outcome
        if err is None:
            done[cid] = res
        else:
            log.error("config %d failed: %s", cid, err)
            failures[cid] = err
        if progress is not None:
            progress(i + 1, len(tasks))

    if jobs <= 1:
        for i, task in enumerate(tasks):
            collect(_run_one_safe(task), i)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for i, outcome in enumerate(pool.map(_run_one_safe, tasks, chunksize=1)):
                collect(outcome, i)
    results = [done[c] for c in sorted(done)]
    return CampaignResult(list(metrics), results, dict(sorted(failures.items())))
