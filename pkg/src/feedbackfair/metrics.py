"""Snapshot fairness criteria, long-term (trace-level) metrics and utilities."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Iterable, Mapping, Sequence


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class GroupStats:
    """Per-group summary of one step.

    ``size`` and ``mean_feature`` describe the whole population of the group;
    the decision counts describe the step's decision batch.
    """

    size: int
    mean_feature: float
    selected: int
    total: int
    positives: int = 0
    true_positives: int = 0

    def __post_init__(self):
        if min(self.size, self.selected, self.total, self.positives, self.true_positives) < 0:
            raise MetricError("group counts must be non-negative")
        if self.selected > self.total:
            raise MetricError("selected exceeds total")
        if not self.true_positives <= self.positives <= self.total:
            raise MetricError("require true_positives <= positives <= total")


def _two_groups(snapshot) -> tuple[GroupStats, GroupStats]:
    groups = list(snapshot.groups.values())
    if len(groups) != 2:
        raise MetricError(f"criterion needs exactly two groups, got {len(groups)}")
    return groups[0], groups[1]


def demographic_parity(snapshot) -> float:
    a, b = _two_groups(snapshot)
    if a.total == 0 or b.total == 0:
        raise MetricError("empty group")
    return abs(a.selected / a.total - b.selected / b.total)


def equal_opportunity(snapshot) -> float:
    a, b = _two_groups(snapshot)
    if a.positives == 0 or b.positives == 0:
        raise MetricError("no positives in group")
    return abs(a.true_positives / a.positives - b.true_positives / b.positives)


def mean_gap(snapshot) -> float:
    a, b = _two_groups(snapshot)
    if a.size == 0 or b.size == 0:
        raise MetricError("empty group")
    return abs(a.mean_feature - b.mean_feature)


def avg_pairwise_rpd(scores: Sequence[float]) -> float:
    """Mean over district pairs of ``|x - y| / ((x + y) / 2)``; 0/0 pairs count as 0."""
    if len(scores) < 2:
        raise MetricError("need at least two districts")
    if any(s < 0 for s in scores):
        raise MetricError("scores must be non-negative")
    total = 0.0
    pairs = 0
    for x, y in combinations(scores, 2):
        pairs += 1
        if x + y > 0:
            total += abs(x - y) / ((x + y) / 2)
    return total / pairs


def share_scores(groups: Iterable[GroupStats]) -> list[float]:
    """Each group's share of selections divided by its share of the total."""
    groups = list(groups)
    selected = sum(g.selected for g in groups)
    total = sum(g.total for g in groups)
    if selected == 0 or total == 0:
        raise MetricError("no selections to apportion")
    return [(g.selected / selected) / (g.total / total) for g in groups]


def allocation_rpd(snapshot) -> float:
    return avg_pairwise_rpd(share_scores(snapshot.groups.values()))


CRITERIA: dict[str, Callable] = {
    "dp": demographic_parity,
    "eo": equal_opportunity,
    "mean_gap": mean_gap,
    "rpd": allocation_rpd,
}


def _criterion_values(trace, criterion: Callable) -> list[float]:
    values = []
    for s in trace.snapshots:
        try:
            values.append(criterion(s))
        except MetricError as exc:
            raise MetricError(f"step {s.step}: {exc}") from exc
    return values


def avg_inc(trace, criterion: Callable) -> float:
    values = _criterion_values(trace, criterion)
    if not values:
        raise MetricError("empty trace")
    return math.fsum(values) / len(values) - values[0]


def max_inc(trace, criterion: Callable) -> float:
    values = _criterion_values(trace, criterion)
    if not values:
        raise MetricError("empty trace")
    return max(values) - values[0]


MODES: dict[str, Callable] = {"avg_inc": avg_inc, "max_inc": max_inc}


@dataclass(frozen=True)
class LongTermMetric:
    criterion: str
    mode: str

    def __post_init__(self):
        if self.criterion not in CRITERIA:
            raise MetricError(f"unknown criterion {self.criterion!r}")
        if self.mode not in MODES:
            raise MetricError(f"unknown long-term mode {self.mode!r}")

    @property
    def name(self) -> str:
        return f"{self.mode}_{self.criterion}"

    def __call__(self, trace) -> float:
        return MODES[self.mode](trace, CRITERIA[self.criterion])


def sample_stats(values: Sequence[float]) -> tuple[float, float]:
    """Sample mean and standard deviation (divisor m-1, 0 for a single value)."""
    m = len(values)
    if m == 0:
        raise MetricError("no values")
    mean = math.fsum(values) / m
    if m == 1:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (m - 1)
    return mean, math.sqrt(var)


def trace_statistic_over_runs(traces, lf: Callable) -> dict[str, float]:
    mean, std = sample_stats([lf(t) for t in traces])
    return {"mean": mean, "std": std}


# Trace-level utilities.  Case studies declare which ones they support.

def total_utility(trace) -> float:
    return math.fsum(s.utility for s in trace.snapshots)


def mean_utility(trace) -> float:
    return total_utility(trace) / len(trace.snapshots)


def extra_total(key: str) -> Callable:
    def f(trace) -> float:
        return math.fsum(s.extras[key] for s in trace.snapshots)
    f.__name__ = f"total_{key}"
    return f


def extra_mean(key: str) -> Callable:
    def f(trace) -> float:
        return math.fsum(s.extras[key] for s in trace.snapshots) / len(trace.snapshots)
    f.__name__ = f"mean_{key}"
    return f


def resolve_metric(name: str, utilities: Mapping[str, Callable]) -> Callable:
    """Look up ``max_inc_dp``-style long-term names or a utility id."""
    if name in utilities:
        return utilities[name]
    for mode in MODES:
        prefix = mode + "_"
        if name.startswith(prefix):
            return LongTermMetric(name[len(prefix):], mode)
    raise MetricError(f"unknown metric {name!r}")
