"""Registered case studies: parameter space, environment, agent and metric ids."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, ClassVar, Mapping

from ..metrics import MetricError, extra_mean, extra_total, mean_utility, resolve_metric, total_utility
from ..space import ConfigSpace, Configuration
from .loan import LOAN_SPACE, LoanEnvironment, LoanParams, ThresholdAgent
from .policing import DECAY, GRID, HOTSPOTS, POLICING_SPACE, HotspotAgent, PolicingEnvironment, PolicingParams


class CaseError(ValueError):
    pass


def _check_metric(name: str, criteria: tuple, utilities: Mapping[str, Callable]) -> Callable:
    fn = resolve_metric(name, utilities)
    criterion = getattr(fn, "criterion", None)
    if criterion is not None and criterion not in criteria:
        raise MetricError(f"criterion {criterion!r} not available for this case")
    return fn


@dataclass(frozen=True)
class LoanCase:
    population: int = 10_000
    batch_size: int = 1000
    tpr_tol: float = 0.01
    space: ConfigSpace = field(default=LOAN_SPACE, compare=False)

    name: ClassVar[str] = "loan"
    default_space: ClassVar[ConfigSpace] = LOAN_SPACE
    criteria: ClassVar[tuple] = ("dp", "eo", "mean_gap")
    utilities: ClassVar[dict] = {"profit": total_utility, "profit_per_step": mean_utility}
    options: ClassVar[tuple] = ("population", "batch_size", "tpr_tol")

    def __post_init__(self):
        if self.population < 1 or self.batch_size < 1:
            raise CaseError("population and batch_size must be positive")
        if self.batch_size > self.population:
            raise CaseError("batch_size exceeds population")

    def make_env(self, config: Configuration) -> LoanEnvironment:
        return LoanEnvironment(LoanParams.from_config(config), self.population, self.batch_size)

    def make_agent(self, config: Configuration) -> ThresholdAgent:
        return ThresholdAgent(LoanParams.from_config(config), self.tpr_tol)

    def metric(self, name: str) -> Callable:
        return _check_metric(name, self.criteria, self.utilities)


@dataclass(frozen=True)
class PolicingCase:
    grid: int = GRID
    hotspots: int = HOTSPOTS
    decay: float = DECAY
    space: ConfigSpace = field(default=POLICING_SPACE, compare=False)

    name: ClassVar[str] = "policing"
    default_space: ClassVar[ConfigSpace] = POLICING_SPACE
    criteria: ClassVar[tuple] = ("rpd",)
    utilities: ClassVar[dict] = {
        "discovered": total_utility,
        "discovered_per_step": mean_utility,
        "discovery_rate": extra_mean("discovery_rate"),
        "correct_hotspots": extra_mean("correct_hotspots"),
        "incidents": extra_total("incidents"),
    }
    options: ClassVar[tuple] = ("grid", "hotspots", "decay")

    def __post_init__(self):
        if self.hotspots > self.grid * self.grid:
            raise CaseError("more hotspots than cells")
        if not 0.0 <= self.decay <= 1.0:
            raise CaseError("decay must lie in [0, 1]")

    def make_env(self, config: Configuration) -> PolicingEnvironment:
        return PolicingEnvironment(PolicingParams.from_config(config, self.hotspots), self.grid,
                                   self.decay)

    def make_agent(self, config: Configuration) -> HotspotAgent:
        return HotspotAgent(PolicingParams.from_config(config, self.hotspots), self.grid)

    def metric(self, name: str) -> Callable:
        return _check_metric(name, self.criteria, self.utilities)


CASES = {"loan": LoanCase, "policing": PolicingCase}


def make_case(name: str, space: ConfigSpace | None = None, **options):
    try:
        cls = CASES[name]
    except KeyError:
        raise CaseError(f"unknown case study {name!r}") from None
    unknown = set(options) - set(cls.options)
    if unknown:
        raise CaseError(f"unknown option(s) for {name}: {sorted(unknown)}")
    return cls(space=space or cls.default_space, **options)
