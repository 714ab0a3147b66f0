"""JSON experiment configuration: parsing, validation and canonical form."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Any

from .cases import CASES, CaseError, make_case
from .metrics import CRITERIA, MODES, LongTermMetric
from .simulation import MonteCarloLimits
from .space import ConfigSpace, ParameterDef
from .tradeoff import Direction, ObjectiveSpec

U64 = (1 << 64) - 1
TRACE_MODES = ("first", "all", "none")
SAMPLING_MODES = ("full", "covering")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Sampling:
    mode: str = "full"
    strength: int = 2


@dataclass(frozen=True)
class ExperimentConfig:
    case_study: str
    parameters: tuple           # ParameterDef, in declaration order
    horizon: int
    monte_carlo: MonteCarloLimits = MonteCarloLimits()
    sampling: Sampling = Sampling()
    metrics: tuple = ()         # LongTermMetric
    utilities: tuple = ()
    objectives: tuple = ()      # ObjectiveSpec
    seed: int = 0
    output_dir: str = "out"
    case_options: dict = field(default_factory=dict, hash=False)
    traces: str = "first"

    @property
    def space(self) -> ConfigSpace:
        return ConfigSpace(list(self.parameters))

    @property
    def metric_names(self) -> list[str]:
        return [m.name for m in self.metrics] + list(self.utilities)

    def case(self):
        return make_case(self.case_study, self.space, **self.case_options)

    def with_overrides(self, seed: int | None = None, output_dir: str | None = None,
                       strength: int | None = None) -> "ExperimentConfig":
        cfg = self
        if strength is not None:
            if not 2 <= _int(strength, "sampling.strength") <= len(self.parameters):
                _fail("sampling.strength", "strength out of range")
            cfg = replace(cfg, sampling=Sampling(cfg.sampling.mode, strength))
        if seed is not None:
            cfg = replace(cfg, seed=_check_seed(seed, "seed"))
        if output_dir is not None:
            cfg = replace(cfg, output_dir=output_dir)
        return cfg


def _fail(path: str, msg: str):
    raise ConfigError(f"{path}: {msg}")


def _obj(value, path: str, allowed: set, required: set = frozenset()) -> dict:
    if not isinstance(value, dict):
        _fail(path, "expected an object")
    for key in value:
        if key not in allowed:
            _fail(f"{path}.{key}" if path else key, "unknown key")
    for key in sorted(required):
        if key not in value:
            _fail(f"{path}.{key}" if path else key, "missing required field")
    return value


def _int(value, path: str, lo: int | None = None, hi: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        _fail(path, "expected an integer")
    if (lo is not None and value < lo) or (hi is not None and value > hi):
        _fail(path, "out of range")
    return value


def _real(value, path: str, lo: float | None = None, positive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        _fail(path, "expected a finite number")
    if positive and value <= 0:
        _fail(path, "out of range")
    if lo is not None and value < lo:
        _fail(path, "out of range")
    return float(value)


def _str(value, path: str, choices=None) -> str:
    if not isinstance(value, str):
        _fail(path, "expected a string")
    if choices is not None and value not in choices:
        _fail(path, f"must be one of {', '.join(choices)}")
    return value


def _check_seed(value, path: str) -> int:
    return _int(value, path, 0, U64)


def _parameters(value, path: str, case_space: ConfigSpace) -> tuple:
    if not isinstance(value, list) or not value:
        _fail(path, "expected a non-empty list")
    out = []
    for i, item in enumerate(value):
        p = f"{path}[{i}]"
        _obj(item, p, {"name", "kind", "values"}, {"name", "kind", "values"})
        if not isinstance(item["values"], list):
            _fail(f"{p}.values", "expected a list")
        try:
            out.append(ParameterDef(_str(item["name"], f"{p}.name"), _str(item["kind"], f"{p}.kind"),
                                    list(item["values"])))
        except ValueError as exc:
            _fail(p, str(exc))
    names = [d.name for d in out]
    if names != case_space.names:
        _fail(path, f"parameter names must be exactly {case_space.names} in that order")
    return tuple(out)


def _parse_dict(data: Any) -> ExperimentConfig:
    top = {"case_study", "parameters", "horizon", "monte_carlo", "sampling", "metrics",
           "utilities", "objectives", "seed", "output_dir", "case_options", "traces"}
    _obj(data, "", top, {"case_study", "horizon"})
    case_id = _str(data["case_study"], "case_study")
    if case_id not in CASES:
        _fail("case_study", f"unknown case study {case_id!r}")
    case_cls = CASES[case_id]

    if "parameters" in data:
        params = _parameters(data["parameters"], "parameters", case_cls.default_space)
    else:
        params = tuple(case_cls.default_space.parameters)

    horizon = _int(data["horizon"], "horizon", 1)

    mc = _obj(data.get("monte_carlo", {}), "monte_carlo",
              {"min_runs", "max_runs", "z", "rel_tol", "abs_floor"})
    d = MonteCarloLimits()
    min_runs = _int(mc.get("min_runs", d.min_runs), "monte_carlo.min_runs", 2)
    max_runs = _int(mc.get("max_runs", d.max_runs), "monte_carlo.max_runs", 2)
    if max_runs < min_runs:
        _fail("monte_carlo.max_runs", "out of range (must be >= min_runs)")
    limits = MonteCarloLimits(
        min_runs, max_runs,
        _real(mc.get("z", d.z), "monte_carlo.z", positive=True),
        _real(mc.get("rel_tol", d.rel_tol), "monte_carlo.rel_tol", positive=True),
        _real(mc.get("abs_floor", d.abs_floor), "monte_carlo.abs_floor", lo=0.0),
    )

    sm = _obj(data.get("sampling", {}), "sampling", {"mode", "strength"})
    mode = _str(sm.get("mode", "full"), "sampling.mode", SAMPLING_MODES)
    strength = _int(sm.get("strength", 2), "sampling.strength")
    if mode == "covering" and not 2 <= strength <= len(params):
        _fail("sampling.strength", "strength out of range")
    sampling = Sampling(mode, strength)

    raw_metrics = data.get("metrics", [])
    if not isinstance(raw_metrics, list):
        _fail("metrics", "expected a list")
    metrics = []
    for i, m in enumerate(raw_metrics):
        p = f"metrics[{i}]"
        _obj(m, p, {"criterion", "mode"}, {"criterion", "mode"})
        crit = _str(m["criterion"], f"{p}.criterion", tuple(CRITERIA))
        if crit not in case_cls.criteria:
            _fail(f"{p}.criterion", f"{crit!r} not available for case {case_id}")
        metrics.append(LongTermMetric(crit, _str(m["mode"], f"{p}.mode", tuple(MODES))))

    raw_utils = data.get("utilities", [])
    if not isinstance(raw_utils, list):
        _fail("utilities", "expected a list")
    utilities = tuple(_str(u, f"utilities[{i}]", tuple(case_cls.utilities))
                      for i, u in enumerate(raw_utils))
    if "metrics" not in data and not utilities:
        metrics = [LongTermMetric(case_cls.criteria[0], "max_inc")]
    if not metrics and not utilities:
        _fail("metrics", "at least one metric or utility is required")
    names = [m.name for m in metrics] + list(utilities)
    if len(set(names)) != len(names):
        _fail("metrics", "duplicate metric")

    raw_obj = data.get("objectives", [])
    if not isinstance(raw_obj, list):
        _fail("objectives", "expected a list")
    objectives = []
    for i, o in enumerate(raw_obj):
        p = f"objectives[{i}]"
        _obj(o, p, {"metric", "direction"}, {"metric", "direction"})
        objectives.append(ObjectiveSpec(_str(o["metric"], f"{p}.metric", names),
                                        _str(o["direction"], f"{p}.direction",
                                             tuple(x.value for x in Direction))))

    seed = _check_seed(data.get("seed", 0), "seed")
    output_dir = _str(data.get("output_dir", "out"), "output_dir")
    options = _obj(data.get("case_options", {}), "case_options", set(case_cls.options))
    traces = _str(data.get("traces", "first"), "traces", TRACE_MODES)

    cfg = ExperimentConfig(case_id, params, horizon, limits, sampling, tuple(metrics), utilities,
                           tuple(objectives), seed, output_dir, dict(options), traces)
    try:
        case = cfg.case()
    except (CaseError, TypeError) as exc:
        _fail("case_options", str(exc))
    _check_values(case, cfg.space)
    return cfg


def _check_values(case, space: ConfigSpace) -> None:
    """Build the environment and agent once for every declared value."""
    for i, p in enumerate(space.parameters):
        for a in range(len(p)):
            assign = [0] * len(space.parameters)
            assign[i] = a
            try:
                config = space.config(assign)
                case.make_env(config)
                case.make_agent(config)
            except (ValueError, TypeError, KeyError) as exc:
                _fail(f"parameters[{i}].values[{a}]", str(exc))


def parse_experiment_config(text: str) -> ExperimentConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    return _parse_dict(data)


def load_experiment_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_experiment_config(fh.read())


def config_to_dict(cfg: ExperimentConfig) -> dict:
    mc = cfg.monte_carlo
    return {
        "case_study": cfg.case_study,
        "parameters": [{"name": p.name, "kind": p.kind.value, "values": list(p.values)}
                       for p in cfg.parameters],
        "horizon": cfg.horizon,
        "monte_carlo": {"min_runs": mc.min_runs, "max_runs": mc.max_runs, "z": mc.z,
                        "rel_tol": mc.rel_tol, "abs_floor": mc.abs_floor},
        "sampling": {"mode": cfg.sampling.mode, "strength": cfg.sampling.strength},
        "metrics": [{"criterion": m.criterion, "mode": m.mode} for m in cfg.metrics],
        "utilities": list(cfg.utilities),
        "objectives": [{"metric": o.metric, "direction": o.direction.value} for o in cfg.objectives],
        "seed": cfg.seed,
        "output_dir": cfg.output_dir,
        "case_options": dict(cfg.case_options),
        "traces": cfg.traces,
    }


def serialize_experiment_config(cfg: ExperimentConfig) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n"


def config_hash(cfg: ExperimentConfig) -> str:
    """SHA-256 of the canonical (sorted-key, compact) JSON form."""
    canon = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()
