"""Campaign orchestration: select configurations, simulate, analyze, extract trade-offs."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Callable

from . import __version__
from .experiment import ExperimentConfig, config_hash
from .report import (
    read_csv, write_campaign, write_configs, write_failures, write_manifest, write_pareto,
    write_report, write_runs, write_traces,
)
from .sensitivity import SensitivityError, analyze_configs
from .simulation import CampaignResult, run_campaign
from .space import enumerate_configs, sample_covering_array
from .tradeoff import TradeoffError, pareto_front

log = logging.getLogger(__name__)

CONFIGS_CSV = "configs.csv"
CAMPAIGN_CSV = "campaign.csv"


def _ok(**detail) -> dict:
    return {"status": "ok", **detail}


def select_configs(cfg: ExperimentConfig, mode: str | None = None) -> list:
    mode = mode or cfg.sampling.mode
    space = cfg.space
    if mode == "full":
        return enumerate_configs(space)
    return sample_covering_array(space, cfg.sampling.strength, cfg.seed)


def simulate(cfg: ExperimentConfig, configs: list, jobs: int = 1,
             progress: Callable[[int, int], None] | None = None) -> CampaignResult:
    return run_campaign(configs, cfg.case(), cfg.horizon, cfg.metric_names, cfg.seed,
                        cfg.monte_carlo, jobs, cfg.traces, progress)


def analyze_responses(configs: list, responses: dict) -> dict:
    """Sensitivity report (or error text) per metric."""
    out = {}
    for metric, ys in responses.items():
        try:
            out[metric] = analyze_configs(configs, ys)
        except SensitivityError as exc:
            out[metric] = str(exc)
    return out


def pareto_of(cfg: ExperimentConfig, configs: list, responses: dict):
    points = [(c.id, [responses[o.metric][i] for o in cfg.objectives]) for i, c in enumerate(configs)]
    return pareto_front(points, cfg.objectives)


def load_campaign(cfg: ExperimentConfig, out: Path) -> tuple[list, dict]:
    """Configurations and per-metric means from a written campaign table."""
    path = out / CAMPAIGN_CSV
    try:
        rows = read_csv(path)
    except OSError as exc:
        raise FileNotFoundError(f"no campaign table at {path}; run 'simulate' first") from exc
    space = cfg.space
    configs = [space.config_by_id(int(r["config_id"])) for r in rows]
    responses = {m: [float(r[f"{m}_mean"]) for r in rows] for m in cfg.metric_names}
    return configs, responses


def campaign_responses(campaign: CampaignResult) -> tuple[list, dict]:
    configs = [r.config for r in campaign.results]
    return configs, {m: campaign.column(m) for m in campaign.metrics}


class Pipeline:
    """Writes each stage's files into ``out`` and records stage status in the manifest."""

    def __init__(self, cfg: ExperimentConfig, out: Path | None = None, jobs: int = 1,
                 progress: Callable[[int, int], None] | None = None):
        self.cfg = cfg
        self.out = Path(out if out is not None else cfg.output_dir)
        self.jobs = jobs
        self.progress = progress
        self.stages: dict = {}

    def finish(self) -> int:
        write_manifest(self.out, __version__, config_hash(self.cfg), self.stages,
                       {"case_study": self.cfg.case_study, "seed": self.cfg.seed})
        bad = [k for k, v in self.stages.items() if v["status"] in ("failed", "partial")]
        for k in bad:
            log.error("stage %s: %s", k, self.stages[k].get("detail", self.stages[k]["status"]))
        return 1 if bad else 0

    def select(self, mode: str | None = None) -> list:
        configs = select_configs(self.cfg, mode)
        write_configs(self.out / CONFIGS_CSV, configs)
        mode = mode or self.cfg.sampling.mode
        detail = {"mode": mode, "configs": len(configs), "space_size": self.cfg.space.size}
        if mode == "covering":
            detail["strength"] = self.cfg.sampling.strength
        self.stages["select"] = _ok(**detail)
        return configs

    def simulate(self, configs: list) -> CampaignResult:
        campaign = simulate(self.cfg, configs, self.jobs, self.progress)
        write_campaign(self.out / CAMPAIGN_CSV, campaign)
        write_runs(self.out / "runs.csv", campaign)
        if self.cfg.traces != "none":
            write_traces(self.out / "traces.csv", campaign)
        status = "ok"
        if campaign.failures:
            write_failures(self.out / "failures.csv", campaign.failures)
            status = "partial" if campaign.results else "failed"
        self.stages["simulate"] = {"status": status, "configs": len(campaign.results),
                                   "failed_configs": sorted(campaign.failures)}
        return campaign

    def analyze(self, configs: list, responses: dict) -> dict:
        reports = analyze_responses(configs, responses)
        errors = {}
        for metric, rep in reports.items():
            if isinstance(rep, str):
                errors[metric] = rep
            else:
                write_report(self.out, metric, rep)
        if errors and len(errors) == len(reports):
            self.stages["analyze"] = {"status": "failed", "detail": errors}
        elif errors:
            self.stages["analyze"] = {"status": "partial", "detail": errors}
        else:
            self.stages["analyze"] = _ok(metrics=sorted(reports))
        return reports

    def pareto(self, configs: list, responses: dict):
        if not self.cfg.objectives:
            self.stages["pareto"] = {"status": "skipped", "detail": "no objectives configured"}
            return None
        try:
            front = pareto_of(self.cfg, configs, responses)
        except TradeoffError as exc:
            self.stages["pareto"] = {"status": "failed", "detail": str(exc)}
            return None
        write_pareto(self.out, front, {c.id: c for c in configs})
        self.stages["pareto"] = _ok(members=len(front), excluded=list(front.excluded))
        return front


def run_pipeline(cfg: ExperimentConfig, out: Path | None = None, jobs: int = 1,
                 progress: Callable[[int, int], None] | None = None) -> int:
    pipe = Pipeline(cfg, out, jobs, progress)
    try:
        configs = pipe.select()
        campaign = pipe.simulate(configs)
        if campaign.results:
            done, responses = campaign_responses(campaign)
            pipe.analyze(done, responses)
            pipe.pareto(done, responses)
    except Exception as exc:  # noqa: BLE001 - any stage failure ends the run with a diagnostic
        stage = next((s for s in ("select", "simulate", "analyze", "pareto") if s not in pipe.stages),
                     "run")
        pipe.stages[stage] = {"status": "failed", "detail": f"{type(exc).__name__}: {exc}"}
    return pipe.finish()
