"""Synthetic loan-lending environment and threshold agents.

Two groups of applicants hold credit scores on a 10-point grid over
[300, 850].  Each step a batch of applicants is sampled, a threshold agent
approves or rejects them, and scores move: repayers gain, defaulters lose,
and rejected applicants take a small hard-inquiry penalty.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .. import kernels
from ..metrics import GroupStats
from ..simulation import StepSummary
from ..space import ConfigSpace, Configuration, ParameterDef

SCORE_LOW = 300.0
SCORE_HIGH = 850.0
SCORE_STEP = 10.0
SCORES = np.arange(SCORE_LOW, SCORE_HIGH + 1, SCORE_STEP)
NBINS = len(SCORES)
GROUPS = ("a", "b")

GROUP_MEANS = (620.0, 560.0)
GROUP_SD = 60.0
REJECT_DELTA = -5.0
SHIFT_SIGMA = {"expected": 0.0, "normal": 4.0, "aggressive": 8.0}
MAX_UTIL, EQ_OP = "max-util", "eq-op"

# eq-op listed first so that it is the one-hot reference level
LOAN_SPACE = ConfigSpace([
    ParameterDef("agent", "system", [EQ_OP, MAX_UTIL]),
    ParameterDef("bank_utility", "system", [-10, -9, -8, -7, -6, -5, -4, -3]),
    ParameterDef("score_update_repay", "environmental", [8, 12, 16, 20]),
    ParameterDef("score_update_default", "environmental", [-40, -32, -24, -16]),
    ParameterDef("shift_mode", "environmental", ["expected", "normal", "aggressive"]),
])


def repay_probability(score: float) -> float:
    if not SCORE_LOW <= score <= SCORE_HIGH:
        raise ValueError(f"score {score} outside [{SCORE_LOW:g}, {SCORE_HIGH:g}]")
    return 1.0 / (1.0 + math.exp(-(score - 550.0) / 60.0))


REPAY_PROB = np.array([repay_probability(s) for s in SCORES])


@dataclass(frozen=True)
class LoanParams:
    agent: str
    bank_utility: float
    score_update_repay: float
    score_update_default: float
    shift_mode: str

    def __post_init__(self):
        if self.agent not in (MAX_UTIL, EQ_OP):
            raise ValueError(f"unknown agent {self.agent!r}")
        if self.shift_mode not in SHIFT_SIGMA:
            raise ValueError(f"unknown shift mode {self.shift_mode!r}")

    @classmethod
    def from_config(cls, config: Configuration) -> "LoanParams":
        v = config.values
        return cls(v["agent"], float(v["bank_utility"]), float(v["score_update_repay"]),
                   float(v["score_update_default"]), v["shift_mode"])

    @property
    def sigma(self) -> float:
        return SHIFT_SIGMA[self.shift_mode]


@dataclass(frozen=True)
class LoanEnvState:
    hist: np.ndarray      # (2, NBINS) counts per group and score bin
    step: int = 0

    @property
    def population(self) -> np.ndarray:
        return self.hist.sum(axis=1)

    def mean_scores(self) -> np.ndarray:
        return (self.hist @ SCORES) / self.population


@dataclass(frozen=True)
class LoanBatch:
    cells: np.ndarray     # group * NBINS + bin, one per applicant
    repaid: np.ndarray    # ground-truth repayment of each applicant

    def __len__(self) -> int:
        return len(self.cells)

    @property
    def groups(self) -> np.ndarray:
        return self.cells // NBINS

    @property
    def bins(self) -> np.ndarray:
        return self.cells % NBINS


@dataclass(frozen=True)
class LoanDecisions:
    batch: LoanBatch
    approved_cell: np.ndarray   # (2 * NBINS,) approval flag per group/bin
    thresholds: tuple           # lowest approved bin per group (NBINS = nobody)
    bank_utility: float

    @property
    def approved(self) -> np.ndarray:
        return self.approved_cell[self.batch.cells]


def histogram_from_scores(scores: np.ndarray) -> np.ndarray:
    idx = np.rint((np.clip(scores, SCORE_LOW, SCORE_HIGH) - SCORE_LOW) / SCORE_STEP)
    return np.bincount(idx.astype(np.int64), minlength=NBINS)


def loan_init(params: LoanParams | None, rng, population: int = 10_000,
              means: Sequence[float] = GROUP_MEANS, sd: float = GROUP_SD) -> LoanEnvState:
    gen = rng.generator
    hist = np.stack([histogram_from_scores(gen.normal(mu, sd, population)) for mu in means])
    return LoanEnvState(hist.astype(np.int64), 0)


def projection_cumulative(hist: np.ndarray) -> np.ndarray:
    """Cumulative sampling weights over (group, bin) cells.

    Group shares follow population sizes.  Within a group, a bin's weight is
    its count times a normal density centred on the group mean (spread: the
    group's own score standard deviation, at least one bin width).
    """
    pop = hist.sum(axis=1)
    if (pop <= 0).any():
        raise ValueError("degenerate population")
    share = pop / pop.sum()
    weights = []
    for g in range(hist.shape[0]):
        mu = hist[g] @ SCORES / pop[g]
        sd = max(math.sqrt(hist[g] @ (SCORES - mu) ** 2 / pop[g]), SCORE_STEP)
        w = hist[g] * np.exp(-0.5 * ((SCORES - mu) / sd) ** 2)
        weights.append(w / w.sum() * share[g])
    return np.cumsum(np.concatenate(weights))


def loan_project(state: LoanEnvState, rng, batch_size: int = 1000) -> LoanBatch:
    gen = rng.generator
    if state.hist.sum() == 0:
        raise ValueError("degenerate population")
    cum = projection_cumulative(state.hist)
    u_pick = gen.random(batch_size)
    u_repay = gen.random(batch_size)
    cells = kernels.assign_cells(cum, state.hist.reshape(-1), u_pick, NBINS)
    repaid = u_repay < REPAY_PROB[cells % NBINS]
    return LoanBatch(cells, repaid)


def max_util_threshold(bank_utility: float) -> float:
    """Break-even repayment probability of ``p * 1 + (1 - p) * u >= 0``."""
    loss = abs(bank_utility)
    return loss / (1.0 + loss)


def loan_decide(batch: LoanBatch, params: LoanParams, state: LoanEnvState | None = None,
                tpr_tol: float = 0.01) -> LoanDecisions:
    u = params.bank_utility
    if params.agent == MAX_UTIL:
        ok = REPAY_PROB >= max_util_threshold(u)
        j = int(np.argmax(ok)) if ok.any() else NBINS
        thresholds = (j, j)
    else:
        ncell = 2 * NBINS
        n_cell = np.bincount(batch.cells, minlength=ncell).reshape(2, NBINS)
        pos_cell = np.bincount(batch.cells[batch.repaid], minlength=ncell).reshape(2, NBINS)
        value = REPAY_PROB + (1.0 - REPAY_PROB) * u
        thresholds = tuple(int(t) for t in kernels.eqop_thresholds(n_cell, pos_cell, value, tpr_tol))
    approved = np.arange(NBINS)[None, :] >= np.array(thresholds)[:, None]
    return LoanDecisions(batch, approved.reshape(-1), thresholds, u)


def loan_shift(state: LoanEnvState, decisions: LoanDecisions, rng,
               params: LoanParams) -> LoanEnvState:
    gen = rng.generator
    batch = decisions.batch
    n = len(batch)
    z = gen.standard_normal(n)
    u_round = gen.random(n)
    hist = kernels.shift_population(
        state.hist, batch.cells, decisions.approved_cell.astype(np.uint8),
        batch.repaid.astype(np.uint8), z, u_round,
        params.score_update_repay, params.score_update_default, REJECT_DELTA,
        params.sigma, SCORE_LOW, SCORE_STEP,
    )
    return LoanEnvState(hist, state.step + 1)


def step_profit(decisions: LoanDecisions) -> float:
    approved = decisions.approved
    repaid = decisions.batch.repaid
    n_repay = int(np.count_nonzero(approved & repaid))
    n_default = int(np.count_nonzero(approved & ~repaid))
    return float(n_repay) + n_default * decisions.bank_utility


def bank_profit(snapshots) -> dict[str, float]:
    """Cumulative bank profit over a snapshot stream, plus the per-step mean."""
    snapshots = list(snapshots)
    total = math.fsum(s.utility for s in snapshots)
    return {"total": total, "per_step": total / len(snapshots) if snapshots else 0.0}


def loan_summarize(state: LoanEnvState, decisions: LoanDecisions) -> StepSummary:
    batch = decisions.batch
    groups = batch.groups
    approved = decisions.approved
    repaid = batch.repaid
    total = np.bincount(groups, minlength=2)
    selected = np.bincount(groups[approved], minlength=2)
    positives = np.bincount(groups[repaid], minlength=2)
    tp = np.bincount(groups[approved & repaid], minlength=2)
    pop = state.population
    means = state.mean_scores()
    stats = {
        name: GroupStats(int(pop[g]), float(means[g]), int(selected[g]), int(total[g]),
                         int(positives[g]), int(tp[g]))
        for g, name in enumerate(GROUPS)
    }
    return StepSummary(stats, step_profit(decisions))


class LoanEnvironment:
    def __init__(self, params: LoanParams, population: int = 10_000, batch_size: int = 1000):
        self.params = params
        self.population = population
        self.batch_size = batch_size

    def init(self, config, rng) -> LoanEnvState:
        return loan_init(self.params, rng, self.population)

    def project(self, state, rng) -> LoanBatch:
        return loan_project(state, rng, self.batch_size)

    def shift(self, state, decisions, rng) -> LoanEnvState:
        return loan_shift(state, decisions, rng, self.params)

    def summarize(self, state, decisions) -> StepSummary:
        return loan_summarize(state, decisions)


class ThresholdAgent:
    """Repayment-probability model plus max-util or eq-op threshold policy.

    Thresholds are recomputed from each batch, so no refitting is needed.
    """

    def __init__(self, params: LoanParams, tpr_tol: float = 0.01):
        self.params = params
        self.tpr_tol = tpr_tol

    def predict(self, batch: LoanBatch) -> LoanBatch:
        return batch

    def decide(self, outputs: LoanBatch, config) -> LoanDecisions:
        return loan_decide(outputs, self.params, tpr_tol=self.tpr_tol)
