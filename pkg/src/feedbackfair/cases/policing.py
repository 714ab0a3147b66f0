"""Synthetic grid-city predictive policing.

Incidents occur on a G x G grid split into four quadrant districts.  The
predictor is an exponentially smoothed count of *discovered* incidents; the
top-N predicted cells become hotspots, and incidents near hotspots are
discovered more often.  The bias in what gets observed feeds back into the
next prediction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..metrics import GroupStats, avg_pairwise_rpd
from ..simulation import StepSummary
from ..space import ConfigSpace, Configuration, ParameterDef

GRID = 20
HOTSPOTS = 50
DECAY = 0.8
GAMMA_SHAPE, GAMMA_SCALE = 2.0, 0.5
HIGH_CRIME_FACTOR = 1.5
HIGH_CRIME_DISTRICT = 0
INIT_NOISE = 0.1

POLICING_SPACE = ConfigSpace([
    ParameterDef("discovery_rate_hot", "environmental", [0.8, 0.85, 0.9, 0.95, 1.0]),
    ParameterDef("discovery_rate_other", "environmental", [0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5]),
    ParameterDef("effect_range", "environmental", [1, 2, 3]),
])


@dataclass(frozen=True)
class PolicingParams:
    discovery_rate_hot: float
    discovery_rate_other: float
    effect_range: int
    hotspot_count: int = HOTSPOTS

    def __post_init__(self):
        for rate in (self.discovery_rate_hot, self.discovery_rate_other):
            if not 0.0 <= rate <= 1.0:
                raise ValueError("discovery rates must lie in [0, 1]")
        if self.effect_range < 1:
            raise ValueError("effect_range must be >= 1")

    @classmethod
    def from_config(cls, config: Configuration, hotspot_count: int = HOTSPOTS) -> "PolicingParams":
        v = config.values
        return cls(float(v["discovery_rate_hot"]), float(v["discovery_rate_other"]),
                   int(v["effect_range"]), hotspot_count)


def district_map(grid: int = GRID) -> np.ndarray:
    """Quadrant district id of every cell (row-major, flattened)."""
    if grid < 2 or grid % 2:
        raise ValueError("grid size must be even and >= 2")
    half = grid // 2
    rows, cols = np.divmod(np.arange(grid * grid), grid)
    return (rows >= half) * 2 + (cols >= half)


@dataclass(frozen=True)
class GridEnvState:
    grid: int
    lam_true: np.ndarray     # (G*G,) true incident rate per cell
    lam_hat: np.ndarray      # (G*G,) predictor estimate
    discovered: np.ndarray   # (G*G,) discoveries in the previous step
    districts: np.ndarray
    step: int = 0


def police_init(params: PolicingParams | None, rng, grid: int = GRID) -> GridEnvState:
    gen = rng.generator
    districts = district_map(grid)
    lam = gen.gamma(GAMMA_SHAPE, GAMMA_SCALE, grid * grid)
    lam = np.where(districts == HIGH_CRIME_DISTRICT, lam * HIGH_CRIME_FACTOR, lam)
    lam_hat = np.maximum(lam + gen.normal(0.0, INIT_NOISE, grid * grid), 0.0)
    zeros = np.zeros(grid * grid, dtype=np.int64)
    return GridEnvState(grid, lam, lam_hat, zeros, districts, 0)


def allocate_hotspots(lam_hat: np.ndarray, n: int) -> np.ndarray:
    """Indices of the ``n`` highest estimates; ties go to the lower cell index."""
    if n > len(lam_hat):
        raise ValueError("more hotspots than cells")
    order = np.argsort(-np.asarray(lam_hat), kind="stable")
    return np.sort(order[:n])


def effect_area(hotspots: np.ndarray, grid: int, effect_range: int) -> np.ndarray:
    """Cells within Chebyshev distance ``effect_range - 1`` of some hotspot."""
    hot = np.zeros((grid, grid), dtype=bool)
    hot.flat[hotspots] = True
    radius = effect_range - 1
    if radius == 0:
        return hot.reshape(-1)
    padded = np.pad(hot, radius)
    area = np.zeros_like(hot)
    for dr in range(2 * radius + 1):
        for dc in range(2 * radius + 1):
            area |= padded[dr:dr + grid, dc:dc + grid]
    return area.reshape(-1)


def discovery_rates(hotspots, grid, params: PolicingParams) -> np.ndarray:
    area = effect_area(hotspots, grid, params.effect_range)
    return np.where(area, params.discovery_rate_hot, params.discovery_rate_other)


@dataclass(frozen=True)
class Incidents:
    """One day's incidents with a latent uniform per incident.

    An incident is discovered when its uniform falls below its cell's
    discovery rate, so discovery is fixed once the rates are known.
    """

    counts: np.ndarray       # per cell
    cell: np.ndarray         # cell of each incident
    uniforms: np.ndarray     # one per incident


def draw_incidents(state: GridEnvState, rng) -> Incidents:
    gen = rng.generator
    counts = gen.poisson(state.lam_true)
    cell = np.repeat(np.arange(len(counts)), counts)
    return Incidents(counts, cell, gen.random(len(cell)))


def discovered_counts(incidents: Incidents, rates: np.ndarray) -> np.ndarray:
    hit = incidents.uniforms < rates[incidents.cell]
    return np.bincount(incidents.cell[hit], minlength=len(incidents.counts))


def discover_incidents(state: GridEnvState, hotspots, params: PolicingParams, rng) -> np.ndarray:
    incidents = draw_incidents(state, rng)
    return discovered_counts(incidents, discovery_rates(hotspots, state.grid, params))


def update_prediction(lam_hat: np.ndarray, discovered: np.ndarray, decay: float = DECAY) -> np.ndarray:
    return np.maximum(decay * lam_hat + (1.0 - decay) * discovered, 0.0)


def overpolicing_scores(hotspots, districts: np.ndarray) -> np.ndarray:
    """District share of hotspots divided by its share of the area."""
    n_districts = int(districts.max()) + 1
    area = np.bincount(districts, minlength=n_districts) / len(districts)
    hot = np.bincount(districts[np.asarray(hotspots)], minlength=n_districts) / len(hotspots)
    return hot / area


def snapshot_rpd(hotspots, districts) -> float:
    return avg_pairwise_rpd(list(overpolicing_scores(hotspots, districts)))


@dataclass(frozen=True)
class PolicingInputs:
    lam_hat: np.ndarray
    incidents: Incidents

    def __len__(self) -> int:
        return len(self.lam_hat)


@dataclass(frozen=True)
class PolicingDecisions:
    inputs: PolicingInputs
    hotspots: np.ndarray
    rates: np.ndarray

    def __len__(self) -> int:
        return len(self.hotspots)


class PolicingEnvironment:
    def __init__(self, params: PolicingParams, grid: int = GRID, decay: float = DECAY):
        self.params = params
        self.grid = grid
        self.decay = decay

    def init(self, config, rng) -> GridEnvState:
        return police_init(self.params, rng, self.grid)

    def project(self, state: GridEnvState, rng) -> PolicingInputs:
        return PolicingInputs(state.lam_hat, draw_incidents(state, rng))

    def shift(self, state: GridEnvState, decisions: PolicingDecisions, rng) -> GridEnvState:
        found = discovered_counts(decisions.inputs.incidents, decisions.rates)
        lam_hat = update_prediction(state.lam_hat, found, self.decay)
        return GridEnvState(state.grid, state.lam_true, lam_hat, found, state.districts,
                            state.step + 1)

    def summarize(self, state: GridEnvState, decisions: PolicingDecisions) -> StepSummary:
        inc = decisions.inputs.incidents
        found = discovered_counts(inc, decisions.rates)
        d = state.districts
        nd = int(d.max()) + 1
        cells = np.bincount(d, minlength=nd)
        hot = np.bincount(d[decisions.hotspots], minlength=nd)
        lam_sum = np.bincount(d, weights=state.lam_true, minlength=nd)
        groups = {
            f"d{i}": GroupStats(int(cells[i]), float(lam_sum[i] / cells[i]), int(hot[i]),
                                int(cells[i]))
            for i in range(nd)
        }
        n_inc = int(inc.counts.sum())
        n_found = int(found.sum())
        truth = allocate_hotspots(state.lam_true, len(decisions.hotspots))
        correct = len(np.intersect1d(truth, decisions.hotspots, assume_unique=True))
        extras = {
            "incidents": float(n_inc),
            "discovered": float(n_found),
            "discovery_rate": n_found / n_inc if n_inc else 0.0,
            "correct_hotspots": float(correct),
        }
        return StepSummary(groups, float(n_found), extras)


class HotspotAgent:
    """Reads the smoothed intensity and patrols the top-N cells."""

    def __init__(self, params: PolicingParams, grid: int = GRID):
        self.params = params
        self.grid = grid

    def predict(self, inputs: PolicingInputs) -> PolicingInputs:
        return inputs

    def decide(self, outputs: PolicingInputs, config) -> PolicingDecisions:
        hot = allocate_hotspots(outputs.lam_hat, self.params.hotspot_count)
        return PolicingDecisions(outputs, hot, discovery_rates(hot, self.grid, self.params))
