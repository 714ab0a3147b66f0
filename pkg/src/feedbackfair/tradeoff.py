"""Pareto-optimal configurations over fairness and utility objectives."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

CHUNK = 256


class TradeoffError(ValueError):
    pass


class Direction(str, enum.Enum):
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


@dataclass(frozen=True)
class ObjectiveSpec:
    metric: str
    direction: Direction

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))


@dataclass
class ParetoFront:
    specs: list
    ids: list
    vectors: np.ndarray          # raw objective values, one row per member
    mins: np.ndarray
    maxs: np.ndarray
    excluded: list = field(default_factory=list)   # ids with non-finite objectives

    def __len__(self) -> int:
        return len(self.ids)


def _as_costs(vectors: np.ndarray, specs: Sequence[ObjectiveSpec]) -> np.ndarray:
    sign = np.array([-1.0 if s.direction is Direction.MAXIMIZE else 1.0 for s in specs])
    return vectors * sign


def dominated_mask(costs: np.ndarray) -> np.ndarray:
    """``mask[i]`` is true when some row is <= row i everywhere and < somewhere."""
    n = len(costs)
    mask = np.zeros(n, dtype=bool)
    for start in range(0, n, CHUNK):
        block = costs[start:start + CHUNK]
        le = (costs[None, :, :] <= block[:, None, :]).all(axis=2)
        lt = (costs[None, :, :] < block[:, None, :]).any(axis=2)
        mask[start:start + CHUNK] = (le & lt).any(axis=1)
    return mask


def pareto_front(points: Sequence[tuple], specs: Sequence[ObjectiveSpec]) -> ParetoFront:
    if not specs:
        raise TradeoffError("no objectives")
    if not points:
        raise TradeoffError("no points")
    specs = list(specs)
    ids, rows, excluded = [], [], []
    for pid, vec in points:
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (len(specs),):
            raise TradeoffError(f"point {pid}: expected {len(specs)} objectives")
        if not np.all(np.isfinite(vec)):
            excluded.append(pid)
            continue
        ids.append(pid)
        rows.append(vec)
    if not rows:
        raise TradeoffError("no point with finite objectives")
    raw = np.vstack(rows)
    keep = ~dominated_mask(_as_costs(raw, specs))
    members = raw[keep]
    return ParetoFront(specs, [i for i, k in zip(ids, keep) if k], members,
                       members.min(axis=0), members.max(axis=0), excluded)


def normalize_for_radar(front: ParetoFront) -> np.ndarray:
    """Scale each objective of the front to [0, 1] with higher meaning better."""
    if len(front) == 0:
        raise TradeoffError("empty front")
    span = front.maxs - front.mins
    scaled = np.ones_like(front.vectors)
    varying = span > 0
    scaled[:, varying] = (front.vectors[:, varying] - front.mins[varying]) / span[varying]
    for k, spec in enumerate(front.specs):
        if varying[k] and spec.direction is Direction.MINIMIZE:
            scaled[:, k] = 1.0 - scaled[:, k]
    return scaled
