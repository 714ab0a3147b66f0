"""Parameter spaces, full enumeration and covering-array sampling."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from numbers import Real
from typing import Iterable, Sequence, Union

import numpy as np

ParamValue = Union[float, int, str]

CANDIDATES_PER_ROW = 50


class ParamKind(str, enum.Enum):
    SYSTEM = "system"
    ENVIRONMENTAL = "environmental"


class SpaceError(ValueError):
    pass


def _is_numeric(v) -> bool:
    return isinstance(v, Real) and not isinstance(v, bool)


@dataclass(frozen=True)
class ParameterDef:
    name: str
    kind: ParamKind
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "kind", ParamKind(self.kind))
        object.__setattr__(self, "values", tuple(self.values))
        if not self.name:
            raise SpaceError("parameter name must be non-empty")
        if not self.values:
            raise SpaceError(f"parameter {self.name!r} has no values")
        if len(set(self.values)) != len(self.values):
            raise SpaceError(f"parameter {self.name!r} has duplicate values")
        numeric = [_is_numeric(v) for v in self.values]
        if any(numeric) and not all(numeric):
            raise SpaceError(f"parameter {self.name!r} mixes numeric and categorical values")
        if not any(numeric) and not all(isinstance(v, str) for v in self.values):
            raise SpaceError(f"parameter {self.name!r} values must be numbers or strings")

    @property
    def categorical(self) -> bool:
        return isinstance(self.values[0], str)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class ConfigSpace:
    parameters: tuple

    def __post_init__(self):
        object.__setattr__(self, "parameters", tuple(self.parameters))
        names = [p.name for p in self.parameters]
        if len(set(names)) != len(names):
            raise SpaceError("parameter names must be unique")

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.parameters]

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(p) for p in self.parameters)

    @property
    def size(self) -> int:
        return math.prod(self.sizes)

    def __len__(self) -> int:
        return len(self.parameters)

    def index_of(self, name: str) -> int:
        for i, p in enumerate(self.parameters):
            if p.name == name:
                return i
        raise KeyError(name)

    def rank(self, assignments: Sequence[int]) -> int:
        """Row-major rank of an assignment vector (last parameter fastest)."""
        rank = 0
        for a, n in zip(assignments, self.sizes):
            rank = rank * n + int(a)
        return rank

    def unrank(self, config_id: int) -> tuple[int, ...]:
        out = []
        for n in reversed(self.sizes):
            config_id, a = divmod(config_id, n)
            out.append(a)
        return tuple(reversed(out))

    def config(self, assignments: Sequence[int]) -> "Configuration":
        return Configuration(self, tuple(int(a) for a in assignments))

    def config_by_id(self, config_id: int) -> "Configuration":
        if not 0 <= config_id < self.size:
            raise SpaceError(f"config id {config_id} out of range")
        return Configuration(self, self.unrank(config_id))


@dataclass(frozen=True)
class Configuration:
    space: ConfigSpace = field(repr=False, compare=False)
    assignments: tuple
    id: int = field(init=False)

    def __post_init__(self):
        sizes = self.space.sizes
        if len(self.assignments) != len(sizes):
            raise SpaceError("assignment count does not match parameter count")
        for a, n in zip(self.assignments, sizes):
            if not 0 <= a < n:
                raise SpaceError(f"assignment index {a} out of range for {n} values")
        object.__setattr__(self, "id", self.space.rank(self.assignments))

    @property
    def values(self) -> dict[str, ParamValue]:
        return {
            p.name: p.values[a] for p, a in zip(self.space.parameters, self.assignments)
        }

    def __getitem__(self, name: str) -> ParamValue:
        i = self.space.index_of(name)
        return self.space.parameters[i].values[self.assignments[i]]


def enumerate_configs(space: ConfigSpace) -> list[Configuration]:
    if not space.parameters:
        raise SpaceError("empty space")
    return [
        Configuration(space, combo)
        for combo in itertools.product(*(range(n) for n in space.sizes))
    ]


class _TupleIndex:
    """Flat bookkeeping of every g-way (parameter set, value combo) pair."""

    def __init__(self, sizes: Sequence[int], g: int):
        self.sizes = np.asarray(sizes, dtype=np.int64)
        self.params = np.array(list(itertools.combinations(range(len(sizes)), g)), dtype=np.int64)
        sub = self.sizes[self.params]                      # (T, g)
        mult = np.ones_like(sub)
        for k in range(g - 2, -1, -1):
            mult[:, k] = mult[:, k + 1] * sub[:, k + 1]
        self.mult = mult
        blocks = sub.prod(axis=1)
        self.offsets = np.concatenate(([0], np.cumsum(blocks)[:-1]))
        self.total = int(blocks.sum())
        self.owner = np.repeat(np.arange(len(self.params)), blocks)

    def flat_indices(self, rows: np.ndarray) -> np.ndarray:
        """Indices covered by each row; shape (len(rows), T)."""
        rows = np.atleast_2d(rows)
        return self.offsets + (rows[:, self.params] * self.mult).sum(axis=2)

    def decode(self, flat: int) -> tuple[np.ndarray, np.ndarray]:
        t = self.owner[flat]
        local = flat - self.offsets[t]
        params = self.params[t]
        values = (local // self.mult[t]) % self.sizes[params]
        return params, values


def sample_covering_array(space: ConfigSpace, g: int, seed: int) -> list[Configuration]:
    """Greedy strength-``g`` covering array.

    Rows are added one at a time.  Each row is the best of
    ``CANDIDATES_PER_ROW`` random candidates, every candidate seeded with one
    still-uncovered g-tuple so that progress is guaranteed.  Ties go to the
    lexicographically lowest assignment vector.
    """
    n = len(space.parameters)
    if n == 0:
        raise SpaceError("empty space")
    if not 2 <= g <= n:
        raise SpaceError(f"strength out of range: g={g} with {n} parameters")
    if g == n:
        return enumerate_configs(space)

    rng = np.random.Generator(np.random.PCG64(seed))
    idx = _TupleIndex(space.sizes, g)
    sizes = idx.sizes
    uncovered = np.ones(idx.total, dtype=bool)
    remaining = idx.total
    rows: list[tuple[int, ...]] = []
    while remaining:
        cand = rng.integers(0, sizes, size=(CANDIDATES_PER_ROW, n))
        open_idx = np.flatnonzero(uncovered)
        picks = open_idx[rng.integers(0, len(open_idx), size=CANDIDATES_PER_ROW)]
        for r, flat in enumerate(picks):
            params, values = idx.decode(flat)
            cand[r, params] = values
        covered = idx.flat_indices(cand)
        scores = uncovered[covered].sum(axis=1)
        best_score = scores.max()
        tied = np.flatnonzero(scores == best_score)
        best = min(tied, key=lambda r: tuple(cand[r]))
        uncovered[covered[best]] = False
        remaining -= int(best_score)
        rows.append(tuple(int(a) for a in cand[best]))
    return sorted((Configuration(space, r) for r in rows), key=lambda c: c.id)


def verify_coverage(
    configs: Iterable[Configuration], space: ConfigSpace, g: int
) -> list[tuple[tuple[str, ParamValue], ...]]:
    """List every g-way value combination not present in ``configs``.

    Each missing combination is returned once as a tuple of
    ``(parameter name, value)`` pairs, in parameter order.
    """
    n = len(space.parameters)
    seen: dict[tuple[int, ...], set] = {
        ps: set() for ps in itertools.combinations(range(n), g)
    }
    for c in configs:
        a = c.assignments
        for ps, bucket in seen.items():
            bucket.add(tuple(a[p] for p in ps))
    missing = []
    params = space.parameters
    for ps, bucket in seen.items():
        for combo in itertools.product(*(range(len(params[p])) for p in ps)):
            if combo not in bucket:
                missing.append(
                    tuple((params[p].name, params[p].values[v]) for p, v in zip(ps, combo))
                )
    return missing
