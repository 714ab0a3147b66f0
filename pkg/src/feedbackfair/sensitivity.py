"""Regression-based sensitivity analysis over simulated configurations.

The response (one value per configuration) is regressed on standardized
main effects and all pairwise interactions.  Each term's sum of squares is
the loss in fit when the term's columns are removed from the full model;
terms are then ranked by that sum of squares and classified by eta-squared.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import betainc

from .space import Configuration, ParameterDef

STD_ATOL = 1e-12
ALIAS_RTOL = 1e-9
SIGNIFICANCE = 0.05


class SensitivityError(ValueError):
    pass


class EffectClass(str, enum.Enum):
    NEGLIGIBLE = "negligible"
    SMALL = "small"
    MEDIUM = "medium"
    LARGE = "large"


def effect_class(eta_sq: float) -> EffectClass:
    if eta_sq >= 0.14:
        return EffectClass.LARGE
    if eta_sq >= 0.06:
        return EffectClass.MEDIUM
    if eta_sq >= 0.01:
        return EffectClass.SMALL
    return EffectClass.NEGLIGIBLE


@dataclass(frozen=True)
class Column:
    term: tuple          # parameter names: one for a main effect, two for an interaction
    label: str           # dummy level(s) for categorical parts, "" otherwise

    @property
    def term_name(self) -> str:
        return term_name(self.term)

    @property
    def name(self) -> str:
        return f"{self.term_name}[{self.label}]" if self.label else self.term_name


def term_name(params: Sequence[str]) -> str:
    return ":".join(params)


@dataclass
class DesignMatrix:
    X: np.ndarray
    y: np.ndarray
    columns: list
    dropped: list = field(default_factory=list)    # names of constant columns
    terms: list = field(default_factory=list)      # every candidate term, in order

    @property
    def n(self) -> int:
        return self.X.shape[0]


def _standardize(col: np.ndarray) -> np.ndarray | None:
    sd = col.std(ddof=1)
    if not np.isfinite(sd) or sd <= STD_ATOL * max(1.0, np.abs(col).max()):
        return None
    return (col - col.mean()) / sd


def _main_columns(param: ParameterDef, values: list) -> list[tuple[str, np.ndarray]]:
    if param.categorical:
        return [
            (level, np.array([1.0 if v == level else 0.0 for v in values]))
            for level in param.values[1:]
        ]
    return [("", np.array(values, dtype=float))]


def encode_design(
    parameters: Sequence[ParameterDef],
    rows: Sequence[Sequence],
    responses: Sequence[float],
) -> DesignMatrix:
    """Standardized main-effect and pairwise-interaction design.

    ``rows`` hold decoded parameter values, one row per configuration.
    Categorical parameters are one-hot coded against their first-listed
    level.  Interaction columns are products of standardized main columns,
    standardized again.  Constant columns are dropped and recorded.
    """
    y = np.asarray(responses, dtype=float)
    if len(rows) != len(y):
        raise SensitivityError("one response per row is required")
    if not np.all(np.isfinite(y)):
        raise SensitivityError("responses must be finite")
    if len({tuple(r) for r in rows}) < 2:
        raise SensitivityError("need at least two distinct configurations")

    names = [p.name for p in parameters]
    mains: dict[str, list[tuple[str, np.ndarray | None]]] = {}
    columns, data, dropped = [], [], []
    for i, p in enumerate(parameters):
        mains[p.name] = []
        for label, raw in _main_columns(p, [r[i] for r in rows]):
            col = Column((p.name,), label)
            z = _standardize(raw)
            mains[p.name].append((label, z))
            if z is None:
                dropped.append(col.name)
                continue
            columns.append(col)
            data.append(z)
    for a, b in itertools.combinations(names, 2):
        for (la, za), (lb, zb) in itertools.product(mains[a], mains[b]):
            label = f"{la},{lb}" if la and lb else la or lb
            col = Column((a, b), label)
            z = None if za is None or zb is None else _standardize(za * zb)
            if z is None:
                dropped.append(col.name)
                continue
            columns.append(col)
            data.append(z)
    terms = [(n,) for n in names] + list(itertools.combinations(names, 2))
    X = np.column_stack(data) if data else np.zeros((len(y), 0))
    return DesignMatrix(X, y, columns, dropped, terms)


def encode_configs(configs: Sequence[Configuration], responses: Sequence[float]) -> DesignMatrix:
    if not configs:
        raise SensitivityError("no configurations")
    space = configs[0].space
    rows = [[c.space.parameters[i].values[a] for i, a in enumerate(c.assignments)] for c in configs]
    return encode_design(space.parameters, rows, responses)


@dataclass
class FitResult:
    coefficients: np.ndarray     # one per design column; NaN for aliased columns
    residuals: np.ndarray
    ss_resid: float
    ss_total: float
    kept: list                   # indices of the columns used in the fit
    aliased: list                # names of columns dropped as linearly dependent
    df_resid: int

    @property
    def r2(self) -> float:
        if self.ss_total == 0:
            return float("nan")
        return min(max(1.0 - self.ss_resid / self.ss_total, 0.0), 1.0)


def independent_columns(X: np.ndarray, rtol: float = ALIAS_RTOL) -> list[int]:
    """Greedy left-to-right selection of linearly independent columns."""
    n, p = X.shape
    basis = np.zeros((n, 0))
    keep = []
    for j in range(p):
        v = X[:, j].copy()
        for _ in range(2):
            v -= basis @ (basis.T @ v)
        norm = np.linalg.norm(v)
        if norm > rtol * max(np.linalg.norm(X[:, j]), 1.0):
            keep.append(j)
            basis = np.column_stack([basis, v / norm])
    return keep


def _lstsq_qr(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    if X.shape[1] == 0:
        return np.zeros(0)
    q, r = np.linalg.qr(X)
    return solve_triangular(r, q.T @ y)


def _ssr(X: np.ndarray, yc: np.ndarray) -> float:
    beta = _lstsq_qr(X, yc)
    resid = yc - X @ beta
    return float(resid @ resid)


def fit_ols(design: DesignMatrix) -> FitResult:
    X, y = design.X, design.y
    n, p = X.shape
    if n < p + 1:
        raise SensitivityError(f"underdetermined: {n} rows for {p} columns")
    yc = y - y.mean()
    keep = independent_columns(X)
    beta = np.full(p, np.nan)
    coef = _lstsq_qr(X[:, keep], yc)
    beta[keep] = coef
    resid = yc - X[:, keep] @ coef
    aliased = [design.columns[j].name for j in range(p) if j not in set(keep)]
    return FitResult(beta, resid, float(resid @ resid), float(yc @ yc), keep, aliased,
                     n - 1 - len(keep))


def f_cdf(x: float, d1: float, d2: float) -> float:
    """CDF of the F distribution via the regularized incomplete beta function."""
    if x <= 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    return float(betainc(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2)))


def f_sf(x: float, d1: float, d2: float) -> float:
    if x <= 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    return float(betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * x)))


@dataclass
class AnovaRow:
    term: str
    dummies: list
    coefficients: list
    ss: float
    df: int
    f: float
    p: float
    eta_sq: float

    @property
    def effect(self) -> EffectClass:
        return effect_class(self.eta_sq)

    @property
    def significant(self) -> bool:
        return not math.isnan(self.p) and self.p < SIGNIFICANCE

    @property
    def coefficient(self) -> float:
        return self.coefficients[0]


def anova(design: DesignMatrix, fit: FitResult) -> list[AnovaRow]:
    """One row per term that kept at least one column."""
    X = design.X
    yc = design.y - design.y.mean()
    kept = list(fit.kept)
    ms_resid = fit.ss_resid / fit.df_resid if fit.df_resid > 0 else float("nan")
    rows = []
    for term in design.terms:
        name = term_name(term)
        cols = [j for j in kept if design.columns[j].term_name == name]
        if not cols:
            continue
        reduced = [j for j in kept if j not in cols]
        ss = max(_ssr(X[:, reduced], yc) - fit.ss_resid, 0.0)
        df = len(cols)
        if fit.df_resid > 0 and ms_resid > 0:
            f = (ss / df) / ms_resid
            p = f_sf(f, df, fit.df_resid)
        elif fit.df_resid > 0:
            f, p = (math.inf, 0.0) if ss > 0 else (float("nan"), float("nan"))
        else:
            f = p = float("nan")
        eta = ss / fit.ss_total if fit.ss_total > 0 else 0.0
        rows.append(AnovaRow(
            name,
            [design.columns[j].label for j in cols],
            [float(fit.coefficients[j]) for j in cols],
            ss, df, f, p, min(eta, 1.0),
        ))
    return rows


@dataclass
class SensitivityReport:
    rows: list
    r2: float
    ss_total: float
    ss_resid: float
    df_resid: int
    n_rows: int
    dropped: list
    aliased: list

    def ranking(self, significant_only: bool = False) -> list[str]:
        return [r.term for r in self.rows if r.significant or not significant_only]

    def row(self, term: str) -> AnovaRow:
        for r in self.rows:
            if r.term == term:
                return r
        raise KeyError(term)


def rank_terms(table: Sequence[AnovaRow], fit: FitResult | None = None,
               design: DesignMatrix | None = None) -> SensitivityReport:
    if not table:
        raise SensitivityError("empty ANOVA table")
    rows = sorted(table, key=lambda r: (-r.ss, r.term))
    return SensitivityReport(
        rows,
        fit.r2 if fit else float("nan"),
        fit.ss_total if fit else float("nan"),
        fit.ss_resid if fit else float("nan"),
        fit.df_resid if fit else 0,
        design.n if design else 0,
        list(design.dropped) if design else [],
        list(fit.aliased) if fit else [],
    )


def analyze(parameters: Sequence[ParameterDef], rows: Sequence[Sequence],
            responses: Sequence[float]) -> SensitivityReport:
    design = encode_design(parameters, rows, responses)
    fit = fit_ols(design)
    return rank_terms(anova(design, fit), fit, design)


def analyze_configs(configs: Sequence[Configuration], responses: Sequence[float]) -> SensitivityReport:
    design = encode_configs(configs, responses)
    fit = fit_ols(design)
    return rank_terms(anova(design, fit), fit, design)


def rbo(r1: Sequence, r2: Sequence, p: float = 0.8) -> float:
    """Extrapolated rank-biased overlap of two equal-length rankings."""
    if not r1 or not r2:
        raise SensitivityError("empty ranking")
    if len(r1) != len(r2):
        raise SensitivityError("rankings must have equal length")
    if not 0 < p < 1:
        raise SensitivityError("persistence must lie in (0, 1)")
    k = len(r1)
    seen1, seen2 = set(), set()
    overlap = 0
    acc = 0.0
    for d in range(1, k + 1):
        a, b = r1[d - 1], r2[d - 1]
        if a == b:
            overlap += 1
        else:
            overlap += (a in seen2) + (b in seen1)
        seen1.add(a)
        seen2.add(b)
        acc += overlap / d * p ** d
    return overlap / k * p ** k + (1 - p) / p * acc


def kendall_tau(r1: Sequence, r2: Sequence) -> float:
    """Kendall tau between two orderings of the same items."""
    if len(r1) != len(r2) or set(r1) != set(r2):
        raise SensitivityError("rankings must order the same items")
    n = len(r1)
    if n < 2:
        raise SensitivityError("need at least two items")
    pos2 = {item: i for i, item in enumerate(r2)}
    seq = np.array([pos2[item] for item in r1])
    diff = np.sign(seq[None, :] - seq[:, None])
    upper = np.triu_indices(n, 1)
    s = diff[upper].sum()
    return float(s) / (n * (n - 1) / 2)


def compare_rankings(baseline: SensitivityReport, other: SensitivityReport,
                     p: float = 0.8) -> dict[str, float]:
    """RBO and Kendall tau of ``other`` against the significant baseline terms."""
    base = baseline.ranking(significant_only=True)
    present = set(other.ranking())
    base = [t for t in base if t in present]
    order = [t for t in other.ranking() if t in set(base)]
    out = {"terms": len(base), "rbo": float("nan"), "tau": float("nan")}
    if base:
        out["rbo"] = rbo(base, order, p)
    if len(base) >= 2:
        out["tau"] = kendall_tau(base, order)
    return out
