import math

import numpy as np
import pytest
from scipy import stats

from feedbackfair.cases.loan import (
    EQ_OP, LOAN_SPACE, MAX_UTIL, NBINS, SCORES, LoanBatch, LoanDecisions, LoanEnvState,
    LoanParams, bank_profit, loan_decide, loan_init, loan_project, loan_shift, loan_summarize,
    max_util_threshold, projection_cumulative, repay_probability, step_profit,
)
from feedbackfair.metrics import mean_gap
from feedbackfair.rng import derive_stream
from feedbackfair.simulation import Snapshot


def params(agent=MAX_UTIL, u=-4.0, up=12.0, down=-24.0, mode="expected"):
    return LoanParams(agent, u, up, down, mode)


def test_repay_probability_examples():
    assert repay_probability(550) == 0.5
    assert repay_probability(610) == pytest.approx(1 / (1 + math.exp(-1)), abs=1e-12)
    assert repay_probability(600) < repay_probability(700)
    with pytest.raises(ValueError):
        repay_probability(299)


@pytest.mark.parametrize("u,p", [(-9, 0.9), (-3, 0.75)])
def test_max_util_break_even(u, p):
    assert max_util_threshold(u) == pytest.approx(p, abs=1e-15)
    assert p + (1 - p) * u == pytest.approx(0.0, abs=1e-12)


def test_init_populations():
    s1 = loan_init(None, derive_stream(0, 0, 0))
    s2 = loan_init(None, derive_stream(0, 0, 0))
    assert np.array_equal(s1.hist, s2.hist)
    assert s1.population.tolist() == [10_000, 10_000]
    means = [(h @ SCORES) / h.sum() for h in s1.hist]
    assert abs(means[0] - means[1] - 60) < 2


def test_single_bin_population_projects_into_it():
    hist = np.zeros((2, NBINS), dtype=np.int64)
    hist[0, 20] = hist[1, 30] = 5000
    batch = loan_project(LoanEnvState(hist), derive_stream(1, 0, 0), 1000)
    assert len(batch) == 1000
    assert set(batch.bins[batch.groups == 0]) == {20}
    assert set(batch.bins[batch.groups == 1]) == {30}


def test_projection_frequencies_match_weights():
    state = loan_init(None, derive_stream(3, 0, 0))
    cum = projection_cumulative(state.hist)
    weights = np.diff(np.concatenate(([0.0], cum)))
    counts = np.zeros(2 * NBINS)
    for r in range(50):
        batch = loan_project(state, derive_stream(3, 1, r), 1000)
        counts += np.bincount(batch.cells, minlength=2 * NBINS)
    expected = weights / weights.sum() * counts.sum()
    keep = expected >= 5
    obs = np.append(counts[keep], counts[~keep].sum())
    exp = np.append(expected[keep], expected[~keep].sum())
    pval = stats.chisquare(obs, exp * obs.sum() / exp.sum()).pvalue
    assert pval > 1e-3


def mirrored_batch():
    rng = np.random.default_rng(0)
    bins = rng.integers(20, 50, 400)
    repaid = rng.random(400) < 0.7
    cells = np.concatenate([bins, bins + NBINS])
    return LoanBatch(cells, np.concatenate([repaid, repaid]))


def test_eqop_symmetric_groups_get_equal_thresholds():
    d = loan_decide(mirrored_batch(), params(EQ_OP, u=-3.0))
    assert d.thresholds[0] == d.thresholds[1]


def test_max_util_single_threshold():
    d = loan_decide(mirrored_batch(), params(MAX_UTIL, u=-3.0))
    j = d.thresholds[0]
    assert d.thresholds == (j, j)
    assert repay_probability(SCORES[j]) >= 0.75 > repay_probability(SCORES[j - 1])


def all_repay_decisions(hist, bins):
    cells = np.array(bins)
    approved = np.ones(2 * NBINS, dtype=bool)
    return LoanDecisions(LoanBatch(cells, np.ones(len(cells), dtype=bool)), approved, (0, 0), -3.0)


def test_expected_mode_repayers_move_exactly():
    hist = np.zeros((2, NBINS), dtype=np.int64)
    hist[0, 10] = 5
    hist[0, NBINS - 1] = 2
    d = all_repay_decisions(hist, [10, 10, NBINS - 1])
    out = loan_shift(LoanEnvState(hist), d, derive_stream(0, 0, 0), params(up=20.0))
    assert out.hist[0, 12] == 2 and out.hist[0, 10] == 3
    assert out.hist[0, NBINS - 1] == 2  # clamped at 850
    assert (out.population == LoanEnvState(hist).population).all()


def test_normal_mode_repayer_shift_mean():
    n = 10_000
    hist = np.zeros((2, NBINS), dtype=np.int64)
    hist[0, 25] = n
    d = all_repay_decisions(hist, [25] * n)
    out = loan_shift(LoanEnvState(hist), d, derive_stream(0, 0, 0), params(up=12.0, mode="normal"))
    shift = (out.hist[0] @ SCORES) / n - SCORES[25]
    # stochastic rounding to the 10-point grid is unbiased but adds up to 5 points of spread
    assert abs(shift - 12.0) < 3 * math.hypot(4.0, 5.0) / math.sqrt(n)


def test_rejected_applicants_take_inquiry_penalty():
    hist = np.zeros((2, NBINS), dtype=np.int64)
    hist[1, 30] = 4
    cells = np.full(4, NBINS + 30)
    d = LoanDecisions(LoanBatch(cells, np.zeros(4, dtype=bool)), np.zeros(2 * NBINS, dtype=bool),
                      (NBINS, NBINS), -3.0)
    out = loan_shift(LoanEnvState(hist), d, derive_stream(0, 0, 0), params())
    # -5 lands halfway between bins 29 and 30
    assert out.hist[1, 29] + out.hist[1, 30] == 4 and out.hist[1, :29].sum() == 0


def profit_of(n_repay, n_default, u):
    cells = np.full(n_repay + n_default, 40)
    repaid = np.array([True] * n_repay + [False] * n_default)
    approved = np.ones(2 * NBINS, dtype=bool)
    return step_profit(LoanDecisions(LoanBatch(cells, repaid), approved, (0, 0), u))


def test_profit_examples():
    none = LoanDecisions(LoanBatch(np.array([40]), np.array([True])), np.zeros(2 * NBINS, dtype=bool),
                         (NBINS, NBINS), -3.0)
    assert step_profit(none) == 0
    assert profit_of(10, 1, -3.0) == 7
    assert profit_of(9, 2, -3.0) < profit_of(10, 1, -3.0)
    snaps = [Snapshot(t, {}, 7.0) for t in (1, 2)]
    assert bank_profit(snaps) == {"total": 14.0, "per_step": 7.0}


def test_initial_summary_mean_gap():
    rng = derive_stream(0, 0, 0)
    state = loan_init(None, rng)
    batch = loan_project(state, rng, 1000)
    s = loan_summarize(state, loan_decide(batch, params()))
    snap = Snapshot(1, s.groups, s.utility)
    assert abs(mean_gap(snap) - 60) < 2


def test_table_space():
    assert LOAN_SPACE.size == 768
    assert LOAN_SPACE.parameters[0].values[0] == EQ_OP
