import math

import pytest

from feedbackfair.metrics import GroupStats, LongTermMetric, demographic_parity, sample_stats, total_utility
from feedbackfair.rng import derive_stream
from feedbackfair.simulation import (
    MonteCarloLimits, SimulationError, StepSummary, run_campaign, run_monte_carlo,
    simulate_trace, stopping_check,
)
from feedbackfair.space import ConfigSpace, ParameterDef, enumerate_configs

SPACE = ConfigSpace([ParameterDef("level", "system", [0.5, 1.0, 2.0])])


class TwoBinEnv:
    """Two score bins per group; the upper bin is approved.

    Shift: a fifth of the upper bin (rounded down) defaults and drops, half
    of the lower bin (rounded down) improves.
    """

    def init(self, config, rng):
        return {"a": (10, 10), "b": (16, 4)}

    def project(self, state, rng):
        return state

    def shift(self, state, decisions, rng):
        out = {}
        for g, (low, high) in state.items():
            new_high = high - high // 5 + low // 2
            out[g] = (low + high - new_high, new_high)
        return out

    def summarize(self, state, decisions):
        return StepSummary({g: GroupStats(lo + hi, 0.0, hi, lo + hi) for g, (lo, hi) in state.items()})


class PassAgent:
    def predict(self, inputs):
        return inputs

    def decide(self, outputs, config):
        return outputs


def test_two_bin_toy_matches_hand_table():
    cfg = SPACE.config_by_id(0)
    trace = simulate_trace(TwoBinEnv(), PassAgent(), cfg, 3, derive_stream(0, 0, 0))
    # hand-executed: a upper bin 10 -> 13 -> 14, b upper bin 4 -> 12 -> 14 (groups of 20)
    assert [s.groups["a"].selected for s in trace.snapshots] == [10, 13, 14]
    assert [s.groups["b"].selected for s in trace.snapshots] == [4, 12, 14]
    dp = [demographic_parity(s) for s in trace.snapshots]
    assert dp == pytest.approx([0.3, 0.05, 0.0], abs=1e-15)


class CountingEnv(TwoBinEnv):
    def __init__(self):
        self.shifts = 0

    def shift(self, state, decisions, rng):
        self.shifts += 1
        return super().shift(state, decisions, rng)


def test_horizon_one_has_no_shift():
    env = CountingEnv()
    trace = simulate_trace(env, PassAgent(), SPACE.config_by_id(0), 1, derive_stream(0, 0, 0))
    assert len(trace) == 1 and env.shifts == 0
    env = CountingEnv()
    simulate_trace(env, PassAgent(), SPACE.config_by_id(0), 4, derive_stream(0, 0, 0))
    assert env.shifts == 3


def test_bad_horizon():
    with pytest.raises(SimulationError):
        simulate_trace(TwoBinEnv(), PassAgent(), SPACE.config_by_id(0), 0, derive_stream(0, 0, 0))


class EmptyEnv(TwoBinEnv):
    def project(self, state, rng):
        return []


def test_degenerate_population():
    with pytest.raises(SimulationError, match="degenerate population"):
        simulate_trace(EmptyEnv(), PassAgent(), SPACE.config_by_id(0), 2, derive_stream(0, 0, 0))


class NoisyEnv:
    """Utility per step ~ N(level, (0.1 * level)^2); nothing else happens."""

    def __init__(self, level=1.0, sd=0.1):
        self.level, self.sd = level, sd

    def init(self, config, rng):
        return 0

    def project(self, state, rng):
        return [rng.generator.normal(self.level, self.sd)]

    def shift(self, state, decisions, rng):
        return state

    def summarize(self, state, decisions):
        g = GroupStats(1, 0.0, 0, 1)
        return StepSummary({"a": g, "b": g}, float(decisions[0]))


def test_zero_variance_stops_at_min_runs():
    res = run_monte_carlo(NoisyEnv(1.0, 0.0), PassAgent(), SPACE.config_by_id(0), 3,
                          total_utility, 0, MonteCarloLimits(min_runs=5))
    assert res.m == 5 and res.std == 0.0


def test_stopping_rule_recomputed_from_logged_values():
    limits = MonteCarloLimits(min_runs=5, max_runs=200, abs_floor=0.0)
    res = run_monte_carlo(NoisyEnv(1.0, 0.1), PassAgent(), SPACE.config_by_id(0), 1,
                          total_utility, 3, limits)
    assert res.stop_reason == "relative"
    vals = res.lf_values
    mean, std = sample_stats(vals)
    assert 1.96 * std / (abs(mean) * math.sqrt(len(vals))) < 0.05
    prev_mean, prev_std = sample_stats(vals[:-1])
    if len(vals) - 1 >= limits.min_runs:
        assert 1.96 * prev_std / (abs(prev_mean) * math.sqrt(len(vals) - 1)) >= 0.05
    assert len(vals) >= 10  # the population rule needs m >= 16; estimated std wanders


def test_stopping_branches():
    lim = MonteCarloLimits(min_runs=2, max_runs=3, rel_tol=0.05, abs_floor=0.005)
    assert stopping_check([1.0], lim) is None
    assert stopping_check([1.0, 1.0], lim) == "relative"
    assert stopping_check([0.0, 0.001], lim) == "absolute"
    assert stopping_check([0.0, 1.0], lim) is None
    assert stopping_check([0.0, 1.0, -1.0], lim) == "cap"


def test_runs_use_their_own_streams():
    cfg = SPACE.config_by_id(1)
    res = run_monte_carlo(NoisyEnv(), PassAgent(), cfg, 2, total_utility, 9,
                          MonteCarloLimits(min_runs=3, max_runs=3))
    for i, t in enumerate(res.traces):
        alone = simulate_trace(NoisyEnv(), PassAgent(), cfg, 2, derive_stream(9, cfg.id, i))
        assert alone == t


class NoisyCase:
    def make_env(self, config):
        if config["level"] == 2.0:
            raise ValueError("boom")
        return NoisyEnv(config["level"], 0.05)

    def make_agent(self, config):
        return PassAgent()

    def metric(self, name):
        return {"u": total_utility, "max_inc_dp": LongTermMetric("dp", "max_inc")}[name]


def test_campaign_is_independent_of_jobs_and_isolates_failures():
    configs = enumerate_configs(SPACE)
    serial = run_campaign(configs, NoisyCase(), 3, ["u", "max_inc_dp"], 5, jobs=1)
    parallel = run_campaign(configs, NoisyCase(), 3, ["u", "max_inc_dp"], 5, jobs=2)
    assert [r.stats for r in serial.results] == [r.stats for r in parallel.results]
    assert [r.lf_values for r in serial.results] == [r.lf_values for r in parallel.results]
    assert list(serial.failures) == [2] and "boom" in serial.failures[2]
    assert [r.config.id for r in serial.results] == [0, 1]


def test_single_config_campaign_wraps_monte_carlo():
    cfg = SPACE.config_by_id(0)
    camp = run_campaign([cfg], NoisyCase(), 2, ["u"], 1)
    mc = run_monte_carlo(NoisyEnv(0.5, 0.05), PassAgent(), cfg, 2, total_utility, 1)
    (r,) = camp.results
    assert r.lf_values == mc.lf_values and r.stats["u"] == (mc.mean, mc.std)
