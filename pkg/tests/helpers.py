"""Small trace builders shared by the test modules."""

from feedbackfair.metrics import GroupStats
from feedbackfair.simulation import Snapshot, Trace


def snap(step, a_sel, a_tot, b_sel, b_tot, a_pos=0, a_tp=0, b_pos=0, b_tp=0,
         a_mean=600.0, b_mean=560.0, utility=0.0, extras=None):
    groups = {
        "a": GroupStats(a_tot, a_mean, a_sel, a_tot, a_pos, a_tp),
        "b": GroupStats(b_tot, b_mean, b_sel, b_tot, b_pos, b_tp),
    }
    return Snapshot(step, groups, utility, extras or {})


def dp_trace(rates, total=1000, config_id=0, run=0):
    """Trace whose demographic parity at step t equals ``rates[t - 1]``."""
    snaps = []
    for t, r in enumerate(rates, 1):
        a_sel = int(round(total * (0.5 + r / 2)))
        b_sel = int(round(total * (0.5 - r / 2)))
        snaps.append(snap(t, a_sel, total, b_sel, total))
    return Trace(config_id, run, tuple(snaps))
