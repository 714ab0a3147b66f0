"""Compare the compiled loan-step kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 200] [--batch 1000]

Both backends run on identical inputs; outputs are checked for exact
equality before timings are reported.
"""

from __future__ import annotations

import argparse
import sys
import timeit

import numpy as np

from feedbackfair import _kernels_py as py
from feedbackfair import kernels
from feedbackfair.cases.loan import (
    LOAN_SPACE, NBINS, REJECT_DELTA, REPAY_PROB, SCORE_LOW, SCORE_STEP, LoanEnvironment,
    LoanParams, ThresholdAgent, loan_init, projection_cumulative,
)
from feedbackfair.rng import derive_stream
from feedbackfair.simulation import simulate_trace

try:
    from feedbackfair import _kernels as cy
except ImportError:
    cy = None


def make_inputs(batch: int, seed: int = 0) -> dict:
    rng = derive_stream(seed, 0, 0)
    state = loan_init(None, rng)
    gen = rng.generator
    cum = projection_cumulative(state.hist)
    cells = py.assign_cells(cum, state.hist.reshape(-1), gen.random(batch), NBINS)
    repaid = gen.random(batch) < REPAY_PROB[cells % NBINS]
    n_cell = np.bincount(cells, minlength=2 * NBINS).reshape(2, NBINS)
    pos_cell = np.bincount(cells[repaid], minlength=2 * NBINS).reshape(2, NBINS)
    approved = (np.arange(2 * NBINS) % NBINS >= 28).astype(np.uint8)
    return {
        "assign": (cum, state.hist.reshape(-1), gen.random(batch), NBINS),
        "eqop": (n_cell, pos_cell, REPAY_PROB + (1 - REPAY_PROB) * -6.0, 0.01),
        "shift": (state.hist, cells, approved, repaid.astype(np.uint8), gen.standard_normal(batch),
                  gen.random(batch), 12.0, -24.0, REJECT_DELTA, 4.0, SCORE_LOW, SCORE_STEP),
    }


KERNELS = {"assign": "assign_cells", "eqop": "eqop_thresholds", "shift": "shift_population"}


def same(a, b) -> bool:
    if isinstance(a, tuple):
        return tuple(int(x) for x in a) == tuple(int(x) for x in b)
    return np.array_equal(a, b)


def trace_time(backend, k: int = 50) -> float:
    """Seconds for one full loan trace with ``backend`` swapped into the kernel table."""
    saved = {n: getattr(kernels, n) for n in KERNELS.values()}
    for n in KERNELS.values():
        setattr(kernels, n, getattr(backend, n))
    try:
        config = LOAN_SPACE.config_by_id(0)
        env = LoanEnvironment(LoanParams.from_config(config))
        agent = ThresholdAgent(LoanParams.from_config(config))
        return min(timeit.repeat(lambda: simulate_trace(env, agent, config, k, derive_stream(0, 0, 0)),
                                 number=1, repeat=3))
    finally:
        for n, f in saved.items():
            setattr(kernels, n, f)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--batch", type=int, default=1000)
    args = ap.parse_args(argv)
    if cy is None:
        print("compiled extension not built; only the numpy fallback is available")
        return 1
    inputs = make_inputs(args.batch)
    print(f"{'kernel':<18}{'python us':>12}{'compiled us':>14}{'speedup':>10}  identical")
    ok = True
    for key, name in KERNELS.items():
        f_py, f_cy = getattr(py, name), getattr(cy, name)
        a = inputs[key]
        match = same(f_py(*a), f_cy(*a))
        ok &= match
        t_py = min(timeit.repeat(lambda: f_py(*a), number=args.repeat, repeat=3)) / args.repeat
        t_cy = min(timeit.repeat(lambda: f_cy(*a), number=args.repeat, repeat=3)) / args.repeat
        print(f"{name:<18}{t_py * 1e6:>12.1f}{t_cy * 1e6:>14.1f}{t_py / t_cy:>9.1f}x  {match}")
    t_py, t_cy = trace_time(py), trace_time(cy)
    print(f"{'loan trace k=50':<18}{t_py * 1e6:>12.0f}{t_cy * 1e6:>14.0f}{t_py / t_cy:>9.1f}x")
    print("all outputs identical" if ok else "MISMATCH between backends")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
