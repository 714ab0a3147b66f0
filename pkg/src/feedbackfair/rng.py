"""Reproducible per-run random streams.

Every simulation run owns a private stream derived from the tuple
``(global_seed, config_id, run_index)``.  The tuple is folded into one
64-bit word and passed through splitmix64; the result seeds a numpy
``PCG64`` generator used for the actual draws.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
CONFIG_MULT = 0x9E3779B97F4A7C15
RUN_MULT = 0xBF58476D1CE4E5B9


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state once. Returns ``(new_state, output)``."""
    state = (state + GOLDEN_GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def mix_seed(global_seed: int, config_id: int, run_index: int) -> int:
    return (
        (global_seed & MASK64)
        ^ ((config_id * CONFIG_MULT) & MASK64)
        ^ ((run_index * RUN_MULT) & MASK64)
    )


class RngStream:
    """A splitmix64-seeded random stream.

    ``next_u64`` walks the raw splitmix64 sequence.  ``generator`` is a numpy
    Generator seeded from the first splitmix64 output, created lazily; the
    simulation code draws exclusively from it.
    """

    __slots__ = ("derivation", "state", "_seed_word", "_gen")

    def __init__(self, global_seed: int, config_id: int, run_index: int):
        self.derivation = (int(global_seed), int(config_id), int(run_index))
        self.state = mix_seed(global_seed, config_id, run_index)
        _, self._seed_word = splitmix64(self.state)
        self._gen: np.random.Generator | None = None

    def next_u64(self) -> int:
        self.state, out = splitmix64(self.state)
        return out

    @property
    def seed_word(self) -> int:
        return self._seed_word

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            self._gen = np.random.Generator(np.random.PCG64(self._seed_word))
        return self._gen

    def __repr__(self) -> str:
        return "RngStream(seed=%d, config=%d, run=%d)" % self.derivation


def derive_stream(global_seed: int, config_id: int, run_index: int) -> RngStream:
    return RngStream(global_seed, config_id, run_index)
