"""Deterministic RNG streams: every consumer derives from (seed, stream id)."""

from __future__ import annotations

import numpy as np

# fixed stream ids; new consumers append, never renumber
STREAM_INIT = 0
STREAM_SHUFFLE = 1
STREAM_DROPOUT = 2
STREAM_RL = 3
STREAM_EVAL = 4
STREAM_SERVICE = 5


def stream_rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, stream])))


def episode_rng(master_seed: int, index: int) -> np.random.Generator:
    """Per-episode stream derived from (master seed, episode index).

    Output is independent of episode execution order, so parallel generation
    stays deterministic.
    """
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([master_seed, index])))


def capture_state(rng: np.random.Generator) -> dict:
    return rng.bit_generator.state


def restore_rng(state: dict) -> np.random.Generator:
    gen = np.random.Generator(np.random.PCG64())
    gen.bit_generator.state = state
    return gen
