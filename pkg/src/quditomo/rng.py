"""Reproducible random streams.

Every stochastic routine in the package draws from a generator produced by
:func:`stream`, keyed by a master seed plus a tuple of non-negative integers.
The mapping (seed, key) -> bit stream is the documented NumPy SeedSequence
spawn-key construction, so results are stable across runs, machines and
thread counts: parallel work items simply use their own key.
"""

import numpy as np

# top-level stream domains, so independent subsystems never collide
STATES = 0
COUNTS = 1
LOSS_SAMPLES = 2
FRAMES = 3


def stream(seed, *key):
    """Return a PCG64 generator uniquely determined by (seed, key)."""
    if any(k < 0 for k in key):
        raise ValueError("stream key components must be non-negative")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))
