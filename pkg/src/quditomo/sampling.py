"""Finite-sample measurement simulation.

The default draws one N-shot multinomial over all protocol rows.  For
protocols partitioned into blocks an optional per-block mode splits the shots
evenly across blocks and draws a multinomial within each (probabilities
renormalised per block), mirroring experiments that measure each basis
separately.  The mode is recorded on the counts record.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .protocols import measurement_probs
from .rng import COUNTS, stream

SINGLE = "single-multinomial"
PER_BLOCK = "per-block"


@dataclass
class CountsRecord:
    """Observed event counts per protocol row for one simulated experiment."""

    protocol: str
    N: int
    k: np.ndarray = field(repr=False)
    seed: int | None = None
    mode: str = SINGLE

    def __post_init__(self):
        self.k = np.asarray(self.k, dtype=np.int64)
        if (self.k < 0).any():
            raise ValueError("counts must be non-negative")
        if self.k.sum() != self.N:
            raise ValueError(f"counts sum to {self.k.sum()}, expected N = {self.N}")


def simulate_counts(p, state, N, seed, index=0, mode=SINGLE):
    """Multinomial counts for protocol p and a true state, N shots total.

    Deterministic for fixed (seed, index).
    """
    if N < 1:
        raise ValueError(f"need at least one shot, got N = {N}")
    lam = measurement_probs(p, state)
    g = stream(seed, COUNTS, index)
    if mode == SINGLE:
        k = g.multinomial(N, lam / lam.sum())
    elif mode == PER_BLOCK:
        if not p.blocks:
            raise ValueError("per-block sampling requires a protocol with blocks")
        k = np.zeros(p.m, dtype=np.int64)
        nb = len(p.blocks)
        base, extra = divmod(N, nb)
        for bi, block in enumerate(p.blocks):
            shots = base + (1 if bi < extra else 0)
            pb = lam[block]
            if shots:
                k[block] = g.multinomial(shots, pb / pb.sum())
    else:
        raise ValueError(f"unknown sampling mode {mode!r}")
    return CountsRecord(p.name, N, k, seed=seed, mode=mode)


def empirical_frequencies(c):
    """Observed frequencies k_j / N."""
    return c.k / c.N


def counts_to_csv(c):
    """One CSV line: protocol,N,seed,k_1,...,k_m."""
    seed = "" if c.seed is None else c.seed
    return ",".join([c.protocol, str(c.N), str(seed)] + [str(int(x)) for x in c.k])


def counts_from_csv(line):
    parts = line.strip().split(",")
    seed = None if parts[2] == "" else int(parts[2])
    return CountsRecord(parts[0], int(parts[1]), np.array(parts[3:], dtype=np.int64), seed=seed)


def counts_to_json(c):
    return json.dumps(
        {"protocol": c.protocol, "N": c.N, "seed": c.seed, "mode": c.mode,
         "k": [int(x) for x in c.k]}
    )


def counts_from_json(text):
    doc = json.loads(text)
    return CountsRecord(doc["protocol"], doc["N"], np.array(doc["k"], dtype=np.int64),
                        seed=doc.get("seed"), mode=doc.get("mode", SINGLE))
