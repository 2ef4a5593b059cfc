"""Deterministic random-stream derivation.

Every generator in this package is derived from a single 64-bit user seed by

    Generator(PCG64(SeedSequence(entropy=seed, spawn_key=key)))

where ``key`` is a tuple of small integers identifying the role of the
stream (e.g. arrivals vs. service draws) and, for fanned-out replications,
the replication index.  Two streams with different keys are statistically
independent; the same ``(seed, key)`` always reproduces the same draws.
"""

from __future__ import annotations

import numpy as np

__all__ = ["stream"]


def stream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for ``(seed, key)`` under the package-wide rule."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))
