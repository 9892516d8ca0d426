"""Deterministic RNG substreams derived from one master seed.

Every random draw in the package comes from a named substream so that
enabling or disabling one subsystem (mobility, fading, sampling, policy)
never shifts the draws of another, and per-entity streams make results
independent of scheduling order.
"""

from __future__ import annotations

import numpy as np

# Substream identifiers; values are part of the reproducibility contract.
STREAM_INIT = 0
STREAM_MOBILITY = 1
STREAM_FADING = 2
STREAM_SAMPLING = 3
STREAM_POLICY = 4
STREAM_EXPORT = 5


def substream(master_seed: int, stream: int, *keys: int) -> np.random.Generator:
    """Generator for (master_seed, stream, *keys); same tuple, same stream."""
    entropy = (int(master_seed), int(stream)) + tuple(int(k) for k in keys)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
