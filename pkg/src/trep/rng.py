"""Deterministic random-number streams derived from a single master seed.

Every stochastic routine in the package draws from a named substream so that
results are reproducible run-to-run and independent of execution order (in
particular, parallel trials must not share a stream).
"""

from __future__ import annotations

import zlib

import numpy as np


def substream(seed: int, *path: int | str) -> np.random.Generator:
    """Return an independent generator for the given seed and stream path.

    Integer path components are used as-is; strings are hashed (CRC-32) into
    32-bit keys.  Two calls with the same (seed, path) always produce the same
    stream; distinct paths produce statistically independent streams.
    """
    keys: list[int] = []
    for part in (seed, *path):
        if isinstance(part, str):
            keys.append(zlib.crc32(part.encode("utf-8")))
        else:
            value = int(part)
            if value < 0:
                raise ValueError(f"stream path components must be non-negative, got {value}")
            keys.append(value)
    return np.random.default_rng(np.random.SeedSequence(keys))
