"""Seeded random streams.

Every consumer of randomness asks for a generator by ``(seed, name)``. The
name is hashed (CRC32) into the ``spawn_key`` of a :class:`numpy.random.SeedSequence`,
so each consumer gets an independent PCG64 stream derived from one root seed.
Adding or reordering consumers never shifts another consumer's draws.
"""

import zlib

import numpy as np


def stream(seed, name=""):
    """Return a PCG64 generator for consumer ``name`` under root ``seed``."""
    if seed is None:
        raise ValueError("an explicit integer seed is required")
    seed = int(seed)
    if seed < 0:
        raise ValueError(f"seed must be non-negative, got {seed}")
    key = (zlib.crc32(name.encode("utf-8")),) if name else ()
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))
