"""Seeded random substreams.

Every stochastic routine in the package takes either an explicit
``numpy.random.Generator`` or a run seed from which it derives named
substreams.  Substreams are independent by construction (SeedSequence
spawn keys), so results never depend on evaluation order or thread count.
"""

import zlib

import numpy as np


def _key(part) -> int:
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFF
    return zlib.crc32(str(part).encode())


def substream(seed: int, *path) -> np.random.Generator:
    """Deterministic generator for (seed, path).

    `path` components may be ints or short strings, e.g.
    ``substream(7, "train", step, "masks")``.
    """
    ss = np.random.SeedSequence(seed, spawn_key=tuple(_key(p) for p in path))
    return np.random.default_rng(ss)
