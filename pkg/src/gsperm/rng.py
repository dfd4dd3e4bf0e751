"""Keyed random streams.

Every stream is a Philox (counter-based) generator whose key is derived from
``SeedSequence(seed, spawn_key=key)``. A draw therefore depends only on the
seed and its key tuple, never on the order in which streams are created or on
which worker creates them.
"""

import numpy as np

# First key component, separating independent uses of one seed.
DATA = 0
PERMUTATION = 1


def stream(seed, *key):
    """Generator for ``(seed, key)``; ``key`` is a tuple of non-negative ints."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))
