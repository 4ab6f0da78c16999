"""Counter-based random streams.

Every stream is keyed by a tuple of non-negative integers (for example
``(seed, tentacle)`` or ``(master, cell, trial)``) through
:class:`numpy.random.SeedSequence` and drives a Philox generator, so adding a
tentacle or a trial never shifts the numbers drawn by another key.
"""

import numpy as np

SEED_BITS = 2**64


def stream(seed, *key):
    """Independent generator for ``seed`` and an integer key path."""
    ss = np.random.SeedSequence(int(seed) % SEED_BITS, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed, *key):
    """64-bit child seed, used to hand a trial its own master seed."""
    ss = np.random.SeedSequence(int(seed) % SEED_BITS, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])
