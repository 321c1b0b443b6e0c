"""Reproducible random streams.

Every random quantity in a simulation is drawn from a stream addressed by
``(master_seed, *key)``. The key is turned into a ``SeedSequence`` spawn key,
so two streams with different keys are statistically independent and a
stream never depends on the order in which other streams were created. This
is what makes replicate results independent of the number of workers.
"""

import zlib

import numpy as np

# Sub-stream tags appended to replicate keys.
DATA = 0
ASSIGN = 1
BOOTSTRAP = 2


def label_code(label):
    """Stable non-negative integer for a string label (crc32)."""
    return zlib.crc32(str(label).encode("utf-8"))


def _key_part(part):
    if isinstance(part, str):
        return label_code(part)
    part = int(part)
    if part < 0:
        raise ValueError(f"stream key parts must be non-negative, got {part}")
    return part


def seed_sequence(master_seed, *key):
    return np.random.SeedSequence(int(master_seed), spawn_key=tuple(_key_part(k) for k in key))


def stream(master_seed, *key):
    """Independent ``numpy.random.Generator`` addressed by ``(master_seed, *key)``.

    >>> a = stream(7, "case1", 0, 3).random()
    >>> a == stream(7, "case1", 0, 3).random()
    True
    """
    return np.random.Generator(np.random.PCG64(seed_sequence(master_seed, *key)))
