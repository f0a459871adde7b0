"""Seeded, labelled random streams.

Every stochastic step draws from a Philox counter-based generator whose key
is derived from ``(master seed, *labels)``, so independent parts of a run
(rounding, burning, probing, instance generation) never share a stream.
"""
import zlib

import numpy as np


def _label_key(label):
    if isinstance(label, (int, np.integer)):
        return int(label)
    return zlib.crc32(str(label).encode("utf-8"))


def make_rng(seed, *labels):
    """Return a ``numpy.random.Generator`` for the labelled sub-stream."""
    if seed is None:
        raise ValueError("an explicit integer seed is required")
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [_label_key(x) for x in labels]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))
