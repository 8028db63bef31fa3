"""Deterministic RNG derivation.

Every randomized stage (map generation, start sampling, control
initialization, trials) derives its generator from a master seed plus a
string label, so runs are reproducible and independent stages never share
a stream.
"""

import hashlib

import numpy as np


def seed_for(*parts) -> int:
    """Stable 64-bit seed from arbitrary labels (ints, strings)."""
    s = "|".join(map(str, parts)).encode("utf-8")
    return int(hashlib.sha256(s).hexdigest()[:16], 16)


def rng_for(*parts) -> np.random.Generator:
    """Fresh generator keyed by the given labels."""
    return np.random.default_rng(seed_for(*parts))
