"""Deterministic seed derivation.

Every stochastic component derives its own seed from a master seed plus a
path of string/int keys, so that any sub-computation can be reproduced in
isolation and parallel schedules cannot change results.
"""

import hashlib

import numpy as np


def derive_seed(master, *keys):
    """Derive a 64-bit seed from a master seed and a key path.

    Stable across runs, platforms and Python versions (SHA-256 based,
    no use of ``hash()``).
    """
    h = hashlib.sha256()
    h.update(str(int(master)).encode("ascii"))
    for key in keys:
        h.update(b"/")
        h.update(str(key).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "little")


def rng_for(master, *keys):
    """A numpy Generator seeded via :func:`derive_seed`."""
    return np.random.default_rng(derive_seed(master, *keys))
