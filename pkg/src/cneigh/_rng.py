"""Splittable random streams keyed by integer paths.

Streams derived from the same ``(seed, *path)`` key are identical; distinct
keys give statistically independent generators, so loops over replications or
subsamples can run in any order (or in parallel) without changing results.
"""

import numpy as np

# role identifiers for experiment streams
DESIGN, PATH, NOISE, SUBSAMPLE = 0, 1, 2, 3


def derive_rng(seed, *path):
    """Generator for the stream keyed by ``(seed, *path)``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, path)]))


def derive_seed(seed, *path):
    """Stable 63-bit child seed for handing to another component."""
    ss = np.random.SeedSequence([int(seed), *map(int, path)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)
