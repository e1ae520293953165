"""Counter-style random substreams keyed by (seed, index path).

Every stochastic routine in the package derives its randomness through
`substream`, so results depend only on the seed and the logical trial
index, never on scheduling or worker count.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the stream addressed by (seed, *key)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


def child_seed(seed: int, *key: int) -> int:
    """A derived 64-bit seed, for passing to routines that take plain ints."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])
