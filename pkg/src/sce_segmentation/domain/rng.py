from __future__ import annotations

import numpy as np

# Stream tags keep independent consumers of one seed apart.
STREAM_INIT = 0
STREAM_SAMPLE = 1
STREAM_JOIN = 2
STREAM_SYNTH = 3


def derive_seed(master_seed: int, index: int) -> int:
    """64-bit child seed for ensemble member `index`; independent of scheduling order."""
    state = np.random.SeedSequence([master_seed, index]).generate_state(1, dtype=np.uint64)
    return int(state[0])


def make_rng(seed: int, stream: int = STREAM_INIT) -> np.random.Generator:
    """Counter-based (Philox) generator for one `stream` of a seed."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream])))
