"""Named, counter-based random substreams derived from one master seed."""

import numpy as np

STREAMS = {
    "graph": 0,
    "mc": 1,
    "multistart": 2,
    "approximant": 3,
    "verify": 4,
}


def generator(seed: int, stream: str, *index: int) -> np.random.Generator:
    """Return the generator for one substream of the master seed.

    The key (seed, stream, index...) fully determines the stream, so work can be split
    across workers in any order without changing the draws.

    Args:
        seed (int): Master seed (64-bit).
        stream (str): Registered stream name.
        *index (int): Nonnegative counters, e.g. node index or trial chunk.

    Returns:
        np.random.Generator: Philox-backed generator.

    Raises:
        KeyError: If the stream name is unknown.
    """
    spawn_key = (STREAMS[stream],) + tuple(int(i) for i in index)
    sequence = np.random.SeedSequence(int(seed) % (1 << 64), spawn_key=spawn_key)
    return np.random.Generator(np.random.Philox(sequence))
