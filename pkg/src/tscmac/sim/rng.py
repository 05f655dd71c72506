"""Named, independent random streams split from one master seed."""

import numpy as np

_STREAMS = {
    "topology": 1,
    "radios": 2,
    "flows": 3,
    "backoff": 4,
    "crus": 5,
    "psm": 6,
    "coloring": 7,
    "traffic": 8,
}


def stream(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng([int(seed), _STREAMS[name]])


def subseed(seed: int, name: str) -> int:
    return int(stream(seed, name).integers(2 ** 31))
