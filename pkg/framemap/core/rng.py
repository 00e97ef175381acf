"""
Seeded random streams.

Every stochastic draw in framemap comes from a NumPy ``Generator(PCG64)`` derived
from the run seed and a stream name, e.g. ``make_rng(seed, "world", "sensor")``.
Streams with different names are statistically independent and replay
identically on every platform.
"""
import zlib
from typing import Union

import numpy as np

SEED_MAX = 2 ** 64 - 1

StreamKey = Union[str, int]


def _stream_word(key: StreamKey) -> int:
    if isinstance(key, int):
        if key < 0:
            raise ValueError("stream index must be non-negative, got %d" % key)
        return key
    return zlib.crc32(key.encode("utf-8"))


def check_seed(seed: int) -> int:
    """Return seed as int; raise ValueError unless it is a 64-bit unsigned value."""
    seed = int(seed)
    if seed < 0 or seed > SEED_MAX:
        raise ValueError("seed must be in [0, 2**64 - 1], got %d" % seed)
    return seed


def make_seed_sequence(seed: int, *stream: StreamKey) -> np.random.SeedSequence:
    return np.random.SeedSequence(check_seed(seed), spawn_key=tuple(_stream_word(k) for k in stream))


def make_rng(seed: int, *stream: StreamKey) -> np.random.Generator:
    """
    Return a PCG64 generator for the named sub-stream of ``seed``.

    Example::

        rng = make_rng(7, "filter", "stir_cup", 3)
    """
    return np.random.Generator(np.random.PCG64(make_seed_sequence(seed, *stream)))


def derive_seed(seed: int, *stream: StreamKey) -> int:
    """A 64-bit child seed, for handing a stream to a component that takes an int seed."""
    state = make_seed_sequence(seed, *stream).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 32) | int(state[1])


def as_generator(seed_or_rng: Union[int, np.random.Generator], *stream: StreamKey) -> np.random.Generator:
    """Pass a Generator through; turn an int seed into the named sub-stream."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return make_rng(seed_or_rng, *stream)
