"""Counter-based random streams.

A stream is the pair (seed, counter). Scalar draws hash the pair with a
splitmix64 finalizer, so the value depends only on the pair and never on
call order or on which worker evaluates it. Bulk array draws go through
NumPy's Philox generator keyed by the same pair.
"""

import math
from typing import Tuple

import numpy as np

from sonoforge.domain.entities import UINT64_MASK, RngStream
from sonoforge.domain.exceptions import ValidationError

GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(value: int) -> int:
    z = (value + GOLDEN_GAMMA) & UINT64_MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & UINT64_MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & UINT64_MASK
    return z ^ (z >> 31)


def _bits(stream: RngStream) -> int:
    return splitmix64(splitmix64(stream.seed) ^ stream.counter)


def advance(stream: RngStream, steps: int = 1) -> RngStream:
    return RngStream(seed=stream.seed, counter=(stream.counter + steps) & UINT64_MASK)


def rng_uniform(stream: RngStream, lo: float, hi: float) -> Tuple[float, RngStream]:
    """Draw from [lo, hi) and return the value with the advanced stream."""
    if lo > hi:
        raise ValidationError(f"Empty interval: lo={lo} > hi={hi}")

    next_stream = advance(stream)
    if lo == hi:
        return float(lo), next_stream

    unit = (_bits(stream) >> 11) * 2.0**-53
    value = lo + (hi - lo) * unit
    if value >= hi:
        value = math.nextafter(hi, lo)
    return float(value), next_stream


def rng_integer(stream: RngStream, lo: int, hi: int) -> Tuple[int, RngStream]:
    """Draw an integer from the inclusive range [lo, hi]."""
    if lo > hi:
        raise ValidationError(f"Empty interval: lo={lo} > hi={hi}")

    unit, next_stream = rng_uniform(stream, 0.0, 1.0)
    return min(hi, lo + int(math.floor(unit * (hi - lo + 1)))), next_stream


def fork(stream: RngStream, index: int) -> RngStream:
    """Child stream for sub-task `index`; children of one parent never share a seed."""
    if index < 0:
        raise ValidationError(f"Fork index must be >= 0, got {index}")

    parent = splitmix64(stream.seed ^ splitmix64(stream.counter))
    return RngStream(seed=splitmix64((parent + (index & UINT64_MASK)) & UINT64_MASK), counter=0)


def spawn_generator(stream: RngStream) -> np.random.Generator:
    # Philox counter is 256 bits; the stream counter sits in the high words.
    bit_generator = np.random.Philox(key=stream.seed, counter=stream.counter << 128)
    return np.random.Generator(bit_generator)


def derive_seed(global_seed: int, pattern_id: str, copy: int, op: int) -> RngStream:
    """Stream keyed by (global seed, pattern id, copy index, op index)."""
    encoded = pattern_id.encode("utf-8")
    h = splitmix64(global_seed & UINT64_MASK)
    h = splitmix64(h ^ len(encoded))
    for byte in encoded:
        h = splitmix64(h ^ byte)
    h = splitmix64(h ^ (copy & UINT64_MASK))
    h = splitmix64(h ^ (op & UINT64_MASK))
    return RngStream(seed=h, counter=0)
