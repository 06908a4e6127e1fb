"""Deterministic seed derivation.

Every random stream in the package is a ``numpy.random.Generator`` over
``PCG64``, seeded with a 64-bit integer obtained by mixing a base seed and a
stream index through the SplitMix64 finalizer::

    z = (base + (stream + 1) * 0x9E3779B97F4A7C15) mod 2**64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 mod 2**64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB mod 2**64
    z =  z ^ (z >> 31)

Streams are therefore independent of scheduling order (a forest can build
trees on any number of threads and get identical trees).
"""

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    z = x & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(base: int, stream: int) -> int:
    """64-bit seed for stream ``stream`` of base seed ``base``."""
    return splitmix64((int(base) + (int(stream) + 1) * _GOLDEN) & _MASK)


def make_rng(base: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(base, stream)))


# Named stream indices, kept in one place so no two consumers collide.
STREAM_SPLIT = 0
STREAM_META_SPLIT = 1
STREAM_NN_INIT = 2
STREAM_NN_SHUFFLE = 3
STREAM_SYNTH = 4
