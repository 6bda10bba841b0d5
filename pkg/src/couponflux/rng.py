"""Counter-based random streams.

Every Monte Carlo sample gets its own stream keyed by ``(seed, index)``, so a
batch split across any number of workers draws exactly the same numbers as a
serial run. The generator is SplitMix64 evaluated at a counter: output ``k`` of
stream ``(seed, index)`` is ``mix64(key + (k + 1) * GAMMA)`` where ``key`` is a
hash of the pair. The compiled kernels implement the identical arithmetic.
"""

import os

MASK64 = 0xFFFFFFFFFFFFFFFF
GAMMA = 0x9E3779B97F4A7C15
INDEX_SALT = 0xD1B54A32D192ED03
DOUBLE_UNIT = 1.0 / 9007199254740992.0  # 2**-53

DEFAULT_SEED = 0x5EED_C0110_7


def mix64(z):
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_key(seed, index):
    """Key of the stream for sample ``index`` under master ``seed``."""
    return mix64(mix64(seed & MASK64) ^ ((index * INDEX_SALT) & MASK64))


def derive_seed(seed, index):
    """Child seed for a sub-experiment (e.g. one sweep grid point)."""
    return mix64(stream_key(seed, index) + GAMMA)


class CounterStream:
    """Pure-Python view of one counter stream; mirrors the compiled version."""

    __slots__ = ("key", "counter")

    def __init__(self, seed, index):
        self.key = stream_key(seed, index)
        self.counter = 0

    def next_u64(self):
        self.counter += 1
        return mix64(self.key + self.counter * GAMMA)

    def next_double(self):
        """Uniform double on [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * DOUBLE_UNIT


def uniforms(seed, indices):
    """First uniform of each stream, used by samplers that need one draw."""
    return [CounterStream(seed, int(i)).next_double() for i in indices]


def resolve_threads(threads=None):
    """Worker count from the argument, then COUPONFLUX_THREADS, then 1."""
    if threads is None:
        env = os.environ.get("COUPONFLUX_THREADS")
        threads = int(env) if env else 1
    threads = int(threads)
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    return threads
