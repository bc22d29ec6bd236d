"""Counter-based deterministic random streams.

Dropout masks are drawn from a splitmix64 stream so that results are
reproducible bit-for-bit across platforms, kernel backends, and any
parallel execution schedule.  The stream is stateless: the value at
global index ``j`` (0-based) of the stream with seed ``s`` is::

    u_j = finalize(s + (j + 1) * GAMMA) >> 11) * 2**-53        in [0, 1)

where ``finalize`` is the splitmix64 output mixer and all arithmetic is
modulo 2**64.  Consumers read values in row-major order of the array
being filled, so "position" alone determines every mask.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

_U_GAMMA = np.uint64(GAMMA)
_U_M1 = np.uint64(_M1)
_U_M2 = np.uint64(_M2)
_TO_UNIT = 1.0 / 9007199254740992.0  # 2**-53


def mix64(z: int) -> int:
    """Splitmix64 output mixer on a 64-bit integer."""
    z &= MASK64
    z ^= z >> 30
    z = (z * _M1) & MASK64
    z ^= z >> 27
    z = (z * _M2) & MASK64
    return z ^ (z >> 31)


def child_seed(base_seed: int, k: int) -> int:
    """Seed for Monte-Carlo sample ``k``: the k-th splitmix64 state output.

    Stateless, so samples can be generated in any order or in parallel
    without changing the result.
    """
    return mix64((base_seed + (k + 1) * GAMMA) & MASK64)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _U_M1
    z = (z ^ (z >> np.uint64(27))) * _U_M2
    return z ^ (z >> np.uint64(31))


def uniforms_at(seed: int, start: int, n: int) -> np.ndarray:
    """Values start..start+n-1 of the unit-interval stream for ``seed``."""
    idx = np.arange(1, n + 1, dtype=np.uint64) + np.uint64(start & MASK64)
    z = np.uint64(seed & MASK64) + idx * _U_GAMMA
    return (_mix64_array(z) >> np.uint64(11)).astype(np.float64) * _TO_UNIT


class SplitMix64:
    """Seeded generator over [0, 1) with an explicit consumption position.

    ``uniforms(shape)`` fills arrays in row-major order and advances the
    position by the array size, which is the documented order in which
    dropout consumes randomness.
    """

    __slots__ = ("seed", "position")

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self.position = 0

    def advance(self, n: int) -> int:
        """Consume ``n`` values; returns the position they started at."""
        start = self.position
        self.position = start + n
        return start

    def uniforms(self, shape) -> np.ndarray:
        n = int(np.prod(shape, dtype=np.int64)) if not np.isscalar(shape) else int(shape)
        start = self.advance(n)
        out = uniforms_at(self.seed, start, n)
        return out if np.isscalar(shape) else out.reshape(shape)
