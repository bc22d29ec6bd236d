"""Pure NumPy implementations of the hot kernels.

Fallback used when the compiled extension is unavailable.  Semantics
match ``_core.pyx``: dropout masks and stream values are bit-identical
across backends; float reductions (layer norm, softmax) may differ by a
few ulp because the two backends accumulate in different orders.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf

from mcdf.rng import uniforms_at

BACKEND = "numpy"

_SQRT1_2 = 1.0 / np.sqrt(2.0)

FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def layer_norm2d(x: np.ndarray, gain: np.ndarray, bias: np.ndarray, eps: float) -> np.ndarray:
    mean = x.mean(axis=1, keepdims=True)
    centered = x - mean
    var = np.mean(centered * centered, axis=1, keepdims=True)
    return centered / np.sqrt(var + eps) * gain + bias


def gelu1d(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + erf(x * _SQRT1_2))


def softmax2d(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def log_softmax2d(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    return shifted - lse


def uniforms1d(seed: int, start: int, n: int) -> np.ndarray:
    return uniforms_at(seed, start, n)


def keep_scale1d(rate: float, seed: int, start: int, n: int) -> np.ndarray:
    scale = 1.0 / (1.0 - rate)
    u = uniforms_at(seed, start, n)
    return np.where(u >= rate, scale, 0.0)


def dropout1d(x: np.ndarray, rate: float, seed: int, start: int) -> np.ndarray:
    scale = 1.0 / (1.0 - rate)
    u = uniforms_at(seed, start, x.shape[0])
    return np.where(u >= rate, x * scale, 0.0)


def fnv1a64(data, h: int = FNV_OFFSET) -> int:
    """FNV-1a over bytes; slow reference loop, the extension is ~100x faster."""
    for b in bytes(data):
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h
