"""Kernel backend selection and shape-handling wrappers.

The compiled extension (``_core``) is preferred when importable; the
NumPy fallback (``_numpy``) is otherwise selected transparently.  Set
MCDF_KERNELS=numpy or MCDF_KERNELS=cython to force a backend (cython
raises if the extension is missing).  Both backends draw bit-identical
dropout masks; see ``benchmarks/bench_kernels.py`` for a comparison.
"""

from __future__ import annotations

import os

import numpy as np

_choice = os.environ.get("MCDF_KERNELS", "auto").lower()
if _choice not in {"auto", "cython", "numpy"}:
    raise ValueError(f"MCDF_KERNELS must be auto|cython|numpy, got {_choice!r}")

if _choice == "numpy":
    from mcdf._kernels import _numpy as _impl
elif _choice == "cython":
    from mcdf._kernels import _core as _impl  # type: ignore[no-redef]
else:
    try:
        from mcdf._kernels import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        from mcdf._kernels import _numpy as _impl

FNV_OFFSET = _impl.FNV_OFFSET


def backend() -> str:
    """Name of the active kernel backend ('cython' or 'numpy')."""
    return _impl.BACKEND


def _rows(x: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(x, dtype=np.float64).reshape(-1, x.shape[-1])


def layer_norm(x: np.ndarray, gain: np.ndarray, bias: np.ndarray, eps: float) -> np.ndarray:
    """Layer norm over the last axis of ``x``."""
    out = _impl.layer_norm2d(_rows(x), gain, bias, eps)
    return out.reshape(x.shape)


def gelu(x: np.ndarray) -> np.ndarray:
    """Exact (erf-based) GELU, elementwise."""
    flat = np.ascontiguousarray(x, dtype=np.float64).reshape(-1)
    return _impl.gelu1d(flat).reshape(x.shape)


def softmax_lastdim(x: np.ndarray) -> np.ndarray:
    """Row softmax over the last axis; -inf entries get zero probability."""
    return _impl.softmax2d(_rows(x)).reshape(x.shape)


def log_softmax_lastdim(x: np.ndarray) -> np.ndarray:
    """Stable (max-subtracted) log softmax over the last axis."""
    return _impl.log_softmax2d(_rows(x)).reshape(x.shape)


def uniforms(seed: int, start: int, shape) -> np.ndarray:
    """Stream values start..start+size-1, reshaped row-major."""
    shape = tuple(np.atleast_1d(shape)) if not isinstance(shape, tuple) else shape
    n = int(np.prod(shape, dtype=np.int64))
    return _impl.uniforms1d(seed, start, n).reshape(shape)


def keep_scale(rate: float, seed: int, start: int, shape) -> np.ndarray:
    """Inverted-dropout scale factors: 1/(1-rate) where kept, else 0."""
    shape = tuple(np.atleast_1d(shape)) if not isinstance(shape, tuple) else shape
    n = int(np.prod(shape, dtype=np.int64))
    return _impl.keep_scale1d(rate, seed, start, n).reshape(shape)


def dropout(x: np.ndarray, rate: float, seed: int, start: int) -> np.ndarray:
    """Fused inverted dropout consuming the stream in row-major order."""
    flat = np.ascontiguousarray(x, dtype=np.float64).reshape(-1)
    return _impl.dropout1d(flat, rate, seed, start).reshape(x.shape)


def fnv1a64(data, h: int | None = None) -> int:
    """64-bit FNV-1a over a bytes-like object, optionally chained via ``h``."""
    return _impl.fnv1a64(data, FNV_OFFSET if h is None else h)
