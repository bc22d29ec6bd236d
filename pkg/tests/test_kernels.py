"""Compiled and NumPy kernels must agree: exactly for mask generation
and hashing, to tight float tolerance for the transcendental kernels.
High-precision references come from mpmath, not from either backend."""

import math

import mpmath
import numpy as np
import pytest

from mcdf import _kernels as kernels
from mcdf._kernels import _numpy

try:
    from mcdf._kernels import _core
except ImportError:  # pragma: no cover - compiled extension not built
    _core = None

BACKENDS = [_numpy] + ([_core] if _core is not None else [])

mpmath.mp.dps = 50


def _rand(shape, seed=0):
    return np.random.default_rng(seed).standard_normal(shape)


def test_extension_is_built_and_selected():
    assert _core is not None, "compiled kernel extension missing"
    assert kernels.backend() in ("cython", "numpy")


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.BACKEND)
def test_layer_norm_against_mpmath(impl):
    x = _rand((3, 5), seed=1)
    gain = _rand(5, seed=2) + 2.0
    bias = _rand(5, seed=3)
    eps = 1e-5
    got = impl.layer_norm2d(x, gain, bias, eps)
    for i in range(3):
        row = [mpmath.mpf(v) for v in x[i]]
        mean = mpmath.fsum(row) / 5
        var = mpmath.fsum((v - mean) ** 2 for v in row) / 5
        inv = 1 / mpmath.sqrt(var + mpmath.mpf(eps))
        for j in range(5):
            ref = (mpmath.mpf(x[i, j]) - mean) * inv * mpmath.mpf(gain[j]) + mpmath.mpf(bias[j])
            assert abs(got[i, j] - float(ref)) < 1e-13


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.BACKEND)
def test_gelu_against_mpmath(impl):
    x = np.array([-5.0, -1.0, -0.1, 0.0, 0.1, 1.0, 5.0])
    got = impl.gelu1d(x)
    for v, g in zip(x, got):
        ref = mpmath.mpf(v) * 0.5 * (1 + mpmath.erf(mpmath.mpf(v) / mpmath.sqrt(2)))
        assert abs(g - float(ref)) < 1e-15
    assert got[3] == 0.0


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.BACKEND)
def test_softmax_and_log_softmax_against_mpmath(impl):
    x = _rand((4, 7), seed=4) * 10.0
    soft = impl.softmax2d(x)
    logsoft = impl.log_softmax2d(x)
    for i in range(4):
        exps = [mpmath.e ** mpmath.mpf(v) for v in x[i]]
        total = mpmath.fsum(exps)
        for j in range(7):
            assert abs(soft[i, j] - float(exps[j] / total)) < 1e-15
            assert abs(logsoft[i, j] - float(mpmath.log(exps[j] / total))) < 1e-12
    assert np.allclose(soft.sum(axis=1), 1.0, atol=1e-12)


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.BACKEND)
def test_log_softmax_shift_invariance_and_stability(impl):
    x = _rand((2, 9), seed=5)
    shifted = impl.log_softmax2d(x + 1000.0)
    base = impl.log_softmax2d(x)
    assert np.allclose(shifted, base, atol=1e-9)
    huge = impl.log_softmax2d(np.array([[1e300, 0.0, -1e300]]))
    assert np.all(np.isfinite(huge[0][:2]))


def test_softmax_handles_minus_inf_columns():
    x = np.array([[0.0, -np.inf, 1.0]])
    soft = kernels.softmax_lastdim(x)
    assert soft[0, 1] == 0.0
    assert abs(soft[0].sum() - 1.0) < 1e-15


@pytest.mark.skipif(_core is None, reason="compiled extension missing")
def test_backends_agree_on_float_kernels():
    x = _rand((6, 33), seed=6)
    gain = _rand(33, seed=7)
    bias = _rand(33, seed=8)
    assert np.allclose(
        _numpy.layer_norm2d(x, gain, bias, 1e-5),
        _core.layer_norm2d(x, gain, bias, 1e-5),
        atol=1e-12,
    )
    flat = x.reshape(-1)
    assert np.allclose(_numpy.gelu1d(flat), _core.gelu1d(flat), atol=1e-15)
    assert np.allclose(_numpy.softmax2d(x), _core.softmax2d(x), atol=1e-15)
    assert np.allclose(_numpy.log_softmax2d(x), _core.log_softmax2d(x), atol=1e-13)


@pytest.mark.skipif(_core is None, reason="compiled extension missing")
def test_backends_bit_identical_on_masks():
    for rate in (0.05, 0.1, 0.5, 0.9):
        a = _numpy.keep_scale1d(rate, 31337, 11, 4096)
        b = _core.keep_scale1d(rate, 31337, 11, 4096)
        assert np.array_equal(a, b)
    x = _rand(4096, seed=9)
    a = _numpy.dropout1d(x, 0.25, 99, 0)
    b = _core.dropout1d(x, 0.25, 99, 0)
    assert np.array_equal(a, b)
    assert np.array_equal(_numpy.uniforms1d(5, 0, 100), _core.uniforms1d(5, 0, 100))


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.BACKEND)
def test_keep_scale_values_and_rate(impl):
    rate = 0.3
    scale = impl.keep_scale1d(rate, 123, 0, 100_000)
    kept = scale != 0.0
    assert np.all(np.unique(scale) == np.unique([0.0, 1.0 / 0.7]))
    assert abs(kept.mean() - 0.7) < 0.01


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.BACKEND)
def test_dropout_matches_keep_scale(impl):
    x = _rand(512, seed=10)
    fused = impl.dropout1d(x, 0.4, 7, 3)
    scale = impl.keep_scale1d(0.4, 7, 3, 512)
    assert np.allclose(fused, x * scale, atol=0.0)
    none = impl.dropout1d(x, 0.0, 7, 3)
    assert np.array_equal(none, x)


# Published FNV-1a 64 reference values.
FNV_VECTORS = [
    (b"", 0xCBF29CE484222325),
    (b"a", 0xAF63DC4C8601EC8C),
    (b"foobar", 0x85944171F73967E8),
]


def _fnv_reference(data, h=0xCBF29CE484222325):
    for byte in bytes(data):
        h = ((h ^ byte) * 0x100000001B3) & ((1 << 64) - 1)
    return h


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.BACKEND)
def test_fnv1a64_reference_vectors(impl):
    for data, expected in FNV_VECTORS:
        assert impl.fnv1a64(data, kernels.FNV_OFFSET) == expected


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.BACKEND)
def test_fnv1a64_random_and_chained(impl):
    blob = np.random.default_rng(11).integers(0, 256, size=4096).astype(np.uint8).tobytes()
    assert impl.fnv1a64(blob, kernels.FNV_OFFSET) == _fnv_reference(blob)
    split = impl.fnv1a64(blob[2000:], impl.fnv1a64(blob[:2000], kernels.FNV_OFFSET))
    assert split == _fnv_reference(blob)


def test_wrappers_preserve_shapes():
    x = _rand((2, 3, 5), seed=12)
    assert kernels.gelu(x).shape == (2, 3, 5)
    assert kernels.softmax_lastdim(x).shape == (2, 3, 5)
    assert kernels.log_softmax_lastdim(x).shape == (2, 3, 5)
    gain = np.ones(5)
    bias = np.zeros(5)
    assert kernels.layer_norm(x, gain, bias, 1e-5).shape == (2, 3, 5)
    assert kernels.uniforms(1, 0, (3, 4)).shape == (3, 4)
    assert kernels.dropout(x, 0.5, 1, 0).shape == (2, 3, 5)
    assert math.isclose(
        kernels.softmax_lastdim(x).sum(), 6.0, abs_tol=1e-12
    )
