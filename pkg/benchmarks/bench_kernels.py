#!/usr/bin/env python3
"""Compare the compiled kernel backend against the NumPy fallback.

Micro-benchmarks call both backend modules directly and check that the
outputs agree before timing.  The end-to-end benchmark re-runs a full
Monte-Carlo scoring pass in a subprocess with MCDF_KERNELS forced,
because the backend is fixed at import time.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from mcdf._kernels import _numpy

try:
    from mcdf._kernels import _core
except ImportError:
    _core = None


def _best_of(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def _micro_cases():
    rng = np.random.default_rng(0)
    x2d = rng.normal(size=(4096, 64))
    gain = rng.normal(size=64)
    bias = rng.normal(size=64)
    logits = rng.normal(size=(4096, 27)) * 4.0
    flat = np.ascontiguousarray(rng.normal(size=1 << 20))
    blob = rng.integers(0, 256, size=1 << 23, dtype=np.uint8).tobytes()
    return [
        ("layer_norm2d", lambda m: m.layer_norm2d(x2d, gain, bias, 1e-5)),
        ("gelu1d", lambda m: m.gelu1d(flat)),
        ("softmax2d", lambda m: m.softmax2d(logits)),
        ("log_softmax2d", lambda m: m.log_softmax2d(logits)),
        ("uniforms1d", lambda m: m.uniforms1d(9, 0, 1 << 20)),
        ("keep_scale1d", lambda m: m.keep_scale1d(0.1, 9, 0, 1 << 20)),
        ("dropout1d", lambda m: m.dropout1d(flat, 0.1, 9, 0)),
        ("fnv1a64", lambda m: m.fnv1a64(blob, m.FNV_OFFSET)),
    ]


def run_micro(repeats: int) -> None:
    print(f"{'kernel':<16}{'numpy':>12}{'cython':>12}{'speedup':>10}")
    for name, call in _micro_cases():
        ref = call(_numpy)
        t_numpy = _best_of(lambda: call(_numpy), repeats)
        if _core is None:
            print(f"{name:<16}{t_numpy * 1e3:>10.2f}ms{'-':>12}{'-':>10}")
            continue
        got = call(_core)
        if name in ("uniforms1d", "keep_scale1d", "dropout1d"):
            assert np.array_equal(ref, got), name
        elif name == "fnv1a64":
            assert ref == got, name
        else:
            assert np.allclose(ref, got, rtol=0, atol=1e-12), name
        t_core = _best_of(lambda: call(_core), repeats)
        print(f"{name:<16}{t_numpy * 1e3:>10.2f}ms{t_core * 1e3:>10.2f}ms"
              f"{t_numpy / t_core:>9.1f}x")


_E2E_SNIPPET = """
import time
from mcdf import backend
from mcdf.inference import InjectionPlan, MCConfig, score_sequence
from mcdf.model import ModelConfig, init_random
from mcdf.vocab import encode

params = init_random(ModelConfig(), 0)
tokens = encode("MKTAYIAKQRQISFVKSHFSRQLEERLGLIEVQ" * 3)
plan = InjectionPlan(0.1, 0.5)
start = time.perf_counter()
value = score_sequence(params, tokens, plan, MCConfig(48, 0))
print(backend(), time.perf_counter() - start, repr(value))
"""


def run_e2e() -> None:
    rows = []
    for name in ("numpy", "cython"):
        if name == "cython" and _core is None:
            print("cython backend not built; skipping its end-to-end run")
            continue
        env = dict(os.environ, MCDF_KERNELS=name)
        proc = subprocess.run(
            [sys.executable, "-c", _E2E_SNIPPET],
            env=env, capture_output=True, text=True, check=True,
        )
        backend_name, seconds, value = proc.stdout.split()
        assert backend_name == name, proc.stdout
        rows.append((name, float(seconds), value))
        print(f"score (48 samples, 99 residues)  {name:<8}{float(seconds):>8.2f}s")
    if len(rows) == 2:
        assert rows[0][2] == rows[1][2], "backends disagree on the score"
        print(f"backends agree bit-for-bit; speedup {rows[0][1] / rows[1][1]:.1f}x")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5,
                        help="best-of repeats per micro-benchmark")
    parser.add_argument("--no-e2e", action="store_true",
                        help="skip the subprocess end-to-end comparison")
    args = parser.parse_args()
    if _core is None:
        print("note: compiled backend unavailable, timing NumPy only")
    run_micro(args.repeats)
    if not args.no_e2e:
        run_e2e()
    return 0


if __name__ == "__main__":
    sys.exit(main())
