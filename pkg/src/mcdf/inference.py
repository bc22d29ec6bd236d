"""Inference-time dropout, Monte-Carlo averaging, and sequence scoring.

The proxy for one sequence is the sum of all entries of its
log-probability matrix, averaged over stochastic forward passes.
Sample k draws its dropout masks from the stream family rooted at
``child_seed(base_seed, k)`` (one child stream per injection site), so
the estimate is independent of execution order, batch padding, and how
samples are split across worker threads.  MCDF_THREADS caps the worker
count (0 or unset = one per CPU).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from mcdf import _kernels as kernels
from mcdf import model as _model
from mcdf.errors import ConfigError, InvalidInjectionSite, InvalidRate, NonFiniteInput
from mcdf.rng import SplitMix64, child_seed
from mcdf.vocab import PAD_ID

# Samples are reduced in fixed-size chunks so the accumulation order is
# identical no matter how many threads execute them.
SAMPLE_CHUNK = 8


@dataclass(frozen=True)
class InjectionPlan:
    """Where and how strongly dropout is injected at inference time.

    Sites are the embedding output plus the outputs of the first
    ceil(depth_fraction * n_layers) transformer layers; kept activations
    are scaled by 1/(1-rate) (inverted scaling).
    """

    rate: float
    depth_fraction: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.rate < 1.0:
            raise InvalidRate(f"dropout rate must lie in [0, 1), got {self.rate}")
        if not 0.0 <= self.depth_fraction <= 1.0:
            raise InvalidInjectionSite(
                f"depth_fraction must lie in [0, 1], got {self.depth_fraction}"
            )

    def layer_sites(self, n_layers: int) -> range:
        return range(math.ceil(self.depth_fraction * n_layers))


@dataclass(frozen=True)
class MCConfig:
    """Monte-Carlo sample count and the base seed child seeds derive from."""

    n_samples: int
    base_seed: int = 0

    def __post_init__(self):
        if not isinstance(self.n_samples, int) or self.n_samples < 1:
            raise ConfigError(f"n_samples must be >= 1, got {self.n_samples!r}")


DEFAULT_MC = MCConfig(n_samples=100, base_seed=0)


def thread_count() -> int:
    raw = os.environ.get("MCDF_THREADS", "0")
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"MCDF_THREADS must be an integer, got {raw!r}") from None
    if value < 0:
        raise ConfigError(f"MCDF_THREADS must be >= 0, got {value}")
    return value if value > 0 else (os.cpu_count() or 1)


def _map_ordered(fn, items):
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _sample_chunks(n_samples: int) -> list[range]:
    return [
        range(start, min(start + SAMPLE_CHUNK, n_samples))
        for start in range(0, n_samples, SAMPLE_CHUNK)
    ]


def apply_dropout(x, rate: float, rng: SplitMix64) -> np.ndarray:
    """Inverted dropout: keep each entry with probability 1-rate, scale
    kept entries by 1/(1-rate); consumes rng in row-major order.

    Rate 0 returns x unchanged bit-for-bit.
    """
    if not 0.0 <= rate < 1.0:
        raise InvalidRate(f"dropout rate must lie in [0, 1), got {rate}")
    x = np.asarray(x, dtype=np.float64)
    return kernels.dropout(x, float(rate), rng.seed, rng.advance(x.size))


def score(logprobs) -> float:
    """The scalar proxy: sum of every entry of the matrix."""
    arr = np.asarray(logprobs, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput("log-probability matrix contains NaN or Inf")
    return float(arr.sum())


def mc_average_logprobs(
    params: _model.Parameters,
    tokens,
    plan: InjectionPlan | None,
    mc: MCConfig,
) -> np.ndarray:
    """Arithmetic mean of n_samples stochastic log-probability matrices.

    Rate 0 (or no plan) reduces to the single deterministic pass, making
    the result independent of n_samples and base_seed.  Otherwise sample
    k uses child_seed(base_seed, k); samples are computed in fixed-size
    chunks and reduced in chunk order, so the result is bit-identical
    under sequential and threaded execution.
    """
    ids = _model._validated_ids(params, tokens)
    if plan is None or plan.rate == 0.0:
        return _model.forward(params, tokens)

    batch_ids = np.tile(ids, (SAMPLE_CHUNK, 1))

    def chunk_sum(ks: range) -> np.ndarray:
        rngs = [SplitMix64(child_seed(mc.base_seed, k)) for k in ks]
        out = _model.forward_batch(
            params, batch_ids[: len(rngs)], None, plan, rngs
        )
        return np.add.reduce(out, axis=0)

    partials = _map_ordered(chunk_sum, _sample_chunks(mc.n_samples))
    total = partials[0]
    for part in partials[1:]:
        total = total + part
    return total / mc.n_samples


def score_sequence(
    params: _model.Parameters,
    tokens,
    plan: InjectionPlan | None = None,
    mc: MCConfig | None = None,
) -> float:
    """ŷ for one sequence: score of the MC-averaged matrix."""
    return score(mc_average_logprobs(params, tokens, plan, mc or DEFAULT_MC))


def _pad_batch(params, sequences):
    ids_list = [_model._validated_ids(params, seq) for seq in sequences]
    lengths = np.array([ids.size for ids in ids_list], dtype=np.int64)
    n = int(lengths.max())
    batch = np.full((len(ids_list), n), PAD_ID, dtype=np.int64)
    for i, ids in enumerate(ids_list):
        batch[i, : ids.size] = ids
    ragged = int(lengths.min()) != n
    return batch, (lengths if ragged else None), lengths


def _masked_row_sums(logprobs, lengths) -> np.ndarray:
    return np.array(
        [float(logprobs[i, :length].sum()) for i, length in enumerate(lengths)]
    )


def score_sequences(
    params: _model.Parameters,
    sequences,
    plan: InjectionPlan | None = None,
    mc: MCConfig | None = None,
) -> np.ndarray:
    """ŷ for a batch of sequences via batched forward passes.

    Sample k's mask at each site depends only on (base_seed, k, site)
    and is consumed row-major from position 0, so every sequence in the
    batch sees exactly the mask rows it would see when scored alone, no
    matter how the batch is padded; attention masking keeps each row
    sum independent of batch composition.  Equivalent to score_sequence
    per element up to float rounding in the batched matrix products.
    """
    if len(sequences) == 0:
        return np.zeros(0)
    batch, mask_lengths, lengths = _pad_batch(params, sequences)
    if plan is None or plan.rate == 0.0:
        avg = _model.forward_batch(params, batch, mask_lengths)
        return _masked_row_sums(avg, lengths)
    mc = mc or DEFAULT_MC

    def chunk_sum(ks: range) -> np.ndarray:
        acc = None
        for k in ks:
            rng = SplitMix64(child_seed(mc.base_seed, k))
            out = _model.forward_batch(params, batch, mask_lengths, plan, rng)
            acc = out if acc is None else acc + out
        return acc

    partials = _map_ordered(chunk_sum, _sample_chunks(mc.n_samples))
    total = partials[0]
    for part in partials[1:]:
        total = total + part
    return _masked_row_sums(total / mc.n_samples, lengths)
