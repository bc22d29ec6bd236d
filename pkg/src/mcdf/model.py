"""Deterministic masked-LM transformer with dropout injection hooks.

Pre-layer-norm blocks (x += Attn(LN(x)); x += MLP(LN(x)) with GELU),
learned absolute positional embeddings, untied output head, all math in
float64.  Inference-time dropout can be injected at the embedding
output (site 0) and after each of the first k transformer layers (layer
l is site 1+l); randomness comes only from the caller-supplied
stream(s): site s draws the stream child_seed(seed, s) from position 0
in row-major order, so a (params, tokens, plan, seed) tuple fully
determines the output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from mcdf import _kernels as kernels
from mcdf.errors import (
    ConfigError,
    EmptySequence,
    InvalidInjectionSite,
    InvalidTokenId,
    SequenceTooLong,
)
from mcdf.rng import SplitMix64, child_seed

INIT_STD = 0.02


@dataclass(frozen=True)
class ModelConfig:
    n_layers: int = 4
    d_model: int = 64
    n_heads: int = 4
    d_ff: int = 256
    n_t: int = 27
    max_len: int = 512
    ln_eps: float = 1e-5

    def __post_init__(self):
        for name in ("n_layers", "d_model", "n_heads", "d_ff", "n_t", "max_len"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.d_model % self.n_heads != 0:
            raise ConfigError(
                f"n_heads ({self.n_heads}) must divide d_model ({self.d_model})"
            )
        if not (isinstance(self.ln_eps, float) and self.ln_eps > 0):
            raise ConfigError(f"ln_eps must be a positive float, got {self.ln_eps!r}")

    @property
    def head_dim(self) -> int:
        return self.d_model // self.n_heads

    def to_dict(self) -> dict:
        return {
            "n_layers": self.n_layers,
            "d_model": self.d_model,
            "n_heads": self.n_heads,
            "d_ff": self.d_ff,
            "n_t": self.n_t,
            "max_len": self.max_len,
            "ln_eps": self.ln_eps,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        unknown = set(data) - {
            "n_layers", "d_model", "n_heads", "d_ff", "n_t", "max_len", "ln_eps",
        }
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)


def tensor_spec(config: ModelConfig) -> list[tuple[str, tuple[int, ...], str]]:
    """Canonical (name, shape, init kind) list; fixes file and init order."""
    d, ff = config.d_model, config.d_ff
    spec = [
        ("tok_emb", (config.n_t, d), "normal"),
        ("pos_emb", (config.max_len, d), "normal"),
    ]
    for i in range(config.n_layers):
        p = f"layers.{i}."
        spec += [
            (p + "ln1_g", (d,), "ones"),
            (p + "ln1_b", (d,), "zeros"),
            (p + "wq", (d, d), "normal"),
            (p + "wk", (d, d), "normal"),
            (p + "wv", (d, d), "normal"),
            (p + "wo", (d, d), "normal"),
            (p + "ln2_g", (d,), "ones"),
            (p + "ln2_b", (d,), "zeros"),
            (p + "mlp_w1", (d, ff), "normal"),
            (p + "mlp_b1", (ff,), "zeros"),
            (p + "mlp_w2", (ff, d), "normal"),
            (p + "mlp_b2", (d,), "zeros"),
        ]
    spec += [
        ("final_ln_g", (d,), "ones"),
        ("final_ln_b", (d,), "zeros"),
        ("head_w", (d, config.n_t), "normal"),
        ("head_b", (config.n_t,), "zeros"),
    ]
    return spec


@dataclass(frozen=True)
class Parameters:
    """Named float64 tensors plus the config that fixes their shapes.

    Immutable after construction; safe to share across concurrent
    forward passes.
    """

    config: ModelConfig
    tensors: dict[str, np.ndarray] = field(repr=False)

    def __post_init__(self):
        expected = {name: shape for name, shape, _ in tensor_spec(self.config)}
        if set(self.tensors) != set(expected):
            missing = sorted(set(expected) - set(self.tensors))
            extra = sorted(set(self.tensors) - set(expected))
            raise ConfigError(f"tensor set mismatch: missing={missing} extra={extra}")
        for name, t in self.tensors.items():
            if t.shape != expected[name]:
                raise ConfigError(
                    f"tensor {name}: shape {t.shape} != expected {expected[name]}"
                )
            if not np.all(np.isfinite(t)):
                raise ConfigError(f"tensor {name} contains non-finite values")

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def names(self) -> list[str]:
        return [name for name, _, _ in tensor_spec(self.config)]


def init_random(config: ModelConfig, seed: int) -> Parameters:
    """Scaled-normal initialization, deterministic given (config, seed).

    Weights ~ N(0, 0.02^2), layer-norm gains 1, biases 0; tensors drawn
    in canonical order from a single PCG64 generator.
    """
    gen = np.random.default_rng(seed & ((1 << 64) - 1))
    tensors = {}
    for name, shape, kind in tensor_spec(config):
        if kind == "normal":
            tensors[name] = gen.standard_normal(shape) * INIT_STD
        elif kind == "ones":
            tensors[name] = np.ones(shape)
        else:
            tensors[name] = np.zeros(shape)
    return Parameters(config=config, tensors=tensors)


def _validated_ids(params: Parameters, tokens) -> np.ndarray:
    ids = np.asarray(tokens, dtype=np.int64)
    if ids.ndim != 1:
        raise ValueError(f"expected a 1-d token sequence, got ndim={ids.ndim}")
    if ids.size == 0:
        raise EmptySequence("scoring requires at least one token")
    if ids.size > params.config.max_len:
        raise SequenceTooLong(
            f"sequence length {ids.size} exceeds max_len {params.config.max_len}"
        )
    if ids.min() < 0 or ids.max() >= params.config.n_t:
        raise InvalidTokenId(f"token ids must lie in [0, {params.config.n_t})")
    return ids


def embed(params: Parameters, tokens) -> np.ndarray:
    """Token + positional embedding rows, (n_a, d_model)."""
    ids = _validated_ids(params, tokens)
    return params["tok_emb"][ids] + params["pos_emb"][: ids.size]


def _attention(params, layer, x, key_mask, return_probs=False):
    cfg = params.config
    B, n, d = x.shape
    H, hd = cfg.n_heads, cfg.head_dim
    p = f"layers.{layer}."
    h = kernels.layer_norm(x, params[p + "ln1_g"], params[p + "ln1_b"], cfg.ln_eps)
    q = (h @ params[p + "wq"]).reshape(B, n, H, hd).transpose(0, 2, 1, 3)
    k = (h @ params[p + "wk"]).reshape(B, n, H, hd).transpose(0, 2, 1, 3)
    v = (h @ params[p + "wv"]).reshape(B, n, H, hd).transpose(0, 2, 1, 3)
    scores = (q @ k.transpose(0, 1, 3, 2)) * (1.0 / math.sqrt(hd))
    if key_mask is not None:
        scores = scores + key_mask
    probs = kernels.softmax_lastdim(scores)
    ctx = (probs @ v).transpose(0, 2, 1, 3).reshape(B, n, d)
    out = ctx @ params[p + "wo"]
    return (out, probs) if return_probs else out


def _mlp(params, layer, x):
    cfg = params.config
    p = f"layers.{layer}."
    h = kernels.layer_norm(x, params[p + "ln2_g"], params[p + "ln2_b"], cfg.ln_eps)
    inner = kernels.gelu(h @ params[p + "mlp_w1"] + params[p + "mlp_b1"])
    return inner @ params[p + "mlp_w2"] + params[p + "mlp_b2"]


def _dropout_site(x, rate, rngs, site):
    """One dropout site.  Site ``site`` of stream seed ``s`` always draws
    child_seed(s, site) from position 0, row-major, so a mask is a pure
    function of (seed, site, shape): masks for a shorter sequence are a
    prefix of the masks for the same sequence padded wider, and adding
    deeper sites never changes shallower ones.  A single stream is
    shared (broadcast) across the batch; a list gives each batch element
    its own stream."""
    B, n, d = x.shape
    if isinstance(rngs, (list, tuple)):
        if len(rngs) != B:
            raise ValueError(f"got {len(rngs)} streams for batch of {B}")
        out = np.empty_like(x)
        for b, rng in enumerate(rngs):
            out[b] = kernels.dropout(x[b], rate, child_seed(rng.seed, site), 0)
        return out
    scale = kernels.keep_scale(rate, child_seed(rngs.seed, site), 0, (n, d))
    return x * scale


def _key_mask(lengths, B, n):
    if lengths is None:
        return None
    mask = np.zeros((B, 1, 1, n))
    for b, length in enumerate(lengths):
        mask[b, :, :, length:] = -np.inf
    return mask


def _injection_state(params, injection, rngs):
    rate = float(getattr(injection, "rate", 0.0)) if injection is not None else 0.0
    if rate == 0.0:
        return 0.0, frozenset()
    if rngs is None:
        raise ValueError("dropout injection requires a seeded stream")
    sites = frozenset(injection.layer_sites(params.config.n_layers))
    if sites and max(sites) >= params.config.n_layers:
        raise InvalidInjectionSite(f"layer site {max(sites)} out of range")
    return rate, sites


def _logits_batch(params, ids, lengths=None, injection=None, rngs=None):
    cfg = params.config
    B, n = ids.shape
    if n > cfg.max_len:
        raise SequenceTooLong(f"sequence length {n} exceeds max_len {cfg.max_len}")
    rate, layer_sites = _injection_state(params, injection, rngs)
    x = params["tok_emb"][ids] + params["pos_emb"][:n]
    if rate > 0.0:
        x = _dropout_site(x, rate, rngs, site=0)
    key_mask = _key_mask(lengths, B, n)
    for layer in range(cfg.n_layers):
        x = x + _attention(params, layer, x, key_mask)
        x = x + _mlp(params, layer, x)
        if rate > 0.0 and layer in layer_sites:
            x = _dropout_site(x, rate, rngs, site=1 + layer)
    x = kernels.layer_norm(x, params["final_ln_g"], params["final_ln_b"], cfg.ln_eps)
    return x @ params["head_w"] + params["head_b"]


def forward_batch(params, ids, lengths=None, injection=None, rngs=None) -> np.ndarray:
    """Log-probability matrices for a PAD-padded batch, (B, n, n_t).

    ``lengths`` masks attention to PAD key columns so each sequence's
    rows are independent of batch composition; rows at positions >= its
    length are meaningless and must be dropped by the caller.
    """
    logits = _logits_batch(params, ids, lengths, injection, rngs)
    return kernels.log_softmax_lastdim(logits)


def forward(params: Parameters, tokens, injection=None, rng: SplitMix64 | None = None) -> np.ndarray:
    """Log-probability matrix (n_a, n_t) for one sequence.

    With no injection (or rate 0) the pass is fully deterministic; with
    an active plan, dropout consumes values only from ``rng``.
    """
    ids = _validated_ids(params, tokens)
    rngs = None if rng is None else [rng]
    return forward_batch(params, ids[np.newaxis, :], None, injection, rngs)[0]


def forward_logits(params: Parameters, tokens) -> np.ndarray:
    """Pre-log-softmax head outputs; introspection hook for numeric tests."""
    ids = _validated_ids(params, tokens)
    return _logits_batch(params, ids[np.newaxis, :])[0]


def attention_weights_probe(params: Parameters, tokens, layer: int, head: int) -> np.ndarray:
    """Post-softmax attention matrix (n_a, n_a) of one head, deterministic pass."""
    cfg = params.config
    if not 0 <= layer < cfg.n_layers:
        raise InvalidInjectionSite(f"layer {layer} out of range [0, {cfg.n_layers})")
    if not 0 <= head < cfg.n_heads:
        raise InvalidInjectionSite(f"head {head} out of range [0, {cfg.n_heads})")
    ids = _validated_ids(params, tokens)
    x = (params["tok_emb"][ids] + params["pos_emb"][: ids.size])[np.newaxis, :, :]
    for l in range(layer):
        x = x + _attention(params, l, x, None)
        x = x + _mlp(params, l, x)
    _, probs = _attention(params, layer, x, None, return_probs=True)
    return probs[0, head]
