"""Binary weight file format.

Little-endian layout:

    magic "MCDF" | version u32 | n_layers d_model n_heads d_ff n_t max_len (u32 each)
    | ln_eps f64 | n_tensors u32
    | per tensor: name_len u32, name bytes, rank u32, dims u32*rank, float64 payload
    | fnv1a64 checksum (u64) over all tensor payload bytes in file order

Tensors appear in the canonical order of ``tensor_spec``; round-trips
are bit-exact.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from mcdf import _kernels as kernels
from mcdf.errors import ChecksumMismatch, ShapeMismatch, UnsupportedVersion, WeightFormatError
from mcdf.model import ModelConfig, Parameters, tensor_spec

MAGIC = b"MCDF"
VERSION = 1

_HEAD = struct.Struct("<4sI")
_CONFIG = struct.Struct("<6Id")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")


def save_weights(params: Parameters, path) -> None:
    cfg = params.config
    checksum = kernels.FNV_OFFSET
    with open(path, "wb") as f:
        f.write(_HEAD.pack(MAGIC, VERSION))
        f.write(
            _CONFIG.pack(
                cfg.n_layers, cfg.d_model, cfg.n_heads, cfg.d_ff,
                cfg.n_t, cfg.max_len, cfg.ln_eps,
            )
        )
        names = params.names()
        f.write(_U32.pack(len(names)))
        for name in names:
            tensor = params[name]
            encoded = name.encode("utf-8")
            f.write(_U32.pack(len(encoded)))
            f.write(encoded)
            f.write(_U32.pack(tensor.ndim))
            for dim in tensor.shape:
                f.write(_U32.pack(dim))
            payload = np.ascontiguousarray(tensor).astype("<f8").tobytes()
            checksum = kernels.fnv1a64(payload, checksum)
            f.write(payload)
        f.write(_U64.pack(checksum))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise WeightFormatError("truncated weight file")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return _U32.unpack(self.take(4))[0]


def load_weights(path) -> Parameters:
    """Decode a weight file; bit-exact inverse of save_weights.

    Raises UnsupportedVersion for unknown versions, ShapeMismatch when a
    stored tensor disagrees with the stored config, ChecksumMismatch on
    corrupted payload bytes.
    """
    data = Path(path).read_bytes()
    r = _Reader(data)
    magic, version = _HEAD.unpack(r.take(_HEAD.size))
    if magic != MAGIC:
        raise WeightFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise UnsupportedVersion(f"unsupported weight format version {version}")
    n_layers, d_model, n_heads, d_ff, n_t, max_len, ln_eps = _CONFIG.unpack(
        r.take(_CONFIG.size)
    )
    config = ModelConfig(
        n_layers=n_layers, d_model=d_model, n_heads=n_heads, d_ff=d_ff,
        n_t=n_t, max_len=max_len, ln_eps=ln_eps,
    )
    n_tensors = r.u32()

    records: list[tuple[str, tuple[int, ...], bytes]] = []
    checksum = kernels.FNV_OFFSET
    for _ in range(n_tensors):
        name = r.take(r.u32()).decode("utf-8")
        rank = r.u32()
        shape = tuple(r.u32() for _ in range(rank))
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        payload = r.take(count * 8)
        checksum = kernels.fnv1a64(payload, checksum)
        records.append((name, shape, payload))
    stored = _U64.unpack(r.take(8))[0]
    if r.pos != len(data):
        raise WeightFormatError(f"{len(data) - r.pos} trailing bytes")
    if stored != checksum:
        raise ChecksumMismatch(
            f"checksum {checksum:#018x} != stored {stored:#018x}"
        )

    expected = {name: shape for name, shape, _ in tensor_spec(config)}
    tensors = {}
    for name, shape, payload in records:
        if name not in expected:
            raise ShapeMismatch(f"unexpected tensor {name!r}")
        if shape != expected[name]:
            raise ShapeMismatch(
                f"tensor {name}: stored shape {shape} != expected {expected[name]}"
            )
        tensors[name] = np.frombuffer(payload, dtype="<f8").reshape(shape).astype(
            np.float64
        )
    if set(tensors) != set(expected):
        raise ShapeMismatch("weight file does not cover the full tensor set")
    return Parameters(config=config, tensors=tensors)
