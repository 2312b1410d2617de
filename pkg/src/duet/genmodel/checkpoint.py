"""Binary checkpoint format for model weights.

Layout (all integers little-endian):
  magic "MVAE1"
  u32 bars, vocab, embed_dim, enc_hidden, latent_dim, dec_hidden, conductor_dim
  i64 seed
  u8  temperature_scales_latent
  u64 step
  u32 tensor count, then per tensor:
    u16 name length, name (utf-8), u8 ndim, u32 dims..., float32 data
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .vae import ModelConfig, ModelError, ModelState, init_model, weight_shapes

MAGIC = b"MVAE1"


class CheckpointError(ModelError):
    pass


def save_checkpoint(state: ModelState, path: str | Path) -> None:
    c = state.config
    out = bytearray(MAGIC)
    out += struct.pack("<7I", c.bars, c.vocab, c.embed_dim, c.enc_hidden,
                       c.latent_dim, c.dec_hidden, c.conductor_dim)
    out += struct.pack("<qBQ", c.seed, int(c.temperature_scales_latent), state.step)
    names = [name for name, _ in weight_shapes(c)]
    out += struct.pack("<I", len(names))
    for name in names:
        arr = np.asarray(state.weights[name], dtype="<f4")
        encoded = name.encode()
        out += struct.pack("<H", len(encoded)) + encoded
        out += struct.pack("<B", arr.ndim)
        out += struct.pack(f"<{arr.ndim}I", *arr.shape)
        out += arr.tobytes()
    Path(path).write_bytes(bytes(out))


def load_checkpoint(path: str | Path) -> ModelState:
    data = Path(path).read_bytes()
    if data[:5] != MAGIC:
        raise CheckpointError("not a model checkpoint (bad magic)")
    pos = 5
    bars, vocab, embed_dim, enc_hidden, latent_dim, dec_hidden, conductor_dim = \
        struct.unpack_from("<7I", data, pos)
    pos += 28
    seed, scales_latent, step = struct.unpack_from("<qBQ", data, pos)
    pos += struct.calcsize("<qBQ")
    config = ModelConfig(bars=bars, vocab=vocab, embed_dim=embed_dim,
                         enc_hidden=enc_hidden, latent_dim=latent_dim,
                         dec_hidden=dec_hidden, conductor_dim=conductor_dim,
                         seed=seed, temperature_scales_latent=bool(scales_latent))
    expected = dict(weight_shapes(config))
    (count,) = struct.unpack_from("<I", data, pos)
    pos += 4
    state = init_model(config)
    state.step = step
    seen = set()
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", data, pos)
        pos += 2
        name = data[pos:pos + name_len].decode()
        pos += name_len
        (ndim,) = struct.unpack_from("<B", data, pos)
        pos += 1
        shape = struct.unpack_from(f"<{ndim}I", data, pos)
        pos += 4 * ndim
        size = int(np.prod(shape)) if ndim else 1
        arr = np.frombuffer(data, dtype="<f4", count=size, offset=pos)
        pos += 4 * size
        if name not in expected:
            raise CheckpointError(f"unexpected tensor {name!r}")
        if tuple(shape) != tuple(expected[name]):
            raise CheckpointError(
                f"tensor {name!r} shape {tuple(shape)} does not match config "
                f"{tuple(expected[name])}")
        state.weights[name] = arr.reshape(shape).astype(float)
        seen.add(name)
    missing = set(expected) - seen
    if missing:
        raise CheckpointError(f"missing tensors: {sorted(missing)}")
    return state
